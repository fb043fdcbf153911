//! Command-line harness for the `hybridtv` deblurring toolkit: synthetic
//! degradation, restoration, quality evaluation, `(ν₁, ν₂)` sweeps and the
//! full benchmark protocol, with JSON and CSV reporting.

pub mod benchmark;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod report;

pub use error::{CliError, CliResult, EXIT_DIVERGED, EXIT_INVALID};
pub use manifest::{Overrides, RunManifest, SolverOverrides};
