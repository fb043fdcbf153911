//! One-file run description plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use hybridtv::degrade::{NoiseSpec, PsfSpec};
use hybridtv::metrics::SsimConfig;
use hybridtv::solver::SolverConfig;
use hybridtv::Psf;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a subcommand needs. Every field has a default, so a manifest
/// naming only an input and a PSF is complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    /// Images to degrade or restore. `sweep` uses the first one.
    pub inputs: Vec<PathBuf>,
    /// Ground truth, for metrics.
    pub reference: Option<PathBuf>,
    /// A kernel spec such as `gaussian:13:2`, or a kernel text file.
    pub psf: Option<String>,
    /// Label written to CSV rows; defaults to the PSF string.
    pub psf_id: Option<String>,
    pub noise: NoiseSpec,
    /// Solver parameters; when absent they follow the noise level.
    pub solver: Option<SolverConfig>,
    pub baseline_tv: bool,
    pub out: PathBuf,
    pub metrics: SsimConfig,
    /// `(ν₁, ν₂)` cells for `sweep`.
    pub grid: Option<Vec<(f64, f64)>>,
    pub debug_zeta: bool,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            reference: None,
            psf: None,
            psf_id: None,
            noise: NoiseSpec::default(),
            solver: None,
            baseline_tv: false,
            out: PathBuf::from("out"),
            metrics: SsimConfig::default(),
            grid: None,
            debug_zeta: false,
        }
    }
}

/// The sweep grid used when a manifest gives none: 7 × 7 over
/// `{0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0}`.
pub fn default_grid() -> Vec<(f64, f64)> {
    const AXIS: [f64; 7] = [0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 1.0];
    AXIS.iter()
        .flat_map(|&a| AXIS.iter().map(move |&b| (a, b)))
        .collect()
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            let err = hybridtv::Error::Io {
                path: path.to_path_buf(),
                source: e,
            };
            CliError::reading(err)
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Solver parameters after defaults and the baseline switch.
    pub fn solver_config(&self) -> SolverConfig {
        let cfg = self
            .solver
            .clone()
            .unwrap_or_else(|| SolverConfig::for_noise(self.noise.level_percent));
        if self.baseline_tv {
            cfg.baseline_tv()
        } else {
            cfg
        }
    }

    pub fn psf(&self) -> CliResult<Psf> {
        let text = self
            .psf
            .as_deref()
            .ok_or_else(|| CliError::invalid("missing-psf", "no psf spec or path given"))?;
        resolve_psf(text)
    }

    pub fn psf_label(&self) -> String {
        self.psf_id
            .clone()
            .or_else(|| self.psf.clone())
            .unwrap_or_default()
    }

    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.grid.clone().unwrap_or_else(default_grid)
    }
}

/// A kernel file if `text` names an existing file, otherwise a kernel spec.
pub fn resolve_psf(text: &str) -> CliResult<Psf> {
    let path = Path::new(text);
    if path.is_file() {
        return Psf::load(path).map_err(CliError::reading);
    }
    match text.parse::<PsfSpec>() {
        Ok(spec) => Ok(spec.build()?),
        Err(_) if !text.contains(':') => Err(CliError::invalid(
            "input-not-found",
            format!("psf file {text} does not exist"),
        )),
        Err(e) => Err(CliError::invalid("invalid-psf", e.to_string())),
    }
}

/// Solver knobs settable from the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, cfg: &mut SolverConfig) {
        if let Some(mu) = self.mu {
            cfg.mu = mu;
        }
        if let Some(beta) = self.beta {
            *cfg = cfg.clone().with_beta(beta);
        }
        if let Some(nu1) = self.nu1 {
            cfg.weights.nu1 = nu1;
        }
        if let Some(nu2) = self.nu2 {
            cfg.weights.nu2 = nu2;
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
    }
}

/// Command-line flags; any flag given wins over the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psf: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psf_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(flatten)]
    pub solver: SolverOverrides,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub baseline_tv: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub debug_zeta: bool,
}

impl Overrides {
    /// Folds the flags into `manifest`. Noise is applied before the solver
    /// defaults are resolved, so `--noise` alone selects the matching
    /// parameter set.
    pub fn apply(&self, manifest: &mut RunManifest) {
        if !self.inputs.is_empty() {
            manifest.inputs = self.inputs.clone();
        }
        if let Some(r) = &self.reference {
            manifest.reference = Some(r.clone());
        }
        if let Some(o) = &self.out {
            manifest.out = o.clone();
        }
        if let Some(s) = self.seed {
            manifest.noise.seed = s;
        }
        if let Some(p) = &self.psf {
            manifest.psf = Some(p.clone());
        }
        if let Some(id) = &self.psf_id {
            manifest.psf_id = Some(id.clone());
        }
        if let Some(n) = self.noise {
            manifest.noise.level_percent = n;
        }
        if self.solver != SolverOverrides::default() {
            let mut cfg = manifest
                .solver
                .clone()
                .unwrap_or_else(|| SolverConfig::for_noise(manifest.noise.level_percent));
            self.solver.apply(&mut cfg);
            manifest.solver = Some(cfg);
        }
        manifest.baseline_tv |= self.baseline_tv;
        manifest.debug_zeta |= self.debug_zeta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_manifest_parses() {
        let m: RunManifest =
            serde_json::from_str(r#"{"inputs": ["a.pgm"], "psf": "gaussian:13:2"}"#).unwrap();
        assert_eq!(m.out, PathBuf::from("out"));
        assert_eq!(m.solver_config(), SolverConfig::default());
        assert_eq!(m.grid().len(), 49);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(serde_json::from_str::<RunManifest>(r#"{"input": "a.pgm"}"#).is_err());
    }

    #[test]
    fn flags_win() {
        let mut m = RunManifest {
            noise: NoiseSpec {
                level_percent: 1.0,
                seed: 3,
            },
            ..RunManifest::default()
        };
        let o = Overrides {
            seed: Some(9),
            noise: Some(2.0),
            solver: SolverOverrides {
                nu1: Some(0.3),
                max_iters: Some(7),
                ..Default::default()
            },
            ..Default::default()
        };
        o.apply(&mut m);
        let cfg = m.solver_config();
        assert_eq!(m.noise.seed, 9);
        assert_eq!(cfg.weights.nu1, 0.3);
        assert_eq!(cfg.max_iters, 7);
        // the remaining parameters follow the overridden noise level
        assert_eq!(cfg.mu, SolverConfig::for_noise(2.0).mu);
    }

    #[test]
    fn baseline_switch_relabels() {
        let m = RunManifest {
            baseline_tv: true,
            ..RunManifest::default()
        };
        assert_eq!(m.solver_config().method_label(), hybridtv::solver::METHOD_BASELINE);
    }

    #[test]
    fn psf_resolution() {
        assert_eq!(resolve_psf("delta:3").unwrap().size(), 3);
        assert_eq!(resolve_psf("no/such/file.txt").unwrap_err().reason, "input-not-found");
        assert_eq!(resolve_psf("blob:3").unwrap_err().reason, "invalid-psf");
    }
}
