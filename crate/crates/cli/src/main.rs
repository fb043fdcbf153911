use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybridtv_cli::benchmark::{cmd_benchmark, BenchmarkPlan};
use hybridtv_cli::commands::{cmd_deblur, cmd_degrade, cmd_evaluate, cmd_sweep, EvalLabels};
use hybridtv_cli::report::{to_csv, METRICS_HEADER, SWEEP_HEADER};
use hybridtv::pnm::save_pgm;
use hybridtv::synth;
use hybridtv_cli::{CliError, CliResult, Overrides, RunManifest, SolverOverrides};

/// Non-blind deblurring with the constrained non-convex hybrid TV model.
#[derive(Parser)]
#[command(name = "hybridtv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur and add seeded Gaussian noise.
    Degrade(Common),
    /// Restore degraded images.
    Deblur(Common),
    /// Score test images against references (files or directories).
    Evaluate(EvaluateArgs),
    /// Restore once per (nu1, nu2) cell and score each result.
    Sweep(Common),
    /// Every image x stand-in PSF x noise level, both methods, one CSV.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic test scene as PGM.
    Scene(SceneArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// shapes, texture or step.
    name: String,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    mu: Option<f64>,
    /// Sets beta1 = beta2 = beta3.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    nu1: Option<f64>,
    #[arg(long)]
    nu2: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverFlags {
    fn overrides(&self) -> SolverOverrides {
        SolverOverrides {
            mu: self.mu,
            beta: self.beta,
            nu1: self.nu1,
            nu2: self.nu2,
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Args)]
struct Common {
    /// JSON run manifest; flags override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Input image(s), PGM or PPM.
    #[arg(long = "input", short = 'i')]
    inputs: Vec<PathBuf>,
    /// Ground-truth image for metrics.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel text file or spec (delta:N, gaussian:N:STD, motion:N:LEN:DEG, disk:N:R).
    #[arg(long)]
    psf: Option<String>,
    /// Label for CSV rows.
    #[arg(long)]
    psf_id: Option<String>,
    /// Noise standard deviation in percent of 255.
    #[arg(long)]
    noise: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Plain convex TV: nu1 = nu2 = 1, zeta = 1.
    #[arg(long)]
    baseline_tv: bool,
    /// Write the zeta map after every outer iteration.
    #[arg(long)]
    debug_zeta: bool,
}

impl Common {
    fn resolve(&self) -> CliResult<(RunManifest, Overrides)> {
        let mut manifest = match &self.manifest {
            Some(path) => RunManifest::load(path)?,
            None => RunManifest::default(),
        };
        let flags = Overrides {
            inputs: self.inputs.clone(),
            reference: self.reference.clone(),
            out: self.out.clone(),
            seed: self.seed,
            psf: self.psf.clone(),
            psf_id: self.psf_id.clone(),
            noise: self.noise,
            solver: self.solver.overrides(),
            baseline_tv: self.baseline_tv,
            debug_zeta: self.debug_zeta,
        };
        flags.apply(&mut manifest);
        Ok((manifest, flags))
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Directory for metrics.csv; rows are always printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "")]
    psf_id: String,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "")]
    method: String,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    wall_time_s: Option<f64>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Synthetic scene names (shapes, texture, step) or PNM paths.
    #[arg(long = "image", default_values_t = ["shapes".to_string(), "texture".to_string()])]
    images: Vec<String>,
    /// Side of the synthetic scenes.
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long = "noise", value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0, 5.0])]
    noise_levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Degrade(args) => {
            let (manifest, flags) = args.resolve()?;
            for r in cmd_degrade(&manifest, &flags)? {
                println!("{}", r.output.display());
            }
        }
        Command::Deblur(args) => {
            let (manifest, flags) = args.resolve()?;
            for r in cmd_deblur(&manifest, &flags)? {
                let quality = r
                    .quality
                    .map(|q| format!(" mssim={:.4} psnr={:.2}", q.mssim, q.psnr))
                    .unwrap_or_default();
                println!(
                    "{} method={} iterations={}{quality}",
                    r.output.display(),
                    r.method,
                    r.iterations
                );
            }
        }
        Command::Evaluate(args) => {
            let labels = EvalLabels {
                psf_id: args.psf_id,
                noise_percent: args.noise,
                method: args.method,
                iterations: args.iterations,
                wall_time_s: args.wall_time_s,
            };
            let rows = cmd_evaluate(
                &args.reference,
                &args.test,
                &Default::default(),
                &labels,
                args.out.as_deref(),
            )?;
            print!("{}", to_csv(&rows, METRICS_HEADER)?);
        }
        Command::Sweep(args) => {
            let (manifest, flags) = args.resolve()?;
            let outcome = cmd_sweep(&manifest, &flags)?;
            print!("{}", to_csv(&outcome.rows, SWEEP_HEADER)?);
            if let Some(best) = outcome.argmax {
                eprintln!("argmax nu1={} nu2={} mssim={:.4}", best.nu1, best.nu2, best.mssim);
            }
        }
        Command::Benchmark(args) => {
            let plan = BenchmarkPlan {
                images: args.images,
                size: args.size,
                noise_levels: args.noise_levels,
                seed: args.seed,
                solver: args.solver.overrides(),
                ..BenchmarkPlan::default()
            };
            let rows = cmd_benchmark(&plan, &args.out)?;
            print!("{}", to_csv(&rows, METRICS_HEADER)?);
        }
        Command::Scene(args) => {
            let img = synth::by_name(&args.name, args.size, args.size).ok_or_else(|| {
                CliError::invalid("invalid-argument", format!("unknown scene {:?}", args.name))
            })?;
            save_pgm(&img, &args.out).map_err(CliError::writing)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.line());
            ExitCode::from(err.code as u8)
        }
    }
}
