//! The full evaluation protocol: every image under every stand-in PSF at
//! every noise level, restored by both methods, in one CSV.

use std::path::{Path, PathBuf};

use hybridtv::degrade::{stand_in_psfs, NoiseSpec};
use hybridtv::metrics::SsimConfig;
use hybridtv::solver::SolverConfig;
use hybridtv::{synth, ColorImage};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{degrade_color, load_input, quality, restore};
use crate::error::{CliError, CliResult};
use crate::manifest::SolverOverrides;
use crate::report::{write_csv, MetricsRow};

/// Method label of the unrestored observation.
pub const METHOD_DEGRADED: &str = "degraded";

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkPlan {
    /// Synthetic scene names (`shapes`, `texture`, `step`) or PNM paths.
    pub images: Vec<String>,
    /// Side of the synthetic scenes.
    pub size: usize,
    pub noise_levels: Vec<f64>,
    /// Cell `i` (in row order) draws its noise with seed `seed + i`.
    pub seed: u64,
    pub solver: SolverOverrides,
    pub metrics: SsimConfig,
}

impl Default for BenchmarkPlan {
    fn default() -> Self {
        Self {
            images: vec!["shapes".into(), "texture".into()],
            size: 128,
            noise_levels: vec![0.0, 1.0, 2.0, 5.0],
            seed: 0,
            solver: SolverOverrides::default(),
            metrics: SsimConfig::default(),
        }
    }
}

struct Cell {
    image: usize,
    psf: usize,
    noise: usize,
    seed: u64,
}

fn load_scene(name: &str, size: usize) -> CliResult<(String, ColorImage)> {
    if let Some(img) = synth::by_name(name, size, size) {
        return Ok((name.to_string(), ColorImage::gray(img)));
    }
    let path = PathBuf::from(name);
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_string());
    Ok((id, load_input(&path)?))
}

/// Rows in image, PSF, noise order; per cell the degraded observation,
/// the hybrid model and the convex baseline.
pub fn run_benchmark(plan: &BenchmarkPlan) -> CliResult<Vec<MetricsRow>> {
    if plan.images.is_empty() || plan.noise_levels.is_empty() {
        return Err(CliError::invalid("missing-input", "benchmark needs images and noise levels"));
    }
    let scenes = plan
        .images
        .iter()
        .map(|name| load_scene(name, plan.size))
        .collect::<CliResult<Vec<_>>>()?;
    let psfs = stand_in_psfs()
        .iter()
        .map(|(id, spec)| Ok((*id, spec.build()?)))
        .collect::<CliResult<Vec<_>>>()?;
    for &level in &plan.noise_levels {
        let mut cfg = SolverConfig::for_noise(level);
        plan.solver.apply(&mut cfg);
        cfg.validate()?;
    }

    let mut cells = Vec::new();
    for image in 0..scenes.len() {
        for psf in 0..psfs.len() {
            for noise in 0..plan.noise_levels.len() {
                let seed = plan.seed.wrapping_add(cells.len() as u64);
                cells.push(Cell { image, psf, noise, seed });
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|cell| {
            let (id, f) = &scenes[cell.image];
            let (psf_id, psf) = &psfs[cell.psf];
            let level = plan.noise_levels[cell.noise];
            let spec = NoiseSpec {
                level_percent: level,
                seed: cell.seed,
            };
            let g = degrade_color(f, psf, &spec)?;
            let mut cfg = SolverConfig::for_noise(level);
            plan.solver.apply(&mut cfg);
            let row = |method: &str, mssim, psnr, iterations, wall_time_s| MetricsRow {
                image_id: id.clone(),
                psf_id: psf_id.to_string(),
                noise_percent: level,
                method: method.to_string(),
                mssim,
                psnr,
                iterations,
                wall_time_s,
            };
            let q = quality(f, &g, &plan.metrics)?;
            let mut out = vec![row(METHOD_DEGRADED, q.mssim, q.psnr, None, None)];
            for cfg in [cfg.clone(), cfg.baseline_tv()] {
                let (restored, reports) = restore(&g, psf, &cfg, None)?;
                let q = quality(f, &restored, &plan.metrics)?;
                out.push(row(
                    cfg.method_label(),
                    q.mssim,
                    q.psnr,
                    reports.iter().map(|r| r.iterations).max(),
                    Some(reports.iter().map(|r| r.wall_time_s).sum()),
                ));
            }
            Ok(out)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Runs the plan and writes `benchmark.csv` under `out`.
pub fn cmd_benchmark(plan: &BenchmarkPlan, out: &Path) -> CliResult<Vec<MetricsRow>> {
    let rows = run_benchmark(plan)?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::invalid("output-not-writable", format!("{}: {e}", out.display())))?;
    write_csv(&out.join("benchmark.csv"), &rows)?;
    Ok(rows)
}
