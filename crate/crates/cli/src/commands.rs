//! The subcommands. Each takes a fully resolved [`RunManifest`], writes its
//! artifacts under `manifest.out`, and returns what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use hybridtv::degrade::{degrade, NoiseSpec, NOISE_GENERATOR};
use hybridtv::metrics::{mssim_color, psnr_color, SsimConfig};
use hybridtv::pnm::{load_pnm, save_pgm, save_pnm};
use hybridtv::solver::{Solver, SolverConfig, SolverReport};
use hybridtv::{ColorImage, Image, Psf};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::manifest::{Overrides, RunManifest};
use crate::report::{write_csv, MetricsRow, SweepRow};

/// How the noise percentage maps to gray levels; echoed in every report.
pub const NOISE_SEMANTICS: &str = "sigma = level_percent / 100 * 255 gray levels";
/// How colour MSSIM is aggregated; echoed in every report.
pub const COLOR_MSSIM: &str = "per-plane mean";

pub(crate) fn load_input(path: &Path) -> CliResult<ColorImage> {
    load_pnm(path).map_err(CliError::reading)
}

fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::invalid(
            "output-not-writable",
            format!("{}: {e}", dir.display()),
        )
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| {
        CliError::invalid("output-not-writable", format!("{}: {e}", path.display()))
    })
}

fn image_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn pnm_name(stem: &str, suffix: &str, planes: usize) -> String {
    let ext = if planes == 1 { "pgm" } else { "ppm" };
    format!("{stem}_{suffix}.{ext}")
}

fn require_inputs(manifest: &RunManifest) -> CliResult<&[PathBuf]> {
    if manifest.inputs.is_empty() {
        return Err(CliError::invalid("missing-input", "no input image given"));
    }
    Ok(&manifest.inputs)
}

fn check_same_dims(a: &ColorImage, b: &ColorImage, what: &str) -> CliResult<()> {
    if a.dims() != b.dims() || a.num_planes() != b.num_planes() {
        return Err(CliError::invalid(
            "dimension-mismatch",
            format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                a.width(),
                a.height(),
                a.num_planes(),
                b.width(),
                b.height(),
                b.num_planes()
            ),
        ));
    }
    Ok(())
}

/// Plane `k` of a colour image gets seed `seed + k`.
pub fn degrade_color(f: &ColorImage, psf: &Psf, noise: &NoiseSpec) -> hybridtv::Result<ColorImage> {
    let planes = f
        .planes()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let spec = NoiseSpec {
                seed: noise.seed.wrapping_add(k as u64),
                ..*noise
            };
            degrade(p, psf, &spec)
        })
        .collect::<hybridtv::Result<Vec<_>>>()?;
    ColorImage::new(planes)
}

#[derive(Debug, Clone, Serialize)]
pub struct DegradeRecord {
    pub input: PathBuf,
    pub output: PathBuf,
    pub psf_file: PathBuf,
    pub psf: String,
    pub noise_percent: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    pub generator: &'static str,
    pub noise_semantics: &'static str,
}

/// Blurs and corrupts every input. Writes `<stem>_degraded.pgm|ppm`,
/// `<stem>_psf.txt` and `<stem>_degrade.json` per input.
pub fn cmd_degrade(manifest: &RunManifest, flags: &Overrides) -> CliResult<Vec<DegradeRecord>> {
    let inputs = require_inputs(manifest)?;
    let psf = manifest.psf()?;
    ensure_out_dir(&manifest.out)?;
    let mut records = Vec::new();
    for input in inputs {
        let f = load_input(input)?;
        let g = degrade_color(&f, &psf, &manifest.noise)?;
        let stem = image_id(input);
        let output = manifest.out.join(pnm_name(&stem, "degraded", g.num_planes()));
        save_pnm(&g, &output).map_err(CliError::writing)?;
        let psf_file = manifest.out.join(format!("{stem}_psf.txt"));
        psf.save(&psf_file).map_err(CliError::writing)?;
        let record = DegradeRecord {
            input: input.clone(),
            output,
            psf_file,
            psf: manifest.psf_label(),
            noise_percent: manifest.noise.level_percent,
            noise_sigma: manifest.noise.sigma(),
            seed: manifest.noise.seed,
            generator: NOISE_GENERATOR,
            noise_semantics: NOISE_SEMANTICS,
        };
        write_json(
            &manifest.out.join(format!("{stem}_degrade.json")),
            &json!({ "record": record, "manifest": manifest, "flags": flags }),
        )?;
        records.push(record);
    }
    Ok(records)
}

/// Quality of `test` against `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quality {
    pub mssim: f64,
    pub psnr: f64,
}

pub fn quality(reference: &ColorImage, test: &ColorImage, cfg: &SsimConfig) -> CliResult<Quality> {
    check_same_dims(reference, test, "reference and test differ in size")?;
    let mssim = mssim_color(reference, test, cfg)?;
    let psnr = psnr_color(reference, test, 255.0)?;
    Ok(Quality { mssim, psnr })
}

/// Restores every plane independently. When `zeta_dir` is given, ζ after
/// each outer iteration is written there as `<stem>_p<k>_it<NNNN>.pgm`
/// (ζ scaled by 255) and the final raw values as `<stem>_p<k>_zeta.txt`.
pub fn restore(
    g: &ColorImage,
    psf: &Psf,
    cfg: &SolverConfig,
    zeta_dir: Option<(&Path, &str)>,
) -> CliResult<(ColorImage, Vec<SolverReport>)> {
    let mut reports = Vec::new();
    for (k, plane) in g.planes().iter().enumerate() {
        let solver = Solver::new(plane, psf, cfg.clone())?;
        let mut write_err = None;
        let mut last_zeta = None;
        let report = solver.run_with(|state| {
            if let (Some((dir, stem)), None) = (zeta_dir, &write_err) {
                let path = dir.join(format!("{stem}_p{k}_it{:04}.pgm", state.iter));
                if let Err(e) = save_pgm(&state.zeta.map(|z| 255.0 * z), &path) {
                    write_err = Some(e);
                }
                last_zeta = Some(state.zeta.clone());
            }
        })?;
        if let Some(e) = write_err {
            return Err(CliError::writing(e));
        }
        if let (Some((dir, stem)), Some(z)) = (zeta_dir, last_zeta) {
            let path = dir.join(format!("{stem}_p{k}_zeta.txt"));
            fs::write(&path, raw_dump(&z))?;
        }
        reports.push(report);
    }
    let planes = reports.iter().map(|r| r.restored.clone()).collect();
    Ok((ColorImage::new(planes)?, reports))
}

fn raw_dump(img: &Image) -> String {
    let mut out = format!("{} {}\n", img.width(), img.height());
    for row in img.data().chunks(img.width()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DeblurRecord {
    pub input: PathBuf,
    pub output: PathBuf,
    pub report_file: PathBuf,
    pub method: String,
    pub iterations: usize,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<Quality>,
}

/// Restores every input. Writes `<stem>_restored.pgm|ppm` and
/// `<stem>_report.json`; on divergence the partial report is still written
/// and the error names it.
pub fn cmd_deblur(manifest: &RunManifest, flags: &Overrides) -> CliResult<Vec<DeblurRecord>> {
    let inputs = require_inputs(manifest)?;
    let psf = manifest.psf()?;
    let cfg = manifest.solver_config();
    cfg.validate()?;
    let reference = manifest
        .reference
        .as_deref()
        .map(load_input)
        .transpose()?;
    ensure_out_dir(&manifest.out)?;
    let zeta_dir = manifest.out.join("zeta");
    if manifest.debug_zeta {
        ensure_out_dir(&zeta_dir)?;
    }

    let mut records = Vec::new();
    for input in inputs {
        let g = load_input(input)?;
        if let Some(r) = &reference {
            check_same_dims(r, &g, "reference and input differ in size")?;
        }
        let stem = image_id(input);
        let report_file = manifest.out.join(format!("{stem}_report.json"));
        let common = json!({
            "input": input,
            "manifest": manifest,
            "flags": flags,
            "noise_semantics": NOISE_SEMANTICS,
            "color_mssim": COLOR_MSSIM,
        });
        let zeta = manifest.debug_zeta.then_some((zeta_dir.as_path(), stem.as_str()));
        let (restored, reports) = match restore(&g, &psf, &cfg, zeta) {
            Ok(done) => done,
            Err(err) => {
                return Err(diverged_report(err, &report_file, common));
            }
        };
        let output = manifest.out.join(pnm_name(&stem, "restored", restored.num_planes()));
        save_pnm(&restored, &output).map_err(CliError::writing)?;
        let quality = reference
            .as_ref()
            .map(|r| quality(r, &restored, &manifest.metrics))
            .transpose()?;
        let record = DeblurRecord {
            input: input.clone(),
            output,
            report_file: report_file.clone(),
            method: cfg.method_label().to_string(),
            iterations: reports.iter().map(|r| r.iterations).max().unwrap_or(0),
            wall_time_s: reports.iter().map(|r| r.wall_time_s).sum(),
            quality,
        };
        let mut doc = common;
        doc["status"] = json!("ok");
        doc["record"] = serde_json::to_value(&record)?;
        doc["reports"] = serde_json::to_value(&reports)?;
        write_json(&report_file, &doc)?;
        records.push(record);
    }
    Ok(records)
}

/// Writes the last finite report of a diverged run and points the error at it.
fn diverged_report(err: CliError, path: &Path, mut doc: serde_json::Value) -> CliError {
    if err.reason != "divergence" {
        return err;
    }
    doc["status"] = json!("diverged");
    doc["error"] = json!(err.detail);
    match write_json(path, &doc) {
        Ok(()) => CliError {
            detail: format!("{}; last report at {}", err.detail, path.display()),
            ..err
        },
        Err(_) => err,
    }
}

/// The partial report carried by a divergence error, if any.
pub fn divergence_report(err: &hybridtv::Error) -> Option<&SolverReport> {
    match err {
        hybridtv::Error::Divergence { report, .. } => Some(report),
        _ => None,
    }
}

/// Labels attached to evaluation rows.
#[derive(Debug, Clone, Default)]
pub struct EvalLabels {
    pub psf_id: String,
    pub noise_percent: f64,
    pub method: String,
    pub iterations: Option<usize>,
    pub wall_time_s: Option<f64>,
}

fn image_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase());
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
            files.push(path);
        }
    }
    Ok(files)
}

/// Scores `test` against `reference`. Two files give one row; two
/// directories give one row per file name present in both, sorted by
/// image id. Rows go to `<out>/metrics.csv` when `out` is given.
pub fn cmd_evaluate(
    reference: &Path,
    test: &Path,
    cfg: &SsimConfig,
    labels: &EvalLabels,
    out: Option<&Path>,
) -> CliResult<Vec<MetricsRow>> {
    cfg.validate()?;
    let pairs: Vec<(PathBuf, PathBuf)> = if reference.is_dir() && test.is_dir() {
        let mut pairs: Vec<_> = image_files(reference)?
            .into_iter()
            .filter_map(|r| {
                let t = test.join(r.file_name()?);
                t.is_file().then_some((r, t))
            })
            .collect();
        if pairs.is_empty() {
            return Err(CliError::invalid(
                "missing-input",
                "no file names shared by the reference and test directories",
            ));
        }
        pairs.sort_by_key(|(r, _)| image_id(r));
        pairs
    } else if reference.is_dir() || test.is_dir() {
        return Err(CliError::invalid(
            "invalid-argument",
            "reference and test must both be files or both be directories",
        ));
    } else {
        vec![(reference.to_path_buf(), test.to_path_buf())]
    };

    let rows = pairs
        .iter()
        .map(|(r, t)| {
            let q = quality(&load_input(r)?, &load_input(t)?, cfg)?;
            Ok(MetricsRow {
                image_id: image_id(r),
                psf_id: labels.psf_id.clone(),
                noise_percent: labels.noise_percent,
                method: labels.method.clone(),
                mssim: q.mssim,
                psnr: q.psnr,
                iterations: labels.iterations,
                wall_time_s: labels.wall_time_s,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(dir) = out {
        ensure_out_dir(dir)?;
        write_csv(&dir.join("metrics.csv"), &rows)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Best finite cell by MSSIM; ties go to the earlier cell in grid order.
    pub argmax: Option<SweepRow>,
}

/// Restores the first input once per `(ν₁, ν₂)` cell, in parallel, and
/// scores each against the reference. Writes `sweep.csv` (one row per
/// cell, grid order) and `sweep_summary.json`. A diverged cell is recorded
/// with its status and the sweep continues.
pub fn cmd_sweep(manifest: &RunManifest, flags: &Overrides) -> CliResult<SweepOutcome> {
    let input = require_inputs(manifest)?[0].clone();
    let reference_path = manifest
        .reference
        .as_deref()
        .ok_or_else(|| CliError::invalid("missing-reference", "sweep needs a reference image"))?;
    let grid = manifest.grid();
    if grid.is_empty() {
        return Err(CliError::invalid("empty-grid", "the sweep grid has no cells"));
    }
    let psf = manifest.psf()?;
    let base = manifest.solver_config();
    let g = load_input(&input)?;
    let reference = load_input(reference_path)?;
    check_same_dims(&reference, &g, "reference and input differ in size")?;
    for &(nu1, nu2) in &grid {
        base.clone().with_nu(nu1, nu2).validate()?;
    }
    ensure_out_dir(&manifest.out)?;

    let outcome = sweep_grid(&g, &reference, &psf, &base, &manifest.metrics, &grid);
    write_csv(&manifest.out.join("sweep.csv"), &outcome.rows)?;
    write_json(
        &manifest.out.join("sweep_summary.json"),
        &json!({
            "input": input,
            "argmax": outcome.argmax,
            "cells": outcome.rows.len(),
            "manifest": manifest,
            "flags": flags,
            "noise_semantics": NOISE_SEMANTICS,
        }),
    )?;
    Ok(outcome)
}

/// Evaluates every `(ν₁, ν₂)` cell on in-memory images, in parallel.
/// Rows come back in grid order.
pub fn sweep_grid(
    g: &ColorImage,
    reference: &ColorImage,
    psf: &Psf,
    base: &SolverConfig,
    metrics: &SsimConfig,
    grid: &[(f64, f64)],
) -> SweepOutcome {
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(nu1, nu2)| sweep_cell(g, reference, psf, base, metrics, nu1, nu2))
        .collect();
    let argmax = rows
        .iter()
        .filter(|r| r.mssim.is_finite())
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if b.mssim >= r.mssim => Some(b),
            _ => Some(r),
        })
        .cloned();
    SweepOutcome { rows, argmax }
}

fn sweep_cell(
    g: &ColorImage,
    reference: &ColorImage,
    psf: &Psf,
    base: &SolverConfig,
    metrics: &SsimConfig,
    nu1: f64,
    nu2: f64,
) -> SweepRow {
    let cfg = base.clone().with_nu(nu1, nu2);
    let failed = |status: &str| SweepRow {
        nu1,
        nu2,
        mssim: f64::NAN,
        psnr: f64::NAN,
        iterations: 0,
        status: status.to_string(),
    };
    match restore(g, psf, &cfg, None) {
        Ok((restored, reports)) => match quality(reference, &restored, metrics) {
            Ok(q) => SweepRow {
                nu1,
                nu2,
                mssim: q.mssim,
                psnr: q.psnr,
                iterations: reports.iter().map(|r| r.iterations).max().unwrap_or(0),
                status: "ok".into(),
            },
            Err(e) => failed(e.reason),
        },
        Err(e) if e.reason == "divergence" => failed("diverged"),
        Err(e) => failed(e.reason),
    }
}
