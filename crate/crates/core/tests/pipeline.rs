//! End-to-end runs of the forward model and the solver.

use hybridtv::degrade::{degrade, make_psf, NoiseSpec, PsfKind};
use hybridtv::metrics::{mssim, SsimConfig};
use hybridtv::solver::{deblur, deblur_color, ExitReason, Solver, SolverConfig};
use hybridtv::weights::ZetaMode;
use hybridtv::{synth, ColorImage, Image, Psf};

fn gaussian13() -> Psf {
    make_psf(PsfKind::Gaussian { std: 2.0 }, 13).unwrap()
}

#[test]
fn restoration_beats_observation_noise_free() {
    let f = synth::shapes(64, 64);
    let psf = gaussian13();
    let g = degrade(&f, &psf, &NoiseSpec::default()).unwrap();
    let report = deblur(&g, &psf, &SolverConfig::default()).unwrap();
    let cfg = SsimConfig::default();
    let before = mssim(&f, &g, &cfg).unwrap();
    let after = mssim(&f, &report.restored, &cfg).unwrap();
    assert!(after > before, "{after} <= {before}");
    assert!(report.restored.min() >= 0.0 && report.restored.max() <= 255.0);
    assert_eq!(report.method, "CNCHTV");
}

#[test]
fn restoration_beats_observation_noisy() {
    let f = synth::texture(64, 64);
    let psf = make_psf(PsfKind::Disk { radius: 3.0 }, 9).unwrap();
    let noise = NoiseSpec {
        level_percent: 2.0,
        seed: 5,
    };
    let g = degrade(&f, &psf, &noise).unwrap();
    let report = deblur(&g, &psf, &SolverConfig::for_noise(2.0)).unwrap();
    let cfg = SsimConfig::default();
    assert!(mssim(&f, &report.restored, &cfg).unwrap() > mssim(&f, &g, &cfg).unwrap());
}

#[test]
fn convex_residuals_fall_below_threshold() {
    let f = synth::shapes(64, 64);
    let psf = gaussian13();
    let g = degrade(&f, &psf, &NoiseSpec::default()).unwrap();
    let mut cfg = SolverConfig::default().baseline_tv();
    cfg.tol = 0.0;
    cfg.max_iters = 500;
    let report = deblur(&g, &psf, &cfg).unwrap();
    let first_ok = report
        .primal_residuals
        .iter()
        .position(|r| r.iter().all(|&x| x < 1e-3))
        .expect("residuals never dropped below 1e-3");
    assert!(first_ok < 500);
    assert_eq!(report.method, "convex-TV baseline");
}

#[test]
fn runs_are_bitwise_deterministic() {
    let f = synth::texture(48, 48);
    let psf = make_psf(PsfKind::Motion { length: 7.0, angle: 30.0 }, 11).unwrap();
    let noise = NoiseSpec {
        level_percent: 1.0,
        seed: 21,
    };
    let g1 = degrade(&f, &psf, &noise).unwrap();
    let g2 = degrade(&f, &psf, &noise).unwrap();
    assert_eq!(g1, g2);
    let cfg = SolverConfig::for_noise(1.0);
    let a = deblur(&g1, &psf, &cfg).unwrap();
    let b = deblur(&g2, &psf, &cfg).unwrap();
    assert_eq!(a.restored, b.restored);
    assert_eq!(a.objective_trace, b.objective_trace);
    assert_eq!(a.primal_residuals, b.primal_residuals);
}

#[test]
fn duplicated_gray_matches_single_plane() {
    let f = synth::shapes(32, 32);
    let psf = make_psf(PsfKind::Gaussian { std: 1.0 }, 7).unwrap();
    let g = degrade(&f, &psf, &NoiseSpec::default()).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.max_iters = 20;
    let single = deblur(&g, &psf, &cfg).unwrap();
    let color = ColorImage::new(vec![g.clone(), g.clone(), g]).unwrap();
    let (out, reports) = deblur_color(&color, &psf, &cfg).unwrap();
    assert_eq!(reports.len(), 3);
    for plane in out.planes() {
        assert_eq!(plane, &single.restored);
    }
}

#[test]
fn out_of_range_observations_are_projected() {
    // an unclamped noisy observation spills outside the box
    let f = synth::step_edge(32, 32, 0.0, 255.0);
    let psf = make_psf(PsfKind::Gaussian { std: 1.0 }, 7).unwrap();
    let noise = NoiseSpec {
        level_percent: 5.0,
        seed: 2,
    };
    let g = degrade(&f, &psf, &noise).unwrap();
    assert!(g.min() < 0.0 && g.max() > 255.0);
    let report = deblur(&g, &psf, &SolverConfig::for_noise(5.0)).unwrap();
    assert!(report.restored.min() >= 0.0 && report.restored.max() <= 255.0);
}

#[test]
fn reweighting_is_consistent_at_a_fixed_point() {
    let f = synth::shapes(32, 32);
    let psf = make_psf(PsfKind::Gaussian { std: 1.0 }, 7).unwrap();
    let g = degrade(&f, &psf, &NoiseSpec::default()).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.weights.zeta = ZetaMode::Fixed(0.5);
    cfg.tol = 1e-5;
    cfg.max_iters = 3000;
    let mut solver = Solver::new(&g, &psf, cfg.clone()).unwrap();
    let mut last = f64::INFINITY;
    while last > cfg.tol && solver.state().iter < cfg.max_iters {
        last = solver.step().unwrap().relative_change;
    }
    assert!(last <= cfg.tol, "did not settle: {last}");
    // weights recomputed from the settled iterate leave the next one in place
    let next = solver.step().unwrap();
    assert!(next.relative_change <= 2.0 * cfg.tol, "{}", next.relative_change);
    let report = solver.finish(ExitReason::Tolerance);
    assert!(report.final_gap.is_finite());
}

#[test]
fn identity_problem_with_loose_tolerance() {
    let g = synth::texture(24, 24);
    let mut cfg = SolverConfig::default();
    cfg.tol = 1e-3;
    let report = deblur(&g, &Psf::delta(1).unwrap(), &cfg).unwrap();
    let err = report.restored.zip_map(&g, |a, b| a - b).norm() / g.norm();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn constant_observation_is_a_fixed_point() {
    let g = Image::filled(16, 16, 80.0);
    let report = deblur(&g, &gaussian13(), &SolverConfig::default()).unwrap();
    assert!(report.restored.data().iter().all(|&v| (v - 80.0).abs() < 1e-9));
    assert_eq!(report.exit_reason, Some(ExitReason::Tolerance));
}
