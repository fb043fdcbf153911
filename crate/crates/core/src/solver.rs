//! ADMM-based iteratively reweighted solver for the box-constrained hybrid
//! model
//!
//! ```text
//! min_{l ≤ f ≤ u}  μ/2 ‖Hf − g‖² + Σ ζ |Df|^ν₁ + Σ (1 − ζ) |D²f|^ν₂
//! ```
//!
//! Each outer iteration performs one ADMM sweep on the reweighted convex
//! surrogate (weights `ζψ₁`, `(1 − ζ)ψ₂`) with splittings `v = Df`,
//! `w = D²f`, `u = f`, then refreshes `ψ₁`, `ψ₂` and `ζ` from the new iterate.

use std::time::Instant;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{clamp, ColorImage, Image};
use crate::operators::{
    grad, grad_adjoint, gradient_power, hessian, hessian_adjoint, hessian_power,
    psf_to_spectrum, Fft2d, Psf, Spectrum, TensorField, VectorField,
};
use crate::weights::{irls_weights, zeta, WeightConfig, ZetaMode};

/// Largest dual steplength for which the multiplier update is known to converge.
pub const GOLDEN_STEP: f64 = 1.618_033_988_749_895;

pub const METHOD_HYBRID: &str = "CNCHTV";
pub const METHOD_BASELINE: &str = "convex-TV baseline";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Fidelity weight.
    pub mu: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Dual steplength.
    pub gamma: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub max_iters: usize,
    /// Relative change of `f` below which the run stops.
    pub tol: f64,
    /// ADMM sweeps between two reweightings.
    pub inner_sweeps: usize,
    /// Abort once the objective exceeds this multiple of its initial value.
    pub divergence_factor: f64,
    pub weights: WeightConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 5e5,
            beta1: 1e2,
            beta2: 1e2,
            beta3: 1e2,
            gamma: 1.618,
            box_lo: 0.0,
            box_hi: 255.0,
            max_iters: 300,
            tol: 1e-4,
            inner_sweeps: 1,
            divergence_factor: 1e3,
            weights: WeightConfig::default(),
        }
    }
}

impl SolverConfig {
    /// Parameter set for a given noise level (percent of the 255 range):
    /// `μ = 5e5, β = 1e2` without noise; `μ = 5/δ, β = 0.1` otherwise,
    /// where `δ` is the noise standard deviation in gray levels.
    pub fn for_noise(level_percent: f64) -> Self {
        if level_percent > 0.0 {
            let delta = level_percent / 100.0 * 255.0;
            Self {
                mu: 5.0 / delta,
                beta1: 0.1,
                beta2: 0.1,
                beta3: 0.1,
                ..Self::default()
            }
        } else {
            Self::default()
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta1 = beta;
        self.beta2 = beta;
        self.beta3 = beta;
        self
    }

    pub fn with_nu(mut self, nu1: f64, nu2: f64) -> Self {
        self.weights.nu1 = nu1;
        self.weights.nu2 = nu2;
        self
    }

    /// Plain box-constrained convex TV: `ν₁ = ν₂ = 1`, `ζ ≡ 1`.
    pub fn baseline_tv(mut self) -> Self {
        self.weights.nu1 = 1.0;
        self.weights.nu2 = 1.0;
        self.weights.zeta = ZetaMode::Fixed(1.0);
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.weights.nu1 == 1.0
            && self.weights.nu2 == 1.0
            && self.weights.zeta == ZetaMode::Fixed(1.0)
    }

    pub fn method_label(&self) -> &'static str {
        if self.is_baseline() {
            METHOD_BASELINE
        } else {
            METHOD_HYBRID
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::arg(format!("mu must be positive, got {}", self.mu)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2), ("beta3", self.beta3)] {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {b}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= GOLDEN_STEP) {
            return Err(Error::arg(format!(
                "gamma must lie in (0, {GOLDEN_STEP}], got {}",
                self.gamma
            )));
        }
        if !(self.box_lo < self.box_hi) {
            return Err(Error::arg(format!(
                "box bounds must satisfy lo < hi, got [{}, {}]",
                self.box_lo, self.box_hi
            )));
        }
        if self.max_iters == 0 || self.inner_sweeps == 0 {
            return Err(Error::arg("max_iters and inner_sweeps must be positive"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::arg(format!("tol must be non-negative, got {}", self.tol)));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(Error::arg("divergence_factor must exceed 1"));
        }
        self.weights.validate()
    }
}

/// Primal iterate, splitting variables, multipliers and current weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub f: Image,
    pub v: VectorField,
    pub w: TensorField,
    pub u: Image,
    pub omega: VectorField,
    pub lambda: TensorField,
    pub xi: Image,
    pub iter: usize,
    pub zeta: Image,
    pub psi1: Image,
    pub psi2: Image,
}

impl SolverState {
    /// `f = u = g`, `v = Dg`, `w = D²g`, zero multipliers, weights from `g`.
    pub fn initial(g: &Image, cfg: &SolverConfig) -> Result<Self> {
        let (w, h) = g.dims();
        let (psi1, psi2) = irls_weights(g, &cfg.weights);
        Ok(Self {
            f: g.clone(),
            v: grad(g),
            w: hessian(g),
            u: g.clone(),
            omega: VectorField::zeros(w, h),
            lambda: TensorField::zeros(w, h),
            xi: Image::zeros(w, h),
            iter: 0,
            zeta: zeta(g, &cfg.weights)?,
            psi1,
            psi2,
        })
    }

    /// Recomputes `ψ₁`, `ψ₂`, `ζ` from the current `f`.
    pub fn reweight(&mut self, cfg: &SolverConfig) -> Result<()> {
        let (psi1, psi2) = irls_weights(&self.f, &cfg.weights);
        self.psi1 = psi1;
        self.psi2 = psi2;
        self.zeta = zeta(&self.f, &cfg.weights)?;
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.f.is_finite()
            && self.u.is_finite()
            && self.v.is_finite()
            && self.w.is_finite()
            && self.omega.is_finite()
            && self.lambda.is_finite()
            && self.xi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitReason {
    Tolerance,
    IterationCap,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    #[serde(skip)]
    pub restored: Image,
    pub method: String,
    pub iterations: usize,
    pub exit_reason: Option<ExitReason>,
    /// Model energy after each outer iteration.
    pub objective_trace: Vec<f64>,
    /// `(‖v − Df‖, ‖w − D²f‖, ‖u − f‖)`, each relative to `‖f‖`.
    pub primal_residuals: Vec<[f64; 3]>,
    /// Relative change of `f` per iteration.
    pub relative_change: Vec<f64>,
    /// `‖u − f‖` at exit (absolute).
    pub final_gap: f64,
    pub wall_time_s: f64,
    pub config: SolverConfig,
}

/// Per-pixel group soft-thresholding: for each pixel, the vector formed by
/// the k-th sample of every component plane is shrunk toward zero by the
/// threshold at that pixel. Exact minimizer of `t‖y‖₂ + ½‖y − x‖₂²`.
pub fn shrink_iso(components: &[&Image], threshold: &Image) -> Vec<Image> {
    let n = threshold.len();
    assert!(components.iter().all(|c| c.same_dims(threshold)));
    let mut out: Vec<Vec<f64>> = components.iter().map(|c| c.data().to_vec()).collect();
    let mut px = vec![0.0; components.len()];
    for i in 0..n {
        for (k, c) in out.iter().enumerate() {
            px[k] = c[i];
        }
        shrink_pixel(&mut px, threshold.data()[i]);
        for (k, c) in out.iter_mut().enumerate() {
            c[i] = px[k];
        }
    }
    out.into_iter()
        .map(|d| Image::new(threshold.width(), threshold.height(), d).expect("same grid"))
        .collect()
}

/// In-place shrinkage of a single vector.
#[inline]
pub fn shrink_pixel(x: &mut [f64], t: f64) {
    let mag = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if mag <= t {
        x.iter_mut().for_each(|v| *v = 0.0);
    } else {
        let s = 1.0 - t / mag;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// `v = shrink(Df + ω/β₁, ζψ₁/β₁)`.
pub fn v_step(state: &SolverState, cfg: &SolverConfig) -> VectorField {
    let df = grad(&state.f);
    let b = cfg.beta1;
    let chi = df.zip_map(&state.omega, |d, o| d + o / b);
    let t = state.zeta.zip_map(&state.psi1, |z, p| z * p / b);
    let mut parts = shrink_iso(&[&chi.dx, &chi.dy], &t).into_iter();
    let dx = parts.next().unwrap();
    let dy = parts.next().unwrap();
    VectorField::new(dx, dy)
}

/// `w = shrink(D²f + λ/β₂, (1 − ζ)ψ₂/β₂)` over the 4-vector per pixel.
pub fn w_step(state: &SolverState, cfg: &SolverConfig) -> TensorField {
    let d2f = hessian(&state.f);
    let b = cfg.beta2;
    let chi = d2f.zip_map(&state.lambda, |d, l| d + l / b);
    let t = state.zeta.zip_map(&state.psi2, |z, p| (1.0 - z) * p / b);
    let mut parts = shrink_iso(&[&chi.dxx, &chi.dxy, &chi.dyx, &chi.dyy], &t).into_iter();
    let (dxx, dxy, dyx, dyy) = (
        parts.next().unwrap(),
        parts.next().unwrap(),
        parts.next().unwrap(),
        parts.next().unwrap(),
    );
    TensorField::new(dxx, dxy, dyx, dyy)
}

/// `u = P_box(f + ξ/β₃)`.
pub fn u_step(state: &SolverState, cfg: &SolverConfig) -> Image {
    let b = cfg.beta3;
    let shifted = state.f.zip_map(&state.xi, |f, x| f + x / b);
    clamp(&shifted, cfg.box_lo, cfg.box_hi).expect("box validated")
}

/// The `f`-subproblem normal equation, diagonalized by the DFT:
///
/// `(μHᵀH + β₁DᵀD + β₂(D²)ᵀD² + β₃I) f = μHᵀg + β₁Dᵀ(v − ω/β₁) + β₂(D²)ᵀ(w − λ/β₂) + β₃(u − ξ/β₃)`
#[derive(Debug)]
pub struct NormalEquation {
    fft: Fft2d,
    otf: Spectrum,
    /// `μ conj(Ĥ) ĝ`
    data_term: Vec<Complex64>,
    denominator: Vec<f64>,
    beta: [f64; 3],
}

impl NormalEquation {
    pub fn new(g: &Image, psf: &Psf, cfg: &SolverConfig) -> Result<Self> {
        let (w, h) = g.dims();
        let otf = psf_to_spectrum(psf, w, h)?;
        otf.ensure_finite()?;
        let fft = Fft2d::new(w, h);
        let ghat = fft.forward(g);
        let data_term = otf
            .values()
            .iter()
            .zip(ghat.values())
            .map(|(hk, gk)| cfg.mu * hk.conj() * gk)
            .collect();
        let gp = gradient_power(w, h);
        let hp = hessian_power(w, h);
        let denominator: Vec<f64> = otf
            .values()
            .iter()
            .zip(gp.iter().zip(&hp))
            .map(|(hk, (a, b))| cfg.mu * hk.norm_sqr() + cfg.beta1 * a + cfg.beta2 * b + cfg.beta3)
            .collect();
        if let Some(i) = denominator.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::NonFiniteSpectrum {
                row: i / w,
                col: i % w,
            });
        }
        Ok(Self {
            fft,
            otf,
            data_term,
            denominator,
            beta: [cfg.beta1, cfg.beta2, cfg.beta3],
        })
    }

    pub fn otf(&self) -> &Spectrum {
        &self.otf
    }

    /// Blur through the cached transfer function.
    pub fn blur(&self, f: &Image) -> Image {
        self.fft.inverse_real(&self.otf.mul(&self.fft.forward(f)))
    }

    /// Spatial part of the right-hand side (everything except `μHᵀg`).
    pub fn splitting_rhs(&self, state: &SolverState) -> Image {
        let [b1, b2, b3] = self.beta;
        let vv = state.v.zip_map(&state.omega, |v, o| b1 * v - o);
        let ww = state.w.zip_map(&state.lambda, |w, l| b2 * w - l);
        let uu = state.u.zip_map(&state.xi, |u, x| b3 * u - x);
        let a = grad_adjoint(&vv);
        let b = hessian_adjoint(&ww);
        let (w, h) = uu.dims();
        let data = (0..w * h)
            .map(|i| a.data()[i] + b.data()[i] + uu.data()[i])
            .collect();
        Image::new(w, h, data).expect("same grid")
    }

    /// One forward and one inverse DFT.
    pub fn solve(&self, state: &SolverState) -> Result<Image> {
        let rhs = self.splitting_rhs(state);
        let (w, h) = rhs.dims();
        let mut buf: Vec<Complex64> = rhs.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.forward_in_place(&mut buf);
        for ((z, d), den) in buf.iter_mut().zip(&self.data_term).zip(&self.denominator) {
            *z = (*z + d) / den;
        }
        self.fft.inverse_in_place(&mut buf);
        let f = Image::new(w, h, buf.iter().map(|z| z.re).collect())?;
        Ok(f)
    }
}

/// Solves the `f`-subproblem for the splitting variables in `state`.
pub fn f_step(state: &SolverState, cfg: &SolverConfig, g: &Image, psf: &Psf) -> Result<Image> {
    NormalEquation::new(g, psf, cfg)?.solve(state)
}

/// Dual ascent on the three constraints with steplength `γ`; expects `state`
/// to hold the new `v`, `w`, `u`, `f`.
pub fn multiplier_update(state: &SolverState, cfg: &SolverConfig) -> (VectorField, TensorField, Image) {
    let df = grad(&state.f);
    let d2f = hessian(&state.f);
    let s1 = cfg.gamma * cfg.beta1;
    let s2 = cfg.gamma * cfg.beta2;
    let s3 = cfg.gamma * cfg.beta3;
    let rv = state.v.zip_map(&df, |v, d| v - d);
    let rw = state.w.zip_map(&d2f, |w, d| w - d);
    let ru = state.u.zip_map(&state.f, |u, f| u - f);
    (
        state.omega.zip_map(&rv, |o, r| o - s1 * r),
        state.lambda.zip_map(&rw, |l, r| l - s2 * r),
        state.xi.zip_map(&ru, |x, r| x - s3 * r),
    )
}

fn regularizer(mag: &Image, weight: &Image, nu: f64) -> f64 {
    mag.data()
        .iter()
        .zip(weight.data())
        .map(|(&m, &w)| if m == 0.0 { 0.0 } else { w * m.powf(nu) })
        .sum()
}

fn energy(hf: &Image, f: &Image, g: &Image, zeta: &Image, cfg: &SolverConfig) -> f64 {
    let fidelity = 0.5 * cfg.mu * hf.zip_map(g, |a, b| a - b).norm().powi(2);
    let first = regularizer(&grad(f).magnitude(), zeta, cfg.weights.nu1);
    let second = regularizer(
        &hessian(f).magnitude(),
        &zeta.map(|z| 1.0 - z),
        cfg.weights.nu2,
    );
    fidelity + first + second
}

/// Model energy `μ/2‖Hf − g‖² + Σ ζ|Df|^ν₁ + Σ (1 − ζ)|D²f|^ν₂` with
/// isotropic per-pixel magnitudes.
pub fn objective(f: &Image, g: &Image, psf: &Psf, zeta: &Image, cfg: &SolverConfig) -> Result<f64> {
    let hf = crate::operators::convolve_periodic(f, psf)?;
    Ok(energy(&hf, f, g, zeta, cfg))
}

fn relative(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Drives the outer loop; exposes single steps for inspection.
pub struct Solver<'a> {
    g: &'a Image,
    cfg: SolverConfig,
    system: NormalEquation,
    state: SolverState,
    report: SolverReport,
    initial_objective: f64,
    started: Instant,
}

/// Result of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub objective: f64,
    pub residuals: [f64; 3],
    pub relative_change: f64,
}

impl<'a> Solver<'a> {
    pub fn new(g: &'a Image, psf: &Psf, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        g.ensure_solver_extent()?;
        g.ensure_finite("observed image")?;
        psf.ensure_fits(g.width(), g.height())?;
        if cfg.weights.window > g.width().min(g.height()) {
            return Err(Error::arg("variance window larger than the image"));
        }
        let started = Instant::now();
        let system = NormalEquation::new(g, psf, &cfg)?;
        let state = SolverState::initial(g, &cfg)?;
        let initial_objective = energy(&system.blur(&state.f), &state.f, g, &state.zeta, &cfg);
        let report = SolverReport {
            restored: state.u.clone(),
            method: cfg.method_label().to_string(),
            iterations: 0,
            exit_reason: None,
            objective_trace: Vec::new(),
            primal_residuals: Vec::new(),
            relative_change: Vec::new(),
            final_gap: 0.0,
            wall_time_s: 0.0,
            config: cfg.clone(),
        };
        Ok(Self {
            g,
            cfg,
            system,
            state,
            report,
            initial_objective,
            started,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn initial_objective(&self) -> f64 {
        self.initial_objective
    }

    pub fn system(&self) -> &NormalEquation {
        &self.system
    }

    pub fn step(&mut self) -> Result<StepSummary> {
        self.step_observed(|_, _| {})
    }

    /// One outer iteration. `observer` sees the state right before each
    /// `f`-solve (new `v`, `w`, `u`; old multipliers) together with the
    /// solution.
    pub fn step_observed(
        &mut self,
        mut observer: impl FnMut(&SolverState, &Image),
    ) -> Result<StepSummary> {
        let f_prev = self.state.f.clone();
        for _ in 0..self.cfg.inner_sweeps {
            self.state.v = v_step(&self.state, &self.cfg);
            self.state.w = w_step(&self.state, &self.cfg);
            self.state.u = u_step(&self.state, &self.cfg);
            let f = self.system.solve(&self.state)?;
            observer(&self.state, &f);
            self.state.f = f;
            let (omega, lambda, xi) = multiplier_update(&self.state, &self.cfg);
            self.state.omega = omega;
            self.state.lambda = lambda;
            self.state.xi = xi;
        }
        self.state.iter += 1;
        let k = self.state.iter;
        if !self.state.is_finite() {
            return Err(self.diverged(k, "non-finite iterate"));
        }
        self.state.reweight(&self.cfg)?;

        let st = &self.state;
        let fnorm = st.f.norm();
        let residuals = [
            relative(st.v.zip_map(&grad(&st.f), |a, b| a - b).norm(), fnorm),
            relative(st.w.zip_map(&hessian(&st.f), |a, b| a - b).norm(), fnorm),
            relative(st.u.zip_map(&st.f, |a, b| a - b).norm(), fnorm),
        ];
        let objective = energy(&self.system.blur(&st.f), &st.f, self.g, &st.zeta, &self.cfg);
        let change = relative(st.f.zip_map(&f_prev, |a, b| a - b).norm(), f_prev.norm());
        if !objective.is_finite() {
            return Err(self.diverged(k, "non-finite objective"));
        }
        if objective > self.cfg.divergence_factor * self.initial_objective.max(1.0) {
            return Err(self.diverged(
                k,
                &format!(
                    "objective {objective:.6e} exceeds {}x its initial value {:.6e}",
                    self.cfg.divergence_factor, self.initial_objective
                ),
            ));
        }

        self.report.iterations = k;
        self.report.objective_trace.push(objective);
        self.report.primal_residuals.push(residuals);
        self.report.relative_change.push(change);
        Ok(StepSummary {
            objective,
            residuals,
            relative_change: change,
        })
    }

    fn diverged(&mut self, iteration: usize, reason: &str) -> Error {
        self.report.wall_time_s = self.started.elapsed().as_secs_f64();
        Error::Divergence {
            iteration,
            reason: reason.to_string(),
            report: Box::new(self.report.clone()),
        }
    }

    /// Iterates until the relative change of `f` drops to `tol` or the
    /// iteration cap is hit.
    pub fn run(self) -> Result<SolverReport> {
        self.run_with(|_| {})
    }

    /// [`Solver::run`] with a callback after every outer iteration.
    pub fn run_with(mut self, mut on_iter: impl FnMut(&SolverState)) -> Result<SolverReport> {
        let reason = loop {
            let s = self.step()?;
            on_iter(&self.state);
            if s.relative_change <= self.cfg.tol {
                break ExitReason::Tolerance;
            }
            if self.state.iter >= self.cfg.max_iters {
                break ExitReason::IterationCap;
            }
        };
        Ok(self.finish(reason))
    }

    /// Closes the report; the restored image is the box-feasible `u`.
    pub fn finish(mut self, reason: ExitReason) -> SolverReport {
        self.report.exit_reason = Some(reason);
        self.report.final_gap = self.state.u.zip_map(&self.state.f, |a, b| a - b).norm();
        self.report.restored = self.state.u.clone();
        self.report.wall_time_s = self.started.elapsed().as_secs_f64();
        self.report
    }
}

/// Runs the reweighted ADMM iteration on one plane.
pub fn deblur(g: &Image, psf: &Psf, cfg: &SolverConfig) -> Result<SolverReport> {
    Solver::new(g, psf, cfg.clone())?.run()
}

/// Independent runs per colour plane; reports follow plane order.
pub fn deblur_color(
    g: &ColorImage,
    psf: &Psf,
    cfg: &SolverConfig,
) -> Result<(ColorImage, Vec<SolverReport>)> {
    let reports = g
        .planes()
        .iter()
        .map(|p| deblur(p, psf, cfg))
        .collect::<Result<Vec<_>>>()?;
    let planes = reports.iter().map(|r| r.restored.clone()).collect();
    Ok((ColorImage::new(planes)?, reports))
}
