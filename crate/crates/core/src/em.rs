//! Expectation–maximization for mixtures with known weights.
//!
//! Standard EM moves each center to its posterior-weighted mean,
//! `θ_χ ← E[w(Y,χ) Y] / E[w(Y,χ)]` with `w(Y,χ) = p_χ(Y)/α_χ`. Gradient EM
//! takes `θ_χ ← θ_χ + τ ∇_{θ_χ} L`. The two agree when the step for center χ
//! is `τ_χ = σ² / (α_χ E[w(Y,χ)])`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{orbit_mixture, FiniteGroupAction};
use crate::likelihood::{DataMode, LikelihoodEvaluator, LikelihoodSource};
use crate::mixture::{norm, DiscreteMixture, NoiseScale};
use crate::stats::fit_loglog;

/// `E[w] ≤` this is treated as a vanished component.
pub const MIN_WEIGHT_EXPECTATION: f64 = 1e-300;
/// A trajectory is abandoned once a center norm exceeds this.
pub const DIVERGENCE_NORM: f64 = 1e6;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default bound on `‖θ‖∞ / σ` for one-step T_1 scans.
pub const DEFAULT_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EMState {
    pub mix: DiscreteMixture,
    pub iteration: usize,
    pub loglik: f64,
    pub t1_norm: f64,
}

impl EMState {
    pub fn new<S: LikelihoodSource>(mix: DiscreteMixture, iteration: usize, src: &S) -> Result<Self> {
        let loglik = src.loglik(&mix)?.0;
        let t1_norm = norm(&mix.first_moment());
        Ok(Self {
            mix,
            iteration,
            loglik,
            t1_norm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum EMMode {
    Standard,
    Gradient { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMConfig {
    #[serde(flatten)]
    pub mode: EMMode,
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EMTrajectory {
    pub states: Vec<EMState>,
    pub mode: EMMode,
    pub data_mode: DataMode,
    pub converged: bool,
    pub diverged: bool,
}

/// `E[w(Y, χ)]` for every center.
pub fn weight_expectation<S: LikelihoodSource>(mix: &DiscreteMixture, src: &S) -> Result<Vec<f64>> {
    let pm = src.posterior_moments(mix)?;
    Ok(pm.mass.iter().zip(mix.weights()).map(|(m, a)| m / a).collect())
}

/// Per-center step sizes `τ_χ = σ² / (α_χ E[w(Y,χ)])` that turn gradient
/// ascent into standard EM.
pub fn em_step_sizes<S: LikelihoodSource>(mix: &DiscreteMixture, src: &S) -> Result<Vec<f64>> {
    let s2 = src.sigma() * src.sigma();
    let pm = src.posterior_moments(mix)?;
    check_masses(&pm.mass, mix.weights())?;
    Ok(pm.mass.iter().map(|m| s2 / m).collect())
}

fn check_masses(mass: &[f64], alpha: &[f64]) -> Result<()> {
    for (chi, (m, a)) in mass.iter().zip(alpha).enumerate() {
        if !(m / a >= MIN_WEIGHT_EXPECTATION) {
            return Err(Error::NumericalDegeneracy(format!(
                "E[w(·, {chi})] = {:e} has vanished",
                m / a
            )));
        }
    }
    Ok(())
}

/// `θ_χ ← E[w Y] / E[w]` for every center.
pub fn em_update<S: LikelihoodSource>(mix: &DiscreteMixture, src: &S) -> Result<DiscreteMixture> {
    let pm = src.posterior_moments(mix)?;
    check_masses(&pm.mass, mix.weights())?;
    let centers = pm
        .first
        .iter()
        .zip(&pm.mass)
        .map(|(f, m)| f.iter().map(|x| x / m).collect())
        .collect();
    mix.with_centers(centers)
}

/// `θ_χ ← θ_χ + τ_χ ∇_{θ_χ} L` with one step size per center.
pub fn gradient_update_per_center<S: LikelihoodSource>(
    mix: &DiscreteMixture,
    taus: &[f64],
    src: &S,
) -> Result<DiscreteMixture> {
    if taus.len() != mix.len() {
        return invalid("tau: one step size per center is required");
    }
    if taus.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return invalid("tau: step sizes must be finite and nonnegative");
    }
    let grad = src.loglik_gradient(mix)?;
    let centers = mix
        .centers()
        .iter()
        .zip(&grad)
        .zip(taus)
        .map(|((c, g), t)| c.iter().zip(g).map(|(a, b)| a + t * b).collect())
        .collect();
    mix.with_centers(centers)
}

/// `θ ← θ + τ ∇L`.
pub fn gradient_update<S: LikelihoodSource>(mix: &DiscreteMixture, tau: f64, src: &S) -> Result<DiscreteMixture> {
    gradient_update_per_center(mix, &vec![tau; mix.len()], src)
}

pub fn em_step<S: LikelihoodSource>(state: &EMState, src: &S) -> Result<EMState> {
    EMState::new(em_update(&state.mix, src)?, state.iteration + 1, src)
}

pub fn gradient_em_step<S: LikelihoodSource>(state: &EMState, tau: f64, src: &S) -> Result<EMState> {
    if !(tau >= 0.0) {
        return invalid("tau must be nonnegative");
    }
    EMState::new(gradient_update(&state.mix, tau, src)?, state.iteration + 1, src)
}

/// Standard EM for an orbit model `θ ↦ {g_χ θ}`: `θ ← Σ_χ g_χᵀ E[p_χ Y]`.
pub fn orbit_em_update<S: LikelihoodSource>(group: &FiniteGroupAction, theta: &[f64], src: &S) -> Result<Vec<f64>> {
    let mix = orbit_mixture(group, &[(theta.to_vec(), 1.0)])?;
    let pm = src.posterior_moments(&mix)?;
    Ok(pull_back(group, &pm.first))
}

/// `∇_θ L(θ) = Σ_χ g_χᵀ ∇_{θ_χ} L` for the orbit model.
pub fn orbit_gradient<S: LikelihoodSource>(group: &FiniteGroupAction, theta: &[f64], src: &S) -> Result<Vec<f64>> {
    let mix = orbit_mixture(group, &[(theta.to_vec(), 1.0)])?;
    Ok(pull_back(group, &src.loglik_gradient(&mix)?))
}

/// `θ + τ ∇_θ L(θ)` for the orbit model.
pub fn orbit_gradient_update<S: LikelihoodSource>(
    group: &FiniteGroupAction,
    theta: &[f64],
    tau: f64,
    src: &S,
) -> Result<Vec<f64>> {
    let g = orbit_gradient(group, theta, src)?;
    Ok(theta.iter().zip(&g).map(|(a, b)| a + tau * b).collect())
}

fn pull_back(group: &FiniteGroupAction, per_element: &[Vec<f64>]) -> Vec<f64> {
    let d = group.dim();
    let mut out = vec![0.0; d];
    for (g, v) in group.elements().iter().zip(per_element) {
        for (r, row) in g.iter().enumerate() {
            for (o, gr) in out.iter_mut().zip(row) {
                *o += gr * v[r];
            }
        }
    }
    out
}

fn sup_distance(a: &DiscreteMixture, b: &DiscreteMixture) -> f64 {
    a.flat_centers()
        .iter()
        .zip(b.flat_centers())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Iterates until `‖θ^{(t+1)} − θ^{(t)}‖∞ < tol`, `max_iter` steps, or divergence.
pub fn run_em<S: LikelihoodSource>(init: DiscreteMixture, config: EMConfig, src: &S) -> Result<EMTrajectory> {
    if config.max_iter == 0 {
        return invalid("max_iter must be at least 1");
    }
    if let EMMode::Gradient { tau } = config.mode {
        if !(tau >= 0.0) || !tau.is_finite() {
            return invalid("tau: step size must be finite and nonnegative");
        }
    }
    let mut states = vec![EMState::new(init, 0, src)?];
    let mut converged = false;
    let mut diverged = false;
    for _ in 0..config.max_iter {
        let cur = states.last().expect("trajectory is never empty");
        let next = match config.mode {
            EMMode::Standard => em_update(&cur.mix, src)?,
            EMMode::Gradient { tau } => gradient_update(&cur.mix, tau, src)?,
        };
        let step = sup_distance(&cur.mix, &next);
        if !(next.max_center_norm() <= DIVERGENCE_NORM) {
            diverged = true;
            let state = EMState {
                t1_norm: norm(&next.first_moment()),
                loglik: f64::NAN,
                iteration: cur.iteration + 1,
                mix: next,
            };
            states.push(state);
            break;
        }
        states.push(EMState::new(next, cur.iteration + 1, src)?);
        if step < config.tol {
            converged = true;
            break;
        }
    }
    Ok(EMTrajectory {
        states,
        mode: config.mode,
        data_mode: src.data_mode(),
        converged,
        diverged,
    })
}

/// One-step `‖T_1(G(θ))‖` across noise levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct T1ScanReport {
    pub sigmas: Vec<f64>,
    pub t1_norms: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// The `O(1/σ)` rate the bound guarantees.
    pub bound_slope: f64,
}

/// Applies one standard EM step to `init` at every σ of the grid and fits
/// `log ‖T_1(G(θ))‖` against `log σ`.
///
/// The truth must be centered (`T_1* = 0`), and the scan aborts if
/// `‖θ‖∞/σ > radius` for either mixture at some grid point.
pub fn t1_one_step_scan(
    truth: &DiscreteMixture,
    init: &DiscreteMixture,
    sigma_grid: &[f64],
    radius: f64,
    method: crate::likelihood::EvalMethod,
) -> Result<T1ScanReport> {
    if sigma_grid.len() < 2 {
        return invalid("sigmas: at least two noise levels are required");
    }
    if truth.dim() != init.dim() {
        return invalid("truth and init have different dimensions");
    }
    let t1_star = norm(&truth.first_moment());
    if t1_star > 1e-10 * truth.max_center_norm().max(1.0) {
        return Err(Error::PreconditionViolation(format!(
            "truth must be centered, ‖T_1*‖ = {t1_star:e}"
        )));
    }
    let reach = init.max_center_norm().max(truth.max_center_norm());
    let mut t1_norms = Vec::with_capacity(sigma_grid.len());
    for &s in sigma_grid {
        if reach / s > radius {
            return Err(Error::PreconditionViolation(format!(
                "‖θ‖∞/σ = {} exceeds the radius {radius} at σ = {s}",
                reach / s
            )));
        }
        let ev = LikelihoodEvaluator::new(truth.clone(), NoiseScale::new(s)?, method)?;
        t1_norms.push(norm(&em_update(init, &ev)?.first_moment()));
    }
    let fit = fit_loglog(sigma_grid, &t1_norms, 0.0);
    Ok(T1ScanReport {
        sigmas: sigma_grid.to_vec(),
        t1_norms,
        fitted_slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.slope_stderr),
        bound_slope: -1.0,
    })
}
