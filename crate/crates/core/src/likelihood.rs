//! Population and sample log-likelihoods of isotropic Gaussian mixtures.
//!
//! Write `Y = θ*_i + σZ` for an observation from truth component `i`. With
//! `v_j = θ*_i − θ_j`, `s̄_i = Σ_j α_j ‖v_j‖²` and `T_1` the model mean,
//!
//! ```text
//! log p(Y) = −(d/2) log(2πσ²) − ‖Z‖²/2 − Z·(θ*_i − T_1)/σ − s̄_i/(2σ²) + r_i(Z)
//! r_i(Z)   = log Σ_j α_j exp(e_j),   e_j = Z·(θ_j − T_1)/σ − (‖v_j‖² − s̄_i)/(2σ²).
//! ```
//!
//! The exponents `e_j` have weighted mean zero, so `r_i` is `O(σ⁻²)` and can be
//! evaluated with `log1p`/`expm1` to full relative precision. The other terms
//! are integrated in closed form. This keeps likelihood differences accurate
//! far below the size of the `log(2πσ²)` constant, which the expansion checks
//! rely on.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixture::{moment_tensor, DiscreteMixture, NoiseScale};
use crate::quadrature::GaussHermite;
use crate::rng::{self, latent_draws, CHUNK};
use crate::stats::fit_loglog;

pub const DEFAULT_NODES_PER_AXIS: usize = 60;
pub const MIN_NODES_PER_AXIS: usize = 20;
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Residuals below this are treated as round-off and left out of slope fits.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-18;

/// Tolerance on `‖T_k − T_k*‖` for the matched-moment hypothesis.
pub const MOMENT_MATCH_TOL: f64 = 1e-10;

/// How expectations over `Y` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum EvalMethod {
    /// Tensor-product Gauss–Hermite, exact sum over truth components.
    Quadrature { nodes_per_axis: usize },
    /// `n_samples` draws of `(component, Z)` from the given seed.
    MonteCarlo { n_samples: usize, seed: u64 },
}

impl Default for EvalMethod {
    fn default() -> Self {
        EvalMethod::Quadrature {
            nodes_per_axis: DEFAULT_NODES_PER_AXIS,
        }
    }
}

/// Per-center posterior expectations `E[p_χ]`, `E[p_χ (Y − θ_χ)]`, `E[p_χ Y]`,
/// where `p_χ(Y) = α_χ φ_σ(Y − θ_χ) / Σ_j α_j φ_σ(Y − θ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments {
    pub mass: Vec<f64>,
    pub residual: Vec<Vec<f64>>,
    pub first: Vec<Vec<f64>>,
}

/// Where expectations come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "data", rename_all = "kebab-case")]
pub enum DataMode {
    Population { method: EvalMethod },
    Sample { n_samples: usize },
}

/// Anything that can average over observations of the truth: the population
/// evaluator or a finite sample.
pub trait LikelihoodSource: Sync {
    fn sigma(&self) -> f64;
    fn dim(&self) -> usize;
    fn data_mode(&self) -> DataMode;
    /// Log-likelihood and its Monte Carlo standard error (0 when exact).
    fn loglik(&self, mix: &DiscreteMixture) -> Result<(f64, f64)>;
    fn posterior_moments(&self, mix: &DiscreteMixture) -> Result<PosteriorMoments>;

    /// `∇_{θ_χ} L = E[p_χ (Y − θ_χ)] / σ²`.
    fn loglik_gradient(&self, mix: &DiscreteMixture) -> Result<Vec<Vec<f64>>> {
        let s2 = self.sigma() * self.sigma();
        let pm = self.posterior_moments(mix)?;
        Ok(pm
            .residual
            .into_iter()
            .map(|r| r.into_iter().map(|x| x / s2).collect())
            .collect())
    }
}

fn check_dim(expected: usize, mix: &DiscreteMixture) -> Result<()> {
    if mix.dim() != expected {
        return invalid(format!(
            "mixture has dimension {} but the data live in R^{expected}",
            mix.dim()
        ));
    }
    Ok(())
}

/// Evaluates chunks `[c·CHUNK, (c+1)·CHUNK)` in parallel and returns the
/// per-chunk results in chunk order.
fn map_chunks<A, F>(n: usize, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(Range<usize>) -> A + Sync,
{
    let n_chunks = n.div_ceil(CHUNK);
    rng::pool().install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect()
    })
}

/// `log Σ_j α_j exp(e_j)` for exponents with `Σ_j α_j e_j = 0`.
fn log_mean_exp_centered(e: &[f64], alpha: &[f64]) -> f64 {
    let (lo, hi) = e.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if hi <= 0.5 && lo >= -0.5 {
        let s: f64 = e.iter().zip(alpha).map(|(x, a)| a * x.exp_m1()).sum();
        s.ln_1p()
    } else {
        let s: f64 = e.iter().zip(alpha).map(|(x, a)| a * (x - hi).exp()).sum();
        hi + s.ln()
    }
}

/// Softmax `α_j e^{e_j} / Σ α_l e^{e_l}` written into `out`.
fn posterior_into(e: &[f64], alpha: &[f64], out: &mut [f64]) {
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for ((o, x), a) in out.iter_mut().zip(e).zip(alpha) {
        *o = a * (x - hi).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Model-dependent constants of the centered integrand.
struct Centered<'a> {
    mix: &'a DiscreteMixture,
    d: usize,
    /// `(θ_j − T_1)/σ`, flat `K × d`.
    dirs: Vec<f64>,
    /// `(‖v_ij‖² − s̄_i)/(2σ²)`, flat `K* × K`.
    offsets: Vec<f64>,
    /// `Σ_i α*_i s̄_i`.
    cross: f64,
}

impl<'a> Centered<'a> {
    fn new(truth: &DiscreteMixture, mix: &'a DiscreteMixture, sigma: f64) -> Self {
        let d = mix.dim();
        let k = mix.len();
        let t1 = mix.first_moment();
        let dirs = mix
            .centers()
            .iter()
            .flat_map(|c| c.iter().zip(&t1).map(|(a, m)| (a - m) / sigma).collect::<Vec<_>>())
            .collect();
        let mut offsets = Vec::with_capacity(truth.len() * k);
        let mut cross = 0.0;
        for (ts, wa) in truth.centers().iter().zip(truth.weights()) {
            let sq: Vec<f64> = mix
                .centers()
                .iter()
                .map(|c| ts.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            let sbar: f64 = sq.iter().zip(mix.weights()).map(|(s, a)| s * a).sum();
            cross += wa * sbar;
            offsets.extend(sq.iter().map(|s| (s - sbar) / (2.0 * sigma * sigma)));
        }
        Self {
            mix,
            d,
            dirs,
            offsets,
            cross,
        }
    }

    fn exponents(&self, label: usize, z: &[f64], e: &mut [f64]) {
        let k = e.len();
        for (j, ej) in e.iter_mut().enumerate() {
            let dir = &self.dirs[j * self.d..(j + 1) * self.d];
            let dot: f64 = z.iter().zip(dir).map(|(a, b)| a * b).sum();
            *ej = dot - self.offsets[label * k + j];
        }
    }

    fn remainder(&self, label: usize, z: &[f64], e: &mut [f64]) -> f64 {
        self.exponents(label, z, e);
        log_mean_exp_centered(e, self.mix.weights())
    }
}

/// Population expectations under `Y = θ*_χ + σZ`, by quadrature or Monte Carlo.
///
/// Monte Carlo draws are made once at construction, so every mixture is
/// evaluated on the same `(χ, Z)` sample.
#[derive(Debug, Clone)]
pub struct LikelihoodEvaluator {
    truth: DiscreteMixture,
    ns: NoiseScale,
    method: EvalMethod,
    labels: Vec<usize>,
    z: Vec<f64>,
    weights: Vec<f64>,
}

impl LikelihoodEvaluator {
    pub fn new(truth: DiscreteMixture, ns: NoiseScale, method: EvalMethod) -> Result<Self> {
        let d = truth.dim();
        let (labels, z, weights) = match method {
            EvalMethod::Quadrature { nodes_per_axis } => {
                if d > MAX_QUADRATURE_DIM {
                    return Err(Error::UnsupportedMethod(format!(
                        "quadrature is limited to d ≤ {MAX_QUADRATURE_DIM}, got d = {d}"
                    )));
                }
                if nodes_per_axis < MIN_NODES_PER_AXIS {
                    return invalid(format!(
                        "nodes_per_axis must be at least {MIN_NODES_PER_AXIS}, got {nodes_per_axis}"
                    ));
                }
                let (grid, gw) = GaussHermite::new(nodes_per_axis)?.tensor_grid(d);
                let mut labels = Vec::new();
                let mut z = Vec::new();
                let mut weights = Vec::new();
                for (i, a) in truth.weights().iter().enumerate() {
                    labels.extend(std::iter::repeat_n(i, gw.len()));
                    z.extend_from_slice(&grid);
                    weights.extend(gw.iter().map(|w| a * w));
                }
                (labels, z, weights)
            }
            EvalMethod::MonteCarlo { n_samples, seed } => {
                if n_samples < 2 {
                    return invalid("Monte Carlo needs at least two samples");
                }
                let (labels, z) = latent_draws(&truth, seed, n_samples);
                (labels, z, vec![1.0 / n_samples as f64; n_samples])
            }
        };
        Ok(Self {
            truth,
            ns,
            method,
            labels,
            z,
            weights,
        })
    }

    pub fn quadrature(truth: DiscreteMixture, sigma: f64) -> Result<Self> {
        Self::new(truth, NoiseScale::new(sigma)?, EvalMethod::default())
    }

    pub fn truth(&self) -> &DiscreteMixture {
        &self.truth
    }

    pub fn noise(&self) -> NoiseScale {
        self.ns
    }

    pub fn method(&self) -> EvalMethod {
        self.method
    }

    pub fn n_points(&self) -> usize {
        self.weights.len()
    }

    fn is_monte_carlo(&self) -> bool {
        matches!(self.method, EvalMethod::MonteCarlo { .. })
    }

    fn point(&self, n: usize) -> (usize, &[f64], f64) {
        let d = self.truth.dim();
        (self.labels[n], &self.z[n * d..(n + 1) * d], self.weights[n])
    }

    /// Weighted mean and standard error of `f` over the evaluation points.
    fn expect<F>(&self, k: usize, f: F) -> (f64, f64)
    where
        F: Fn(usize, &[f64], &mut [f64]) -> f64 + Sync,
    {
        let parts = map_chunks(self.n_points(), |range| {
            let mut e = vec![0.0; k];
            range
                .map(|n| {
                    let (label, z, _) = self.point(n);
                    f(label, z, &mut e)
                })
                .collect::<Vec<f64>>()
        });
        let values = parts.concat();
        let mean: f64 = values.iter().zip(&self.weights).map(|(v, w)| v * w).sum();
        let stderr = if self.is_monte_carlo() {
            let n = values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        (mean, stderr)
    }

    fn constant(&self) -> f64 {
        let d = self.truth.dim() as f64;
        let s = self.ns.sigma();
        -0.5 * d * (2.0 * std::f64::consts::PI * s * s).ln() - 0.5 * d
    }

    /// `L(mix) − L(other)` evaluated pointwise on shared points, with its
    /// standard error.
    pub fn loglik_difference(&self, mix: &DiscreteMixture, other: &DiscreteMixture) -> Result<(f64, f64)> {
        check_dim(self.truth.dim(), mix)?;
        check_dim(self.truth.dim(), other)?;
        let s = self.ns.sigma();
        let a = Centered::new(&self.truth, mix, s);
        let b = Centered::new(&self.truth, other, s);
        let (ka, kb) = (mix.len(), other.len());
        let (mean, stderr) = self.expect(ka + kb, |label, z, e| {
            let (ea, eb) = e.split_at_mut(ka);
            a.remainder(label, z, ea) - b.remainder(label, z, &mut eb[..kb])
        });
        Ok((mean - (a.cross - b.cross) / (2.0 * s * s), stderr))
    }
}

impl LikelihoodSource for LikelihoodEvaluator {
    fn sigma(&self) -> f64 {
        self.ns.sigma()
    }

    fn data_mode(&self) -> DataMode {
        DataMode::Population { method: self.method }
    }

    fn dim(&self) -> usize {
        self.truth.dim()
    }

    fn loglik(&self, mix: &DiscreteMixture) -> Result<(f64, f64)> {
        check_dim(self.truth.dim(), mix)?;
        let s = self.ns.sigma();
        let c = Centered::new(&self.truth, mix, s);
        let (rem, stderr) = self.expect(mix.len(), |label, z, e| c.remainder(label, z, e));
        Ok((self.constant() - c.cross / (2.0 * s * s) + rem, stderr))
    }

    fn posterior_moments(&self, mix: &DiscreteMixture) -> Result<PosteriorMoments> {
        check_dim(self.truth.dim(), mix)?;
        let s = self.ns.sigma();
        let d = mix.dim();
        let k = mix.len();
        let c = Centered::new(&self.truth, mix, s);
        // per point: k masses, then k·d residuals, then k·d first moments
        let width = k * (1 + 2 * d);
        let parts = map_chunks(self.n_points(), |range| {
            let mut acc = vec![0.0; width];
            let mut e = vec![0.0; k];
            let mut p = vec![0.0; k];
            for n in range {
                let (label, z, w) = self.point(n);
                c.exponents(label, z, &mut e);
                posterior_into(&e, mix.weights(), &mut p);
                let ts = &self.truth.centers()[label];
                for (j, pj) in p.iter().enumerate() {
                    let wp = w * pj;
                    acc[j] += wp;
                    let theta = &mix.centers()[j];
                    for a in 0..d {
                        let noise = s * z[a];
                        acc[k + j * d + a] += wp * (noise + (ts[a] - theta[a]));
                        acc[k + k * d + j * d + a] += wp * (ts[a] + noise);
                    }
                }
            }
            acc
        });
        let mut total = vec![0.0; width];
        for part in parts {
            for (t, x) in total.iter_mut().zip(part) {
                *t += x;
            }
        }
        let split = |offset: usize| -> Vec<Vec<f64>> {
            (0..k)
                .map(|j| total[offset + j * d..offset + (j + 1) * d].to_vec())
                .collect()
        };
        Ok(PosteriorMoments {
            mass: total[..k].to_vec(),
            residual: split(k),
            first: split(k + k * d),
        })
    }
}

/// `(L(mix), stderr)`; the stderr is zero under quadrature.
pub fn population_loglik(ev: &LikelihoodEvaluator, mix: &DiscreteMixture) -> Result<(f64, f64)> {
    ev.loglik(mix)
}

/// `∇_{θ_χ} L = (α_χ/σ²) E[(Y − θ_χ) w(Y, χ)]` for every center.
pub fn grad_population_loglik(ev: &LikelihoodEvaluator, mix: &DiscreteMixture) -> Result<Vec<Vec<f64>>> {
    ev.loglik_gradient(mix)
}

/// A finite set of observations with known noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    d: usize,
    data: Vec<f64>,
    ns: NoiseScale,
}

impl SampleSet {
    pub fn new(data: &[Vec<f64>], ns: NoiseScale) -> Result<Self> {
        if data.is_empty() {
            return invalid("data: at least one observation is required");
        }
        let d = data[0].len();
        if d == 0 || data.iter().any(|y| y.len() != d) {
            return invalid("data: observations must share a positive dimension");
        }
        Ok(Self {
            d,
            data: data.iter().flatten().copied().collect(),
            ns,
        })
    }

    /// `n` observations of `truth` at noise `ns`, reproducible from `seed`.
    pub fn draw(truth: &DiscreteMixture, ns: NoiseScale, n: usize, seed: u64) -> Result<Self> {
        Self::new(&rng::sample_observations(truth, ns.sigma(), seed, n), ns)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn row(&self, n: usize) -> &[f64] {
        &self.data[n * self.d..(n + 1) * self.d]
    }

    fn log_terms(&self, y: &[f64], mix: &DiscreteMixture, out: &mut [f64]) {
        let s2 = self.ns.sigma() * self.ns.sigma();
        for (o, c) in out.iter_mut().zip(mix.centers()) {
            let sq: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            *o = -sq / (2.0 * s2);
        }
    }
}

impl LikelihoodSource for SampleSet {
    fn sigma(&self) -> f64 {
        self.ns.sigma()
    }

    fn data_mode(&self) -> DataMode {
        DataMode::Sample { n_samples: self.len() }
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn loglik(&self, mix: &DiscreteMixture) -> Result<(f64, f64)> {
        check_dim(self.d, mix)?;
        let k = mix.len();
        let parts = map_chunks(self.len(), |range| {
            let mut e = vec![0.0; k];
            range
                .map(|n| {
                    self.log_terms(self.row(n), mix, &mut e);
                    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let s: f64 = e.iter().zip(mix.weights()).map(|(x, a)| a * (x - hi).exp()).sum();
                    hi + s.ln()
                })
                .collect::<Vec<f64>>()
        });
        let values = parts.concat();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let sig = self.ns.sigma();
        let constant = -0.5 * self.d as f64 * (2.0 * std::f64::consts::PI * sig * sig).ln();
        Ok((constant + mean, stderr))
    }

    fn posterior_moments(&self, mix: &DiscreteMixture) -> Result<PosteriorMoments> {
        check_dim(self.d, mix)?;
        let (d, k) = (self.d, mix.len());
        let width = k * (1 + 2 * d);
        let parts = map_chunks(self.len(), |range| {
            let mut acc = vec![0.0; width];
            let mut e = vec![0.0; k];
            let mut p = vec![0.0; k];
            for n in range {
                let y = self.row(n);
                self.log_terms(y, mix, &mut e);
                posterior_into(&e, mix.weights(), &mut p);
                for (j, pj) in p.iter().enumerate() {
                    acc[j] += pj;
                    let theta = &mix.centers()[j];
                    for a in 0..d {
                        acc[k + j * d + a] += pj * (y[a] - theta[a]);
                        acc[k + k * d + j * d + a] += pj * y[a];
                    }
                }
            }
            acc
        });
        let inv_n = 1.0 / self.len() as f64;
        let mut total = vec![0.0; width];
        for part in parts {
            for (t, x) in total.iter_mut().zip(part) {
                *t += x;
            }
        }
        for t in &mut total {
            *t *= inv_n;
        }
        let split = |offset: usize| -> Vec<Vec<f64>> {
            (0..k)
                .map(|j| total[offset + j * d..offset + (j + 1) * d].to_vec())
                .collect()
        };
        Ok(PosteriorMoments {
            mass: total[..k].to_vec(),
            residual: split(k),
            first: split(k + k * d),
        })
    }
}

/// `(1/N) Σ_n log Σ_j α_j φ_σ(y_n − θ_j)`.
pub fn sample_loglik(data: &[Vec<f64>], mix: &DiscreteMixture, ns: NoiseScale) -> Result<f64> {
    Ok(SampleSet::new(data, ns)?.loglik(mix)?.0)
}

/// Measured and predicted likelihood gaps over a σ grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    /// The expansion order `m`.
    pub order: usize,
    /// Orders `1..=m` and the matching `‖T_k − T_k*‖²`.
    pub orders: Vec<usize>,
    pub moment_gaps: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// `L(truth) − L(mix)` per σ.
    pub neg_loglik_gaps: Vec<f64>,
    pub gap_stderr: Vec<f64>,
    /// `σ^{−2m} ‖T_m − T_m*‖² / (2·m!)` per σ.
    pub leading_terms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub noise_floor: f64,
    /// Grid indices left out of the fit because `|residual| < noise_floor`.
    pub dropped: Vec<usize>,
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// `−(2m + 2)`.
    pub theoretical_slope: f64,
}

fn check_sigma_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 4 {
        return invalid(format!("sigmas: need at least 4 noise levels, got {}", grid.len()));
    }
    if grid.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return invalid("sigmas: noise levels must be positive");
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    if hi < 4.0 * lo {
        return invalid(format!("sigmas: grid spans a factor {} < 4", hi / lo));
    }
    Ok(())
}

/// Checks `‖T_k(mix) − T_k(truth)‖ ≤ tol·max(1, ‖T_k*‖)` for `k < m`.
pub fn check_matched_moments(truth: &DiscreteMixture, mix: &DiscreteMixture, m: usize, tol: f64) -> Result<()> {
    if truth.dim() != mix.dim() {
        return invalid("truth and mixture have different dimensions");
    }
    for k in 1..m {
        let ts = moment_tensor(truth, k)?;
        let gap = moment_tensor(mix, k)?.sub(&ts)?.norm();
        if gap > tol * ts.norm().max(1.0) {
            return Err(Error::PreconditionViolation(format!(
                "moment order {k} is not matched: ‖T_{k} − T_{k}*‖ = {gap:e}"
            )));
        }
    }
    Ok(())
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Measures `L(truth) − L(mix)` against its leading expansion term
/// `σ^{−2m}‖T_m − T_m*‖²/(2·m!)` and fits the residual's log-log slope.
pub fn expansion_scan(
    truth: &DiscreteMixture,
    mix: &DiscreteMixture,
    m: usize,
    sigma_grid: &[f64],
    method: EvalMethod,
    noise_floor: f64,
) -> Result<ExpansionReport> {
    if m == 0 {
        return invalid("order: expansion order must be at least 1");
    }
    check_sigma_grid(sigma_grid)?;
    check_matched_moments(truth, mix, m, MOMENT_MATCH_TOL)?;
    let orders: Vec<usize> = (1..=m).collect();
    let moment_gaps = orders
        .iter()
        .map(|&k| Ok(moment_tensor(mix, k)?.sub(&moment_tensor(truth, k)?)?.norm_squared()))
        .collect::<Result<Vec<f64>>>()?;
    let coeff = moment_gaps[m - 1] / (2.0 * factorial(m));

    let mut gaps = Vec::with_capacity(sigma_grid.len());
    let mut stderrs = Vec::with_capacity(sigma_grid.len());
    let mut leading = Vec::with_capacity(sigma_grid.len());
    let mut residuals = Vec::with_capacity(sigma_grid.len());
    for &s in sigma_grid {
        let ev = LikelihoodEvaluator::new(truth.clone(), NoiseScale::new(s)?, method)?;
        let (gap, se) = ev.loglik_difference(truth, mix)?;
        let lead = coeff * s.powi(-2 * m as i32);
        gaps.push(gap);
        stderrs.push(se);
        leading.push(lead);
        residuals.push(gap - lead);
    }
    let dropped: Vec<usize> = residuals
        .iter()
        .enumerate()
        .filter(|(_, r)| !(r.abs() >= noise_floor))
        .map(|(n, _)| n)
        .collect();
    let fit = fit_loglog(sigma_grid, &residuals, noise_floor);
    Ok(ExpansionReport {
        order: m,
        orders,
        moment_gaps,
        sigmas: sigma_grid.to_vec(),
        neg_loglik_gaps: gaps,
        gap_stderr: stderrs,
        leading_terms: leading,
        residuals,
        noise_floor,
        dropped,
        fitted_slope: fit.map(|f| f.slope),
        slope_stderr: fit.map(|f| f.slope_stderr),
        theoretical_slope: -(2.0 * m as f64 + 2.0),
    })
}
