//! Weighted moment matching and the stagewise solver over moment varieties.
//!
//! Stage `k` minimizes `‖T_k − T_k*‖²` over `V_{k−1} = {T_ℓ = T_ℓ*, ℓ < k}` by
//! quadratic-penalty continuation, then projects back onto `V_{k−1}` with
//! minimum-norm Gauss–Newton steps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mixture::{moment_tensor, moment_tensors, DiscreteMixture};
use crate::tensor::SymTensor;

/// `Σ_k λ_k ‖T_k(mix) − T_k*‖²` for `k = 1..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentObjective {
    truth_moments: Vec<SymTensor>,
    weights: Vec<f64>,
}

impl MomentObjective {
    pub fn new(truth: &DiscreteMixture, weights: Vec<f64>) -> Result<Self> {
        Self::from_moments(moment_tensors(truth, weights.len())?, weights)
    }

    pub fn from_moments(truth_moments: Vec<SymTensor>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != truth_moments.len() {
            return invalid("weights: one positive weight per moment order is required");
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return invalid("weights: moment weights must be positive");
        }
        for (k, t) in truth_moments.iter().enumerate() {
            if t.order() != k + 1 || t.dim() != truth_moments[0].dim() {
                return invalid("truth moments must be T_1..T_m of one dimension");
            }
        }
        Ok(Self { truth_moments, weights })
    }

    pub fn max_order(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.truth_moments[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check(&self, mix: &DiscreteMixture) -> Result<()> {
        if mix.dim() != self.dim() {
            return invalid("mixture and objective have different dimensions");
        }
        Ok(())
    }

    /// `√λ_k (T_k − T_k*)` stacked over orders.
    fn residuals(&self, mix: &DiscreteMixture) -> Result<Vec<f64>> {
        let mut r = Vec::new();
        for (k, (ts, w)) in self.truth_moments.iter().zip(&self.weights).enumerate() {
            let diff = moment_tensor(mix, k + 1)?.sub(ts)?;
            let s = w.sqrt();
            r.extend(diff.entries().iter().map(|x| s * x));
        }
        Ok(r)
    }

    /// Jacobian of [`Self::residuals`] with respect to the flat centers.
    fn jacobian(&self, mix: &DiscreteMixture) -> DMatrix<f64> {
        let d = mix.dim();
        let kk = mix.len();
        let rows: usize = (1..=self.max_order()).map(|k| d.pow(k as u32)).sum();
        let mut jac = DMatrix::zeros(rows, kk * d);
        let mut row0 = 0;
        for (k, w) in (1..=self.max_order()).zip(&self.weights) {
            let s = w.sqrt();
            let n = d.pow(k as u32);
            let mut idx = vec![0usize; k];
            for flat in 0..n {
                let mut f = flat;
                for slot in idx.iter_mut().rev() {
                    *slot = f % d;
                    f /= d;
                }
                for (j, (theta, alpha)) in mix.centers().iter().zip(mix.weights()).enumerate() {
                    // ∂/∂θ_{j,a} Π_p θ_j[i_p] = Σ_{p: i_p = a} Π_{q≠p} θ_j[i_q]
                    for p in 0..k {
                        let rest: f64 = idx
                            .iter()
                            .enumerate()
                            .filter(|(q, _)| *q != p)
                            .map(|(_, &i)| theta[i])
                            .product();
                        jac[(row0 + flat, j * d + idx[p])] += s * alpha * rest;
                    }
                }
            }
            row0 += n;
        }
        jac
    }

    pub fn value(&self, mix: &DiscreteMixture) -> Result<f64> {
        self.check(mix)?;
        Ok(self.residuals(mix)?.iter().map(|x| x * x).sum())
    }
}

/// Objective value and per-center gradients
/// `Σ_k λ_k · 2k · α_j · (T_k − T_k*)[θ_j, …, θ_j, ·]`.
pub fn objective_value_and_grad(obj: &MomentObjective, mix: &DiscreteMixture) -> Result<(f64, Vec<Vec<f64>>)> {
    obj.check(mix)?;
    let d = mix.dim();
    let mut value = 0.0;
    let mut grads = vec![vec![0.0; d]; mix.len()];
    for (k, (ts, lam)) in obj.truth_moments.iter().zip(&obj.weights).enumerate() {
        let order = k + 1;
        let diff = moment_tensor(mix, order)?.sub(ts)?;
        value += lam * diff.norm_squared();
        for (g, (theta, alpha)) in grads.iter_mut().zip(mix.centers().iter().zip(mix.weights())) {
            let c = diff.contract_leading(theta)?;
            let scale = lam * 2.0 * order as f64 * alpha;
            for (gi, ci) in g.iter_mut().zip(c) {
                *gi += scale * ci;
            }
        }
    }
    Ok((value, grads))
}

/// `max_{ℓ ≤ k} ‖T_ℓ(mix) − T_ℓ(truth)‖`.
pub fn variety_residual(mix: &DiscreteMixture, truth: &DiscreteMixture, k: usize) -> Result<f64> {
    if k == 0 {
        return invalid("variety order must be at least 1");
    }
    if mix.dim() != truth.dim() {
        return invalid("mixture and truth have different dimensions");
    }
    let mut worst: f64 = 0.0;
    for l in 1..=k {
        worst = worst.max(moment_tensor(mix, l)?.sub(&moment_tensor(truth, l)?)?.norm());
    }
    Ok(worst)
}

/// `(α, β) = ((θ_1 + θ_2)/2, θ_1 − θ_2)` for a uniform two-center mixture.
pub fn two_mixture_coordinates(mix: &DiscreteMixture) -> Result<(Vec<f64>, Vec<f64>)> {
    if mix.len() != 2 {
        return invalid(format!("two-mixture coordinates need K = 2, got K = {}", mix.len()));
    }
    if (mix.weights()[0] - 0.5).abs() > 1e-12 {
        return invalid("two-mixture coordinates need uniform weights");
    }
    let (a, b) = (&mix.centers()[0], &mix.centers()[1]);
    let alpha = a.iter().zip(b).map(|(x, y)| 0.5 * x + 0.5 * y).collect();
    let beta = a.iter().zip(b).map(|(x, y)| x - y).collect();
    Ok((alpha, beta))
}

/// Inverse of [`two_mixture_coordinates`]: centers `α ± β/2`.
pub fn from_two_mixture_coordinates(alpha: &[f64], beta: &[f64]) -> Result<DiscreteMixture> {
    if alpha.len() != beta.len() {
        return invalid("alpha and beta have different dimensions");
    }
    let t1 = alpha.iter().zip(beta).map(|(a, b)| a + 0.5 * b).collect();
    let t2 = alpha.iter().zip(beta).map(|(a, b)| a - 0.5 * b).collect();
    DiscreteMixture::uniform(vec![t1, t2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSolver {
    /// Damped Gauss–Newton on the stacked moment residuals.
    LevenbergMarquardt,
    /// Steepest descent with Armijo backtracking (c = 1e-4, shrink 0.5, first trial step 1).
    GradientDescent,
}

/// Penalty continuation: `μ = initial_mu · growth^r` for `r < rounds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltySchedule {
    pub initial_mu: f64,
    pub growth: f64,
    pub rounds: usize,
    pub max_inner_iter: usize,
    pub solver: InnerSolver,
    /// Finish each stage with a minimum-norm projection onto `V_{k−1}`.
    pub restore_feasibility: bool,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self {
            initial_mu: 1.0,
            growth: 10.0,
            rounds: 8,
            max_inner_iter: 500,
            solver: InnerSolver::LevenbergMarquardt,
            restore_feasibility: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageResult {
    pub stage: usize,
    pub solution: DiscreteMixture,
    /// `‖T_k − T_k*‖²` at the solution.
    pub objective_value: f64,
    /// `max_{ℓ<k} ‖T_ℓ − T_ℓ*‖` (0 for the first stage).
    pub constraint_violation: f64,
    pub converged: bool,
    pub iterations: usize,
    pub diagnostics: String,
}

struct InnerOutcome {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
    note: Option<String>,
}

const STALL_REL: f64 = 1e-12;
const STALL_ITERS: usize = 50;

fn gradient_flat(obj: &MomentObjective, mix: &DiscreteMixture) -> Result<(f64, Vec<f64>)> {
    let (v, g) = objective_value_and_grad(obj, mix)?;
    Ok((v, g.into_iter().flatten().collect()))
}

fn gradient_descent(
    obj: &MomentObjective,
    base: &DiscreteMixture,
    x0: Vec<f64>,
    max_iter: usize,
) -> Result<InnerOutcome> {
    let mut x = x0;
    let (mut f, mut g) = gradient_flat(obj, &base.from_flat(&x)?)?;
    let mut stall = 0;
    for it in 0..max_iter {
        let gg: f64 = g.iter().map(|a| a * a).sum();
        if gg.sqrt() <= 1e-13 * (1.0 + f) {
            return Ok(InnerOutcome {
                x,
                iterations: it,
                converged: true,
                note: None,
            });
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let ft = obj.value(&base.from_flat(&trial)?)?;
            if ft <= f - 1e-4 * t * gg {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            return Ok(InnerOutcome {
                x,
                iterations: it,
                converged: false,
                note: Some("line search failed".into()),
            });
        };
        if (f - ft) <= STALL_REL * f.abs() {
            stall += 1;
            if stall >= STALL_ITERS {
                return Ok(InnerOutcome {
                    x: trial,
                    iterations: it + 1,
                    converged: false,
                    note: Some(format!(
                        "stalled: relative decrease < {STALL_REL:e} for {STALL_ITERS} iterations"
                    )),
                });
            }
        } else {
            stall = 0;
        }
        x = trial;
        (f, g) = gradient_flat(obj, &base.from_flat(&x)?)?;
    }
    Ok(InnerOutcome {
        x,
        iterations: max_iter,
        converged: false,
        note: Some("iteration limit reached".into()),
    })
}

fn levenberg_marquardt(
    obj: &MomentObjective,
    base: &DiscreteMixture,
    x0: Vec<f64>,
    max_iter: usize,
) -> Result<InnerOutcome> {
    let n = x0.len();
    let mut x = x0;
    let mut r = DVector::from_vec(obj.residuals(&base.from_flat(&x)?)?);
    let mut jac = obj.jacobian(&base.from_flat(&x)?);
    let mut lambda = 1e-3 * jtj_scale(&jac);
    let mut stall = 0;
    for it in 0..max_iter {
        let f = r.norm_squared();
        let g = jac.transpose() * &r;
        if g.amax() <= 1e-14 * (1.0 + f.sqrt()) || f <= 1e-32 {
            return Ok(InnerOutcome {
                x,
                iterations: it,
                converged: true,
                note: None,
            });
        }
        let jtj = jac.transpose() * &jac;
        let mut accepted = false;
        while lambda <= 1e20 * jtj_scale(&jac).max(1.0) {
            let a = &jtj + DMatrix::identity(n, n) * lambda;
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda = (lambda * 10.0).max(1e-300);
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let r_new = DVector::from_vec(obj.residuals(&base.from_flat(&trial)?)?);
            // Σ (r_new − r)(r_new + r) keeps small decreases visible when ‖r‖ is large.
            let change: f64 = r_new.iter().zip(r.iter()).map(|(a, b)| (a - b) * (a + b)).sum();
            if change < 0.0 {
                let step_norm = step.norm();
                let x_norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                if -change <= STALL_REL * f {
                    stall += 1;
                } else {
                    stall = 0;
                }
                x = trial;
                r = r_new;
                jac = obj.jacobian(&base.from_flat(&x)?);
                lambda = (lambda / 3.0).max(1e-300);
                accepted = true;
                if step_norm <= 1e-15 * (1.0 + x_norm) {
                    return Ok(InnerOutcome {
                        x,
                        iterations: it + 1,
                        converged: true,
                        note: None,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No representable decrease: a minimizer to working precision
            // when the gradient is negligible.
            let gn = g.amax();
            let ok = gn <= 1e-8 * (1.0 + f.sqrt());
            return Ok(InnerOutcome {
                x,
                iterations: it,
                converged: ok,
                note: (!ok).then(|| format!("no descent step found, ‖g‖∞ = {gn:e}")),
            });
        }
        if stall >= STALL_ITERS {
            let gn = (jac.transpose() * &r).amax();
            let ok = gn <= 1e-8 * (1.0 + r.norm());
            return Ok(InnerOutcome {
                x,
                iterations: it + 1,
                converged: ok,
                note: (!ok).then(|| format!("stalled: relative decrease < {STALL_REL:e} for {STALL_ITERS} iterations")),
            });
        }
    }
    Ok(InnerOutcome {
        x,
        iterations: max_iter,
        converged: false,
        note: Some("iteration limit reached".into()),
    })
}

fn jtj_scale(jac: &DMatrix<f64>) -> f64 {
    jac.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max)
}

/// Minimum-norm Gauss–Newton projection onto `{T_ℓ = T_ℓ*, ℓ ≤ orders}`.
fn restore(truth_moments: &[SymTensor], base: &DiscreteMixture, x0: Vec<f64>) -> Result<Vec<f64>> {
    let cons = MomentObjective::from_moments(truth_moments.to_vec(), vec![1.0; truth_moments.len()])?;
    let mut x = x0;
    let mut r = DVector::from_vec(cons.residuals(&base.from_flat(&x)?)?);
    for _ in 0..50 {
        let rn = r.norm();
        if rn == 0.0 {
            break;
        }
        let jac = cons.jacobian(&base.from_flat(&x)?);
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let Ok(step) = svd.solve(&(-&r), 1e-12 * smax.max(f64::MIN_POSITIVE)) else {
            break;
        };
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let r_new = DVector::from_vec(cons.residuals(&base.from_flat(&trial)?)?);
        if r_new.norm() >= rn {
            break;
        }
        x = trial;
        r = r_new;
    }
    Ok(x)
}

/// Runs stages `1..=m` from `init`, each warm-started from the previous one.
pub fn stagewise_solve(
    truth: &DiscreteMixture,
    init: &DiscreteMixture,
    m: usize,
    schedule: &PenaltySchedule,
) -> Result<Vec<StageResult>> {
    if m == 0 {
        return invalid("orders: at least one stage is required");
    }
    if truth.dim() != init.dim() {
        return invalid("truth and init have different dimensions");
    }
    if schedule.rounds == 0 || !(schedule.initial_mu > 0.0) || !(schedule.growth >= 1.0) {
        return invalid("schedule: need rounds ≥ 1, initial_mu > 0 and growth ≥ 1");
    }
    let truth_moments = moment_tensors(truth, m)?;
    let mut x = init.flat_centers();
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        let rounds = if k == 1 { 1 } else { schedule.rounds };
        let mut iterations = 0;
        let mut converged = true;
        let mut notes = Vec::new();
        for r in 0..rounds {
            let mu = schedule.initial_mu * schedule.growth.powi(r as i32);
            let mut weights = vec![mu; k];
            weights[k - 1] = 1.0;
            let obj = MomentObjective::from_moments(truth_moments[..k].to_vec(), weights)?;
            let outcome = match schedule.solver {
                InnerSolver::LevenbergMarquardt => levenberg_marquardt(&obj, init, x, schedule.max_inner_iter)?,
                InnerSolver::GradientDescent => gradient_descent(&obj, init, x, schedule.max_inner_iter)?,
            };
            x = outcome.x;
            iterations += outcome.iterations;
            if r + 1 == rounds {
                converged = outcome.converged;
            }
            if let Some(note) = outcome.note {
                notes.push(format!("μ={mu:e}: {note}"));
            }
        }
        if k > 1 && schedule.restore_feasibility {
            x = restore(&truth_moments[..k - 1], init, x)?;
        }
        let solution = init.from_flat(&x)?;
        let objective_value = moment_tensor(&solution, k)?.sub(&truth_moments[k - 1])?.norm_squared();
        let constraint_violation = if k == 1 {
            0.0
        } else {
            variety_residual(&solution, truth, k - 1)?
        };
        out.push(StageResult {
            stage: k,
            solution,
            objective_value,
            constraint_violation,
            converged,
            iterations,
            diagnostics: notes.join("; "),
        });
    }
    Ok(out)
}

/// [`stagewise_solve`] for several starting points, in parallel, results in input order.
pub fn stagewise_multistart(
    truth: &DiscreteMixture,
    inits: &[DiscreteMixture],
    m: usize,
    schedule: &PenaltySchedule,
) -> Result<Vec<Vec<StageResult>>> {
    crate::rng::pool().install(|| {
        inits
            .par_iter()
            .map(|init| stagewise_solve(truth, init, m, schedule))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(a: f64) -> DiscreteMixture {
        DiscreteMixture::uniform(vec![vec![a], vec![-a]]).unwrap()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn matched_mixture_has_zero_objective() {
        let truth = DiscreteMixture::new(vec![vec![1.0, 0.5], vec![-0.3, 0.2]], vec![0.4, 0.6]).unwrap();
        let obj = MomentObjective::new(&truth, vec![1.0, 0.5, 0.25]).unwrap();
        let (v, g) = objective_value_and_grad(&obj, &truth).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn first_order_objective_is_quadratic() {
        let truth = DiscreteMixture::new(vec![vec![1.0, 2.0]], vec![1.0]).unwrap();
        let obj = MomentObjective::new(&truth, vec![1.0]).unwrap();
        let m = DiscreteMixture::new(vec![vec![0.5, -1.0]], vec![1.0]).unwrap();
        let (v, g) = objective_value_and_grad(&obj, &m).unwrap();
        assert!((v - (0.25 + 9.0)).abs() < 1e-14);
        assert_eq!(g[0], vec![-1.0, -6.0]);
    }

    #[test]
    fn jacobian_agrees_with_gradient() {
        let truth = DiscreteMixture::new(vec![vec![1.0, 0.5], vec![-0.3, 0.2]], vec![0.4, 0.6]).unwrap();
        let obj = MomentObjective::new(&truth, vec![1.0, 2.0, 0.5]).unwrap();
        let m = DiscreteMixture::new(vec![vec![0.1, -0.7], vec![0.9, 0.4]], vec![0.4, 0.6]).unwrap();
        let (_, g) = gradient_flat(&obj, &m).unwrap();
        let r = DVector::from_vec(obj.residuals(&m).unwrap());
        let jg = obj.jacobian(&m).transpose() * r * 2.0;
        for (a, b) in g.iter().zip(jg.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn variety_residual_examples() {
        assert_eq!(variety_residual(&sym(1.0), &sym(1.0), 3).unwrap(), 0.0);
        assert!(variety_residual(&sym(0.5), &sym(1.0), 1).unwrap() < 1e-16);
        assert!((variety_residual(&sym(0.5), &sym(1.0), 2).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn two_mixture_coordinate_examples() {
        let v = vec![0.3, -1.0];
        let same = DiscreteMixture::uniform(vec![v.clone(), v.clone()]).unwrap();
        let (a, b) = two_mixture_coordinates(&same).unwrap();
        assert_eq!(a, v);
        assert_eq!(b, vec![0.0, 0.0]);
        let opp = DiscreteMixture::uniform(vec![v.clone(), vec![-0.3, 1.0]]).unwrap();
        let (a, b) = two_mixture_coordinates(&opp).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
        assert_eq!(b, vec![0.6, -2.0]);
        let skew = DiscreteMixture::new(vec![vec![0.0], vec![1.0]], vec![0.3, 0.7]).unwrap();
        assert!(two_mixture_coordinates(&skew).is_err());
        assert!(two_mixture_coordinates(&sym(1.0).with_centers(vec![vec![1.0], vec![2.0]]).unwrap()).is_ok());
        let three = DiscreteMixture::uniform(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(two_mixture_coordinates(&three).is_err());
    }

    #[test]
    fn stage_two_reduces_to_rank_one_fit() {
        // ‖T_2 − T_2*‖² = (1/16)‖ββᵀ − β*β*ᵀ‖² on α = α*
        let alpha = [0.4, -0.2];
        let beta_star = [1.0, 0.5];
        let beta = [-0.3, 0.9];
        let truth = from_two_mixture_coordinates(&alpha, &beta_star).unwrap();
        let m = from_two_mixture_coordinates(&alpha, &beta).unwrap();
        let lhs = moment_tensor(&m, 2)
            .unwrap()
            .sub(&moment_tensor(&truth, 2).unwrap())
            .unwrap()
            .norm_squared();
        let mut rhs = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                rhs += (beta[i] * beta[j] - beta_star[i] * beta_star[j]).powi(2);
            }
        }
        assert!((lhs - rhs / 16.0).abs() < 1e-10);
    }

    #[test]
    fn init_at_truth_converges_immediately() {
        let truth = DiscreteMixture::uniform(vec![vec![1.0, 0.2], vec![-0.5, 0.4], vec![0.0, -1.0]]).unwrap();
        let stages = stagewise_solve(&truth, &truth, 3, &PenaltySchedule::default()).unwrap();
        for s in &stages {
            assert!(s.converged);
            assert_eq!(s.objective_value, 0.0);
            assert_eq!(s.constraint_violation, 0.0);
        }
    }

    #[test]
    fn two_mixture_stagewise_reaches_the_truth() {
        let truth = from_two_mixture_coordinates(&[0.3, -0.1], &[1.2, 0.8]).unwrap();
        let init = from_two_mixture_coordinates(&[-1.0, 0.7], &[0.2, 1.5]).unwrap();
        let stages = stagewise_solve(&truth, &init, 2, &PenaltySchedule::default()).unwrap();
        let (a1, _) = two_mixture_coordinates(&stages[0].solution).unwrap();
        assert!(dist(&a1, &[0.3, -0.1]) < 1e-10);
        let (a, b) = two_mixture_coordinates(&stages[1].solution).unwrap();
        assert!(dist(&a, &[0.3, -0.1]) <= 1e-6);
        let err = dist(&b, &[1.2, 0.8]).min(dist(&b, &[-1.2, -0.8]));
        assert!(err <= 1e-4, "β error {err}");
        assert!(stages[1].converged);
    }

    #[test]
    fn orthogonal_start_ends_at_the_saddle() {
        // β = 0 is a saddle; only the exactly invariant x = 0 subspace stays on it.
        let truth = from_two_mixture_coordinates(&[0.0, 0.0], &[2.0, 0.0]).unwrap();
        let init = from_two_mixture_coordinates(&[0.0, 0.3], &[0.0, 1.4]).unwrap();
        for solver in [InnerSolver::LevenbergMarquardt, InnerSolver::GradientDescent] {
            let schedule = PenaltySchedule {
                solver,
                max_inner_iter: 20_000,
                ..PenaltySchedule::default()
            };
            let stages = stagewise_solve(&truth, &init, 2, &schedule).unwrap();
            let (_, b) = two_mixture_coordinates(&stages[1].solution).unwrap();
            assert_eq!(b[0], 0.0);
            if solver == InnerSolver::LevenbergMarquardt {
                assert!(b[1].abs() <= 1e-4, "β = {b:?}");
            } else {
                // ‖β‖ decays only like t^{-1/2} under gradient descent
                assert!(b[1].abs() < 0.1, "β = {b:?}");
            }
        }
    }

    #[test]
    fn gradient_descent_option_handles_the_generic_case() {
        let truth = from_two_mixture_coordinates(&[0.3], &[1.2]).unwrap();
        let init = from_two_mixture_coordinates(&[-0.4], &[0.5]).unwrap();
        let schedule = PenaltySchedule {
            solver: InnerSolver::GradientDescent,
            max_inner_iter: 5000,
            ..PenaltySchedule::default()
        };
        let stages = stagewise_solve(&truth, &init, 2, &schedule).unwrap();
        let (a, b) = two_mixture_coordinates(&stages[1].solution).unwrap();
        assert!((a[0] - 0.3).abs() < 1e-6);
        assert!((b[0].abs() - 1.2).abs() < 1e-4);
    }

    #[test]
    fn stages_stay_feasible() {
        let truth = DiscreteMixture::new(vec![vec![1.0], vec![-0.2], vec![-0.9]], vec![0.3, 0.4, 0.3]).unwrap();
        let init = DiscreteMixture::new(vec![vec![0.4], vec![0.6], vec![-1.5]], vec![0.3, 0.4, 0.3]).unwrap();
        let stages = stagewise_solve(&truth, &init, 3, &PenaltySchedule::default()).unwrap();
        for s in &stages {
            assert!(
                s.constraint_violation <= 1e-6,
                "stage {}: {}",
                s.stage,
                s.constraint_violation
            );
        }
        // three generic equations in three unknowns: stage 3 recovers the truth
        assert!(stages[2].objective_value < 1e-20);
    }

    fn arb_instance() -> impl Strategy<Value = (DiscreteMixture, DiscreteMixture, Vec<f64>)> {
        (
            proptest::collection::vec(-1.5f64..1.5, 6),
            proptest::collection::vec(-1.5f64..1.5, 6),
            0.1f64..0.9,
            proptest::collection::vec(-1.0f64..1.0, 6),
        )
            .prop_map(|(t, m, w, u)| {
                let weights = vec![w / 2.0, w / 2.0, 1.0 - w];
                let truth = DiscreteMixture::new(t.chunks(2).map(|c| c.to_vec()).collect(), weights.clone()).unwrap();
                let mix = DiscreteMixture::new(m.chunks(2).map(|c| c.to_vec()).collect(), weights).unwrap();
                (truth, mix, u)
            })
    }

    proptest! {
        #[test]
        fn directional_derivative_matches_central_difference((truth, mix, u) in arb_instance()) {
            let obj = MomentObjective::new(&truth, vec![1.0, 0.7, 0.3]).unwrap();
            let (_, g) = gradient_flat(&obj, &mix).unwrap();
            let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(un > 1e-3);
            let u: Vec<f64> = u.iter().map(|x| x / un).collect();
            let h = 1e-5;
            let x = mix.flat_centers();
            let shift = |s: f64| -> Vec<f64> { x.iter().zip(&u).map(|(a, b)| a + s * b).collect() };
            let fp = obj.value(&mix.from_flat(&shift(h)).unwrap()).unwrap();
            let fm = obj.value(&mix.from_flat(&shift(-h)).unwrap()).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
            let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3 * gn).max(1e-8), "{} vs {}", fd, an);
        }

        #[test]
        fn relabeling_equal_weight_centers_is_invisible((truth, mix, _u) in arb_instance()) {
            let obj = MomentObjective::new(&truth, vec![1.0, 1.0, 1.0]).unwrap();
            let c = mix.centers();
            let swapped = mix.with_centers(vec![c[1].clone(), c[0].clone(), c[2].clone()]).unwrap();
            let a = obj.value(&mix).unwrap();
            let b = obj.value(&swapped).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + a));
        }

        #[test]
        fn two_mixture_round_trip(a in proptest::collection::vec(-5.0f64..5.0, 3), b in proptest::collection::vec(-5.0f64..5.0, 3)) {
            let m = DiscreteMixture::uniform(vec![a.clone(), b.clone()]).unwrap();
            let (al, be) = two_mixture_coordinates(&m).unwrap();
            let back = from_two_mixture_coordinates(&al, &be).unwrap();
            prop_assert!(dist(&back.centers()[0], &a) <= 1e-14 * 10.0);
            prop_assert!(dist(&back.centers()[1], &b) <= 1e-14 * 10.0);
        }
    }
}
