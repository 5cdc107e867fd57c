//! Critical points of `½(p_{n+1} − p*_{n+1})²` restricted to the power-sum
//! variety `V_n` of a weighted 1-D mixture, and two ways of classifying them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Known weights, truth values and their power sums `p_ℓ* = Σ α_j (θ*_j)^ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSumSystem {
    weights: Vec<f64>,
    truth_values: Vec<f64>,
    truth_power_sums: Vec<f64>,
}

/// `Σ_j α_j x_j^ℓ`.
pub fn weighted_power_sum(weights: &[f64], x: &[f64], ell: usize) -> f64 {
    weights.iter().zip(x).map(|(a, v)| a * v.powi(ell as i32)).sum()
}

impl PowerSumSystem {
    pub fn new(weights: Vec<f64>, truth_values: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || truth_values.len() != k {
            return invalid("weights and truth values must be non-empty and of equal length");
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return invalid("weights: must be positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights: must sum to 1, got {total}"));
        }
        if truth_values.iter().any(|v| !v.is_finite()) {
            return invalid("truth: values must be finite");
        }
        let truth_power_sums = (1..=k + 1)
            .map(|l| weighted_power_sum(&weights, &truth_values, l))
            .collect();
        Ok(Self {
            weights,
            truth_values,
            truth_power_sums,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn truth_values(&self) -> &[f64] {
        &self.truth_values
    }

    /// `p_ℓ*`, for `1 ≤ ℓ ≤ K + 1`.
    pub fn truth_power_sum(&self, ell: usize) -> f64 {
        match self.truth_power_sums.get(ell.wrapping_sub(1)) {
            Some(p) => *p,
            None => weighted_power_sum(&self.weights, &self.truth_values, ell),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return invalid(format!(
                "point has {} coordinates, system has K = {}",
                x.len(),
                self.len()
            ));
        }
        Ok(())
    }
}

pub fn power_sum(sys: &PowerSumSystem, x: &[f64], ell: usize) -> Result<f64> {
    sys.check_point(x)?;
    if ell == 0 {
        return invalid("power-sum order must be at least 1");
    }
    Ok(weighted_power_sum(&sys.weights, x, ell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    LocalMin,
    LocalMax,
    Saddle,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint1D {
    /// The `n` distinct values, strictly decreasing.
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// `assignment[j]` is the index into `values` carried by slot `j`.
    pub assignment: Vec<usize>,
    pub stage: usize,
    /// The full point in `R^K`.
    pub point: Vec<f64>,
    pub p_next: f64,
    pub p_next_star: f64,
    /// Distance of `∇p_{n+1}` from `span{∇p_1, …, ∇p_n}`, relative to `‖∇p_{n+1}‖`.
    pub stationarity_residual: f64,
    /// Smallest singular value of the `n × K` constraint Jacobian.
    pub min_singular_value: f64,
    /// Multiplicity rule; `None` when the point lies on `V_{n+1}`.
    pub classification: Option<Classification>,
}

pub const STATIONARITY_TOL: f64 = 1e-8;
pub const COLLISION_TOL: f64 = 1e-8;
pub const ON_VARIETY_TOL: f64 = 1e-10;
pub const MULTISTARTS: usize = 20;
pub const MAX_ENUMERATED_K: usize = 6;

/// All compositions of `k` into `n` positive parts.
pub fn multiplicity_vectors(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for m in 1..=left.saturating_sub(parts - 1) {
            cur.push(m);
            rec(left - m, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n >= 1 && n <= k {
        rec(k, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Every slot-to-value assignment with group sizes `multiplicities`
/// (ordered set partitions), in lexicographic order.
pub fn enumerate_assignments(multiplicities: &[usize]) -> Result<Vec<Vec<usize>>> {
    let k: usize = multiplicities.iter().sum();
    if multiplicities.is_empty() || multiplicities.contains(&0) {
        return invalid("multiplicities must be positive");
    }
    if k > MAX_ENUMERATED_K {
        return invalid(format!(
            "assignments are enumerated only for K ≤ {MAX_ENUMERATED_K}; pass one explicitly for K = {k}"
        ));
    }
    fn rec(slot: usize, left: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot == cur.len() {
            out.push(cur.clone());
            return;
        }
        for g in 0..left.len() {
            if left[g] > 0 {
                left[g] -= 1;
                cur[slot] = g;
                rec(slot + 1, left, cur, out);
                left[g] += 1;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, &mut multiplicities.to_vec(), &mut vec![0; k], &mut out);
    Ok(out)
}

fn check_pattern(sys: &PowerSumSystem, multiplicities: &[usize], assignment: &[usize]) -> Result<()> {
    let k = sys.len();
    let n = multiplicities.len();
    if n == 0 || multiplicities.contains(&0) || multiplicities.iter().sum::<usize>() != k {
        return invalid(format!("multiplicities must be positive and sum to K = {k}"));
    }
    if n >= k {
        return invalid(format!("stage n = {n} must satisfy 1 ≤ n ≤ K − 1 = {}", k - 1));
    }
    if assignment.len() != k || assignment.iter().any(|&g| g >= n) {
        return invalid("assignment must map each of the K slots to a value index");
    }
    for (g, &m) in multiplicities.iter().enumerate() {
        if assignment.iter().filter(|&&a| a == g).count() != m {
            return invalid("assignment group sizes must equal the multiplicities");
        }
    }
    Ok(())
}

/// Damped Newton on `Σ_i M_i v_i^ℓ = p_ℓ*`, `ℓ = 1..n`.
fn reduced_newton(masses: &[f64], targets: &[f64], start: Vec<f64>) -> Option<Vec<f64>> {
    let n = masses.len();
    let residual = |v: &[f64]| -> DVector<f64> {
        DVector::from_iterator(n, (1..=n).map(|l| weighted_power_sum(masses, v, l) - targets[l - 1]))
    };
    let scale: Vec<f64> = targets.iter().map(|t| 1.0 + t.abs()).collect();
    let merit = |r: &DVector<f64>| r.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>();
    let mut v = start;
    let mut r = residual(&v);
    for _ in 0..200 {
        if r.iter().zip(&scale).all(|(a, s)| a.abs() <= 1e-14 * s) {
            return Some(v);
        }
        let jac = DMatrix::from_fn(n, n, |l, i| (l + 1) as f64 * masses[i] * v[i].powi(l as i32));
        let step = jac.lu().solve(&(-&r))?;
        let f0 = merit(&r);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = v.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            let rt = residual(&trial);
            if merit(&rt) < f0 {
                v = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return None;
            }
        }
        if v.iter().any(|x| !x.is_finite() || x.abs() > 1e6) {
            return None;
        }
    }
    r.iter().zip(&scale).all(|(a, s)| a.abs() <= 1e-12 * s).then_some(v)
}

fn constraint_jacobian(weights: &[f64], x: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, x.len(), |l, j| (l + 1) as f64 * weights[j] * x[j].powi(l as i32))
}

fn power_sum_gradient(weights: &[f64], x: &[f64], ell: usize) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        weights
            .iter()
            .zip(x)
            .map(|(a, v)| ell as f64 * a * v.powi(ell as i32 - 1)),
    )
}

/// Finds a critical point of `f_{n+1}|_{V_n}` with slot `j` carrying
/// `values[assignment[j]]` and `values` strictly decreasing.
pub fn find_critical_point(
    sys: &PowerSumSystem,
    multiplicities: &[usize],
    assignment: &[usize],
    seed: u64,
) -> Result<CriticalPoint1D> {
    check_pattern(sys, multiplicities, assignment)?;
    let n = multiplicities.len();
    let mut masses = vec![0.0; n];
    for (&g, a) in assignment.iter().zip(&sys.weights) {
        masses[g] += a;
    }
    let targets: Vec<f64> = (1..=n).map(|l| sys.truth_power_sum(l)).collect();
    let lo = sys.truth_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sys.truth_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.5 * (hi - lo).max(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut collided = false;
    for _ in 0..MULTISTARTS {
        let mut start: Vec<f64> = (0..n).map(|_| rng.random_range(lo - pad..hi + pad)).collect();
        start.sort_by(|a, b| b.total_cmp(a));
        let Some(v) = reduced_newton(&masses, &targets, start) else {
            continue;
        };
        let gap = v.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        if gap.abs() <= COLLISION_TOL {
            collided = true;
            continue;
        }
        if gap < 0.0 {
            // a solution for a different ordering of the groups
            continue;
        }
        return certify(sys, multiplicities, assignment, v);
    }
    if collided {
        return Err(Error::DegenerateSolution(format!(
            "values collide within {COLLISION_TOL:e} for multiplicities {multiplicities:?}"
        )));
    }
    Err(Error::NotFound(format!(
        "no ordered solution for multiplicities {multiplicities:?}, assignment {assignment:?} from {MULTISTARTS} starts"
    )))
}

fn certify(
    sys: &PowerSumSystem,
    multiplicities: &[usize],
    assignment: &[usize],
    values: Vec<f64>,
) -> Result<CriticalPoint1D> {
    let n = values.len();
    let point: Vec<f64> = assignment.iter().map(|&g| values[g]).collect();
    let jac = constraint_jacobian(&sys.weights, &point, n);
    let min_singular_value = jac.singular_values().min();
    if min_singular_value <= STATIONARITY_TOL {
        return Err(Error::DegenerateSolution(format!(
            "constraint gradients nearly dependent (σ_min = {min_singular_value:e})"
        )));
    }
    let grad = power_sum_gradient(&sys.weights, &point, n + 1);
    let coef = jac
        .transpose()
        .svd(true, true)
        .solve(&grad, 0.0)
        .map_err(|e| Error::NumericalDegeneracy(e.to_string()))?;
    let stationarity_residual = (jac.transpose() * coef - &grad).norm() / grad.norm().max(1.0);
    if stationarity_residual > STATIONARITY_TOL {
        return Err(Error::NotACriticalPoint(format!(
            "stationarity residual {stationarity_residual:e}"
        )));
    }
    let p_next = weighted_power_sum(&sys.weights, &point, n + 1);
    let mut cp = CriticalPoint1D {
        values,
        multiplicities: multiplicities.to_vec(),
        assignment: assignment.to_vec(),
        stage: n,
        point,
        p_next,
        p_next_star: sys.truth_power_sum(n + 1),
        stationarity_residual,
        min_singular_value,
        classification: None,
    };
    cp.classification = classify_by_multiplicity(&cp, sys).ok();
    Ok(cp)
}

/// Every critical point reachable for the given multiplicities, one per assignment.
/// Assignments without an ordered solution are skipped.
pub fn critical_points_for(sys: &PowerSumSystem, multiplicities: &[usize], seed: u64) -> Result<Vec<CriticalPoint1D>> {
    let mut out = Vec::new();
    for (i, assignment) in enumerate_assignments(multiplicities)?.iter().enumerate() {
        match find_critical_point(sys, multiplicities, assignment, seed.wrapping_add(i as u64)) {
            Ok(cp) => out.push(cp),
            Err(Error::NotFound(_)) | Err(Error::DegenerateSolution(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Sign rule on the multiplicity vector.
///
/// Only the sign of `q_n'` at repeated values matters, and it alternates from
/// `+` at the largest value. Repeats only at odd positions give sign `+`,
/// only at even positions sign `−`, both give a saddle.
pub fn classify_by_multiplicity(cp: &CriticalPoint1D, sys: &PowerSumSystem) -> Result<Classification> {
    let n = cp.multiplicities.len();
    let gap = cp.p_next - sys.truth_power_sum(n + 1);
    if gap.abs() <= ON_VARIETY_TOL {
        return Err(Error::OnVariety(format!(
            "p_{}(x) − p*_{} = {gap:e}; the point lies on V_{}",
            n + 1,
            n + 1,
            n + 1
        )));
    }
    let odd_repeats = cp.multiplicities.iter().step_by(2).any(|&m| m > 1);
    let even_repeats = cp.multiplicities.iter().skip(1).step_by(2).any(|&m| m > 1);
    let sign = match (odd_repeats, even_repeats) {
        (true, true) => return Ok(Classification::Saddle),
        (true, false) => 1.0,
        (false, true) => -1.0,
        (false, false) => return invalid("all multiplicities are 1: the point is isolated in V_n"),
    };
    Ok(if sign * gap > 0.0 {
        Classification::LocalMin
    } else {
        Classification::LocalMax
    })
}

/// Value, gradient and Hessian of a smooth function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub type JetFn<'a> = dyn Fn(&[f64]) -> Jet + 'a;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianReport {
    pub classification: Classification,
    /// Eigenvalues of the projected form, ascending.
    pub spectrum: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub tol: f64,
}

/// Second-order test for `f` on `{g_j = 0}`: the form `∇²f − Σ λ_j ∇²g_j`
/// on the null space of the constraint Jacobian.
///
/// `tol` defaults to `1e-7·(1 + ‖H‖_F)`.
pub fn restricted_hessian_classify(
    f: &JetFn<'_>,
    constraints: &[&JetFn<'_>],
    x: &[f64],
    tol: Option<f64>,
) -> Result<HessianReport> {
    let k = x.len();
    let n = constraints.len();
    if n >= k {
        return invalid("need fewer constraints than coordinates");
    }
    let fj = f(x);
    let gj: Vec<Jet> = constraints.iter().map(|g| g(x)).collect();
    for (i, g) in gj.iter().enumerate() {
        if g.value.abs() > 1e-8 * g.grad.norm().max(1.0) {
            return Err(Error::PreconditionViolation(format!(
                "constraint {i} violated by {:e}",
                g.value
            )));
        }
    }
    let jac = DMatrix::from_fn(n, k, |i, j| gj[i].grad[j]);
    let smin = jac.singular_values().min();
    if n > 0 && smin <= 1e-8 {
        return Err(Error::PreconditionViolation(format!(
            "constraint gradients are dependent (σ_min = {smin:e})"
        )));
    }
    let lambda = if n == 0 {
        DVector::zeros(0)
    } else {
        jac.transpose()
            .svd(true, true)
            .solve(&fj.grad, 0.0)
            .map_err(|e| Error::NumericalDegeneracy(e.to_string()))?
    };
    let res = (jac.transpose() * &lambda - &fj.grad).norm();
    if res > 1e-6 * fj.grad.norm().max(1.0) {
        return Err(Error::NotACriticalPoint(format!("multiplier residual {res:e}")));
    }
    let mut h = fj.hess.clone();
    for (l, g) in lambda.iter().zip(&gj) {
        h -= &g.hess * *l;
    }
    let tol = tol.unwrap_or(1e-7 * (1.0 + h.norm()));
    // tangent basis: eigenvectors of JᵀJ for its k − n smallest eigenvalues
    let eig = (jac.transpose() * &jac).symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let basis = DMatrix::from_fn(k, k - n, |r, c| eig.eigenvectors[(r, order[c])]);
    let projected = basis.transpose() * &h * &basis;
    let projected = (&projected + projected.transpose()) * 0.5;
    let mut spectrum: Vec<f64> = projected.symmetric_eigenvalues().iter().cloned().collect();
    spectrum.sort_by(f64::total_cmp);
    let pos = spectrum.iter().any(|&e| e > tol);
    let neg = spectrum.iter().any(|&e| e < -tol);
    let flat = spectrum.iter().any(|&e| e.abs() <= tol);
    let classification = match (pos, neg, flat) {
        (true, true, _) => Classification::Saddle,
        (true, false, false) => Classification::LocalMin,
        (false, true, false) => Classification::LocalMax,
        _ => Classification::Inconclusive,
    };
    Ok(HessianReport {
        classification,
        spectrum,
        multipliers: lambda.iter().cloned().collect(),
        tol,
    })
}

fn power_sum_jet(weights: &[f64], x: &[f64], ell: usize, level: f64) -> Jet {
    let l = ell as i32;
    Jet {
        value: weighted_power_sum(weights, x, ell) - level,
        grad: power_sum_gradient(weights, x, ell),
        hess: DMatrix::from_diagonal(&DVector::from_iterator(
            x.len(),
            weights
                .iter()
                .zip(x)
                .map(|(a, v)| (l * (l - 1)) as f64 * a * v.powi(l - 2)),
        )),
    }
}

/// [`restricted_hessian_classify`] for `f_{n+1} = ½(p_{n+1} − p*_{n+1})²` on `V_n`.
pub fn hessian_classify_critical_point(cp: &CriticalPoint1D, sys: &PowerSumSystem) -> Result<HessianReport> {
    sys.check_point(&cp.point)?;
    let n = cp.stage;
    let w = sys.weights.clone();
    let star = sys.truth_power_sum(n + 1);
    let f = |x: &[f64]| {
        let p = power_sum_jet(&w, x, n + 1, star);
        Jet {
            value: 0.5 * p.value * p.value,
            hess: &p.hess * p.value + &p.grad * p.grad.transpose(),
            grad: &p.grad * p.value,
        }
    };
    let gs: Vec<Box<JetFn<'_>>> = (1..=n)
        .map(|l| {
            let w = w.clone();
            let level = sys.truth_power_sum(l);
            Box::new(move |x: &[f64]| power_sum_jet(&w, x, l, level)) as Box<JetFn<'_>>
        })
        .collect();
    let refs: Vec<&JetFn<'_>> = gs.iter().map(|g| g.as_ref()).collect();
    restricted_hessian_classify(&f, &refs, &cp.point, None)
}

/// Truth values uniform on `[−1, 1]` with pairwise gaps ≥ 1e-3, re-drawn otherwise.
pub fn draw_generic_truth(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        v.sort_by(f64::total_cmp);
        if v.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            return v;
        }
    }
}
