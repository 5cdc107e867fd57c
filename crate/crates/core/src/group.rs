//! Finite orthogonal group actions and the orbit mixtures they induce.
//!
//! Continuous groups enter only through uniform discretizations such as
//! [`planar_rotation_group`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mixture::{moment_tensor, DiscreteMixture};
use crate::tensor::SymTensor;

const ORTHOGONALITY_TOL: f64 = 1e-10;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Largest total order `ΣI + ΣJ` accepted by [`check_haar_identity`].
pub const HAAR_MAX_ORDER: usize = 8;

/// A finite set of orthogonal `d × d` matrices with a probability vector.
///
/// JSON form: `{"dim": d, "elements": [[[row], ...], ...], "weights": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupRecord", into = "GroupRecord")]
pub struct FiniteGroupAction {
    dim: usize,
    elements: Vec<Vec<Vec<f64>>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GroupRecord {
    dim: usize,
    elements: Vec<Vec<Vec<f64>>>,
    weights: Vec<f64>,
}

impl TryFrom<GroupRecord> for FiniteGroupAction {
    type Error = Error;

    fn try_from(r: GroupRecord) -> Result<Self> {
        FiniteGroupAction::new(r.dim, r.elements, r.weights)
    }
}

impl From<FiniteGroupAction> for GroupRecord {
    fn from(g: FiniteGroupAction) -> Self {
        GroupRecord {
            dim: g.dim,
            elements: g.elements,
            weights: g.weights,
        }
    }
}

impl FiniteGroupAction {
    pub fn new(dim: usize, elements: Vec<Vec<Vec<f64>>>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || elements.is_empty() {
            return invalid("elements: a group needs dimension ≥ 1 and at least one element");
        }
        if elements.len() != weights.len() {
            return invalid(format!(
                "weights: {} weights for {} elements",
                weights.len(),
                elements.len()
            ));
        }
        for (n, g) in elements.iter().enumerate() {
            if g.len() != dim || g.iter().any(|row| row.len() != dim) {
                return invalid(format!("elements[{n}]: expected a {dim}×{dim} matrix"));
            }
            let dev = orthogonality_defect(g);
            if !(dev <= ORTHOGONALITY_TOL) {
                return invalid(format!("elements[{n}]: not orthogonal (‖gᵀg − I‖∞ = {dev:e})"));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return invalid("weights: group weights must be positive");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return invalid(format!("weights: group weights sum to {total}, not 1"));
        }
        Ok(Self { dim, elements, weights })
    }

    fn uniform(dim: usize, elements: Vec<Vec<Vec<f64>>>) -> Self {
        let n = elements.len();
        Self {
            dim,
            elements,
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Vec<Vec<f64>>] {
        &self.elements
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_uniform(&self) -> bool {
        let w0 = 1.0 / self.len() as f64;
        self.weights.iter().all(|w| (w - w0).abs() <= WEIGHT_SUM_TOL)
    }

    /// `g_j x` for element `j`.
    pub fn apply(&self, j: usize, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.elements[j], x)
    }
}

fn mat_vec(g: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    g.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn orthogonality_defect(g: &[Vec<f64>]) -> f64 {
    let d = g.len();
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let gtg: f64 = (0..d).map(|r| g[r][a] * g[r][b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((gtg - target).abs());
        }
    }
    worst
}

/// Cyclic shifts of R^d: `(g_j θ)_k = θ_{(j+k) mod d}`, uniform weights.
pub fn cyclic_group(d: usize) -> Result<FiniteGroupAction> {
    if d == 0 {
        return invalid("cyclic group dimension must be at least 1");
    }
    let elements = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    let mut row = vec![0.0; d];
                    row[(j + k) % d] = 1.0;
                    row
                })
                .collect()
        })
        .collect();
    Ok(FiniteGroupAction::uniform(d, elements))
}

/// Rotations of the plane by `2πj/n_steps`, uniform weights.
pub fn planar_rotation_group(n_steps: usize) -> Result<FiniteGroupAction> {
    if n_steps == 0 {
        return invalid("rotation group needs at least one step");
    }
    let elements = (0..n_steps)
        .map(|j| {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / n_steps as f64;
            let (s, c) = angle.sin_cos();
            vec![vec![c, -s], vec![s, c]]
        })
        .collect();
    Ok(FiniteGroupAction::uniform(2, elements))
}

/// Centers `g_j s_i` with weights `γ_j p_i`, ordered seed-major.
pub fn orbit_mixture(group: &FiniteGroupAction, seeds: &[(Vec<f64>, f64)]) -> Result<DiscreteMixture> {
    if seeds.is_empty() {
        return invalid("orbit mixture needs at least one seed");
    }
    let mut centers = Vec::with_capacity(seeds.len() * group.len());
    let mut weights = Vec::with_capacity(seeds.len() * group.len());
    for (s, p) in seeds {
        if s.len() != group.dim() {
            return invalid(format!(
                "seed has dimension {} but the group acts on R^{}",
                s.len(),
                group.dim()
            ));
        }
        for (j, gamma) in group.weights().iter().enumerate() {
            centers.push(group.apply(j, s));
            weights.push(gamma * p);
        }
    }
    DiscreteMixture::new(centers, weights)
}

/// `|⟨T_k, ⊗_{i∈I} T_i ⊗ ⊗_{j∈J} T*_j⟩ − Π_I ⟨T_i,T_i⟩ Π_J ⟨T_j,T*_j⟩|`
/// where `T` and `T*` are the orbit moment tensors of `theta` and
/// `theta_star` and `k = ΣI + ΣJ`.
pub fn check_haar_identity(
    group: &FiniteGroupAction,
    theta: &[f64],
    theta_star: &[f64],
    i_orders: &[usize],
    j_orders: &[usize],
) -> Result<f64> {
    if !group.is_uniform() {
        return Err(Error::PreconditionViolation(
            "the orbit identity needs uniform (Haar) group weights".into(),
        ));
    }
    if i_orders.iter().chain(j_orders).any(|&o| o == 0) {
        return invalid("orders in I and J must be positive");
    }
    let k: usize = i_orders.iter().chain(j_orders).sum();
    if k == 0 {
        return invalid("I and J cannot both be empty");
    }
    if k > HAAR_MAX_ORDER {
        return invalid(format!("total order {k} exceeds the limit {HAAR_MAX_ORDER}"));
    }
    let orbit = orbit_mixture(group, &[(theta.to_vec(), 1.0)])?;
    let orbit_star = orbit_mixture(group, &[(theta_star.to_vec(), 1.0)])?;

    let mut factors: Vec<SymTensor> = Vec::new();
    let mut rhs = 1.0;
    for &i in i_orders {
        let t = moment_tensor(&orbit, i)?;
        rhs *= t.inner(&t)?;
        factors.push(t);
    }
    for &j in j_orders {
        let t = moment_tensor(&orbit, j)?;
        let ts = moment_tensor(&orbit_star, j)?;
        rhs *= t.inner(&ts)?;
        factors.push(ts);
    }
    let mut q = factors[0].clone();
    for f in &factors[1..] {
        q = q.outer(f)?;
    }
    let lhs = moment_tensor(&orbit, k)?.inner(&q)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::dist;
    use proptest::prelude::*;

    fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = a.len();
        (0..d)
            .map(|r| (0..d).map(|c| (0..d).map(|t| a[r][t] * b[t][c]).sum()).collect())
            .collect()
    }

    fn contains(set: &[Vec<f64>], x: &[f64]) -> bool {
        set.iter().any(|y| dist(x, y) < 1e-12)
    }

    #[test]
    fn cyclic_of_one_is_identity() {
        let g = cyclic_group(1).unwrap();
        assert_eq!(g.elements(), &[vec![vec![1.0]]]);
    }

    #[test]
    fn cyclic_orbit_of_three_vector() {
        let g = cyclic_group(3).unwrap();
        let orbit: Vec<Vec<f64>> = (0..3).map(|j| g.apply(j, &[1.0, 2.0, 3.0])).collect();
        for expect in [[1.0, 2.0, 3.0], [2.0, 3.0, 1.0], [3.0, 1.0, 2.0]] {
            assert!(contains(&orbit, &expect));
        }
        assert_eq!(orbit[1], vec![2.0, 3.0, 1.0]);
    }

    #[test]
    fn cyclic_composition_closes() {
        let g = cyclic_group(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let prod = mat_mul(&g.elements()[i], &g.elements()[j]);
                assert_eq!(prod, g.elements()[(i + j) % 4]);
            }
        }
    }

    #[test]
    fn rotation_orbits() {
        let g = planar_rotation_group(4).unwrap();
        let orbit: Vec<Vec<f64>> = (0..4).map(|j| g.apply(j, &[1.0, 0.0])).collect();
        for expect in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
            assert!(contains(&orbit, &expect));
        }
        let g = planar_rotation_group(2).unwrap();
        assert!((g.elements()[1][0][0] + 1.0).abs() < 1e-15);
        assert!((g.elements()[1][1][1] + 1.0).abs() < 1e-15);
        assert!(g.elements()[1][0][1].abs() < 1e-15);
    }

    #[test]
    fn rotation_orbit_has_zero_mean() {
        for n in 2..9 {
            let g = planar_rotation_group(n).unwrap();
            let m = orbit_mixture(&g, &[(vec![0.7, -1.3], 1.0)]).unwrap();
            let t1 = m.first_moment();
            assert!(t1[0].abs() < 1e-14 && t1[1].abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn orbit_mixture_examples() {
        let trivial = cyclic_group(1).unwrap();
        let m = orbit_mixture(&trivial, &[(vec![0.4], 1.0)]).unwrap();
        assert_eq!(m.centers(), &[vec![0.4]]);

        let g = cyclic_group(3).unwrap();
        let m = orbit_mixture(&g, &[(vec![1.0, 2.0, 3.0], 1.0)]).unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.weights().iter().all(|w| (w - 1.0 / 3.0).abs() < 1e-15));

        let m = orbit_mixture(&g, &[(vec![1.0, 0.0, 0.0], 0.4), (vec![0.0, 1.0, 1.0], 0.6)]).unwrap();
        assert_eq!(m.len(), 6);
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(matches!(
            orbit_mixture(&g, &[(vec![1.0, 0.0], 1.0)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn haar_identity_examples() {
        let g = cyclic_group(3).unwrap();
        assert_eq!(
            check_haar_identity(&g, &[0.0; 3], &[1.0, 2.0, 3.0], &[1], &[1]).unwrap(),
            0.0
        );
        let r = check_haar_identity(&g, &[0.3, -1.1, 0.8], &[1.2, 0.1, -0.5], &[1], &[1]).unwrap();
        assert!(r <= 1e-10);
        let g = cyclic_group(4).unwrap();
        let r = check_haar_identity(&g, &[0.3, -1.1, 0.8, 0.2], &[1.2, 0.1, -0.5, 0.9], &[2], &[1, 1]).unwrap();
        assert!(r <= 1e-9);
    }

    #[test]
    fn haar_identity_fails_for_non_group_sets() {
        // The identity is a genuine constraint: a non-closed uniform set violates it.
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let (s, c) = 0.3f64.sin_cos();
        let rot = vec![vec![c, -s], vec![s, c]];
        let g = FiniteGroupAction::new(2, vec![id, swap, rot], vec![1.0 / 3.0; 3]).unwrap();
        let r = check_haar_identity(&g, &[1.0, 0.2], &[-0.4, 0.9], &[1], &[1]).unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn haar_identity_rejects_non_uniform_weights() {
        let g = cyclic_group(2).unwrap();
        let skew = FiniteGroupAction::new(2, g.elements().to_vec(), vec![0.3, 0.7]).unwrap();
        assert!(matches!(
            check_haar_identity(&skew, &[1.0, 0.0], &[0.0, 1.0], &[1], &[1]),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn group_json_validation() {
        let g = planar_rotation_group(3).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: FiniteGroupAction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let bad = r#"{"dim":2,"elements":[[[1.0,0.0],[0.0,2.0]]],"weights":[1.0]}"#;
        assert!(serde_json::from_str::<FiniteGroupAction>(bad).is_err());
        let bad = r#"{"dim":1,"elements":[[[1.0]],[[-1.0]]],"weights":[0.5,0.6]}"#;
        let err = serde_json::from_str::<FiniteGroupAction>(bad).unwrap_err();
        assert!(err.to_string().contains("weights"));
    }

    proptest! {
        #[test]
        fn orbit_first_moment_is_group_invariant(
            d in 1usize..7,
            seed in proptest::collection::vec(-2.0f64..2.0, 6),
        ) {
            let g = cyclic_group(d).unwrap();
            let m = orbit_mixture(&g, &[(seed[..d].to_vec(), 1.0)]).unwrap();
            let t1 = m.first_moment();
            for j in 0..g.len() {
                prop_assert!(dist(&g.apply(j, &t1), &t1) <= 1e-10);
            }
        }

        #[test]
        fn orbit_moments_match_direct_enumeration(
            d in 1usize..5,
            seed in proptest::collection::vec(-2.0f64..2.0, 4),
            k in 1usize..4,
        ) {
            let g = cyclic_group(d).unwrap();
            let s = &seed[..d];
            let t = moment_tensor(&orbit_mixture(&g, &[(s.to_vec(), 1.0)]).unwrap(), k).unwrap();
            let mut direct = SymTensor::zeros(k, d);
            for j in 0..d {
                direct.add_rank_one(1.0 / d as f64, &g.apply(j, s));
            }
            prop_assert_eq!(t, direct);
        }
    }
}
