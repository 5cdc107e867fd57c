//! Finite mixtures of point masses, their moment tensors, and the shift/scale
//! normalization used throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tensor::SymTensor;

/// Weights below this value are rejected at construction.
pub const MIN_WEIGHT: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// K centers in R^d with known positive weights.
///
/// Serializes to the interchange schema
/// `{"dim": d, "centers": [[...], ...], "weights": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRecord", into = "MixtureRecord")]
pub struct DiscreteMixture {
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MixtureRecord {
    dim: usize,
    centers: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<MixtureRecord> for DiscreteMixture {
    type Error = Error;

    fn try_from(r: MixtureRecord) -> Result<Self> {
        let mix = DiscreteMixture::new(r.centers, r.weights)?;
        if mix.dim() != r.dim {
            return invalid(format!(
                "centers: declared dim {} but centers have dimension {}",
                r.dim,
                mix.dim()
            ));
        }
        Ok(mix)
    }
}

impl From<DiscreteMixture> for MixtureRecord {
    fn from(m: DiscreteMixture) -> Self {
        MixtureRecord {
            dim: m.dim(),
            centers: m.centers,
            weights: m.weights,
        }
    }
}

impl DiscreteMixture {
    pub fn new(centers: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return invalid("centers: a mixture needs at least one center");
        }
        if centers.len() != weights.len() {
            return invalid(format!(
                "weights: {} weights for {} centers",
                weights.len(),
                centers.len()
            ));
        }
        let d = centers[0].len();
        if d == 0 {
            return invalid("centers: dimension must be at least 1");
        }
        if centers.iter().any(|c| c.len() != d) {
            return invalid("centers: all centers must share one dimension");
        }
        if centers.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("centers: entries must be finite");
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= MIN_WEIGHT) || !w.is_finite()) {
            return invalid(format!("weights: weight {w} is not a positive probability"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return invalid(format!("weights: weights sum to {total}, not 1"));
        }
        Ok(Self { centers, weights })
    }

    pub fn uniform(centers: Vec<Vec<f64>>) -> Result<Self> {
        let k = centers.len().max(1);
        Self::new(centers, vec![1.0 / k as f64; k])
    }

    /// Same weights, new centers.
    pub fn with_centers(&self, centers: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(centers, self.weights.clone())
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn first_moment(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            for (mi, ci) in m.iter_mut().zip(c) {
                *mi += w * ci;
            }
        }
        m
    }

    /// `max_j ‖θ_j‖`.
    pub fn max_center_norm(&self) -> f64 {
        self.centers.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }

    /// Centers flattened in (center, coordinate) order.
    pub fn flat_centers(&self) -> Vec<f64> {
        self.centers.iter().flatten().copied().collect()
    }

    pub fn from_flat(&self, flat: &[f64]) -> Result<Self> {
        let d = self.dim();
        if flat.len() != d * self.len() {
            return invalid("flat parameter vector has the wrong length");
        }
        self.with_centers(flat.chunks(d).map(|c| c.to_vec()).collect())
    }
}

/// Positive noise standard deviation σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale(f64);

impl NoiseScale {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return invalid(format!("sigma must be positive and finite, got {sigma}"));
        }
        Ok(Self(sigma))
    }

    pub fn sigma(self) -> f64 {
        self.0
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `T_k = Σ_j α_j θ_j^{⊗k}`, computed exactly.
pub fn moment_tensor(mix: &DiscreteMixture, k: usize) -> Result<SymTensor> {
    if k == 0 {
        return invalid("moment order must be at least 1");
    }
    let mut t = SymTensor::zeros(k, mix.dim());
    for (c, w) in mix.centers().iter().zip(mix.weights()) {
        t.add_rank_one(*w, c);
    }
    Ok(t)
}

/// Moment tensors `T_1..T_m`.
pub fn moment_tensors(mix: &DiscreteMixture, max_order: usize) -> Result<Vec<SymTensor>> {
    (1..=max_order).map(|k| moment_tensor(mix, k)).collect()
}

/// `max_j ‖θ_j − T_1‖² / σ²`.
pub fn snr(mix: &DiscreteMixture, ns: NoiseScale) -> f64 {
    let t1 = mix.first_moment();
    let spread = mix
        .centers()
        .iter()
        .map(|c| {
            let d = dist(c, &t1);
            d * d
        })
        .fold(0.0, f64::max);
    spread / (ns.sigma() * ns.sigma())
}

/// Result of [`normalize`]: `original = normalized * scale + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub mixture: DiscreteMixture,
    pub shift: Vec<f64>,
    pub scale: f64,
}

/// Shifts the first moment to zero and rescales so the largest center norm is 1.
pub fn normalize(mix: &DiscreteMixture) -> Result<Normalized> {
    let shift = mix.first_moment();
    let shifted: Vec<Vec<f64>> = mix
        .centers()
        .iter()
        .map(|c| c.iter().zip(&shift).map(|(a, s)| a - s).collect())
        .collect();
    let scale = shifted.iter().map(|c| norm(c)).fold(0.0, f64::max);
    if scale <= 1e-14 * (1.0 + norm(&shift)) {
        return Err(Error::DegenerateMixture(
            "all centers coincide with the first moment; scale is undefined".into(),
        ));
    }
    let centers = shifted
        .into_iter()
        .map(|c| c.into_iter().map(|a| a / scale).collect())
        .collect();
    Ok(Normalized {
        mixture: mix.with_centers(centers)?,
        shift,
        scale,
    })
}

/// `δ(ρ, ρ*) = max ‖θ − θ*‖` over all pairs of support points.
pub fn max_support_distance(a: &DiscreteMixture, b: &DiscreteMixture) -> Result<f64> {
    if a.dim() != b.dim() {
        return invalid("mixtures live in different dimensions");
    }
    let mut best: f64 = 0.0;
    for x in a.centers() {
        for y in b.centers() {
            best = best.max(dist(x, y));
        }
    }
    Ok(best)
}
