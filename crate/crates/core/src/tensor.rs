//! Dense order-k tensors over R^d.
//!
//! Entries are stored row-major: the multi-index `(i_1, ..., i_k)` maps to
//! `sum_p i_p * d^(k-1-p)`. Moment tensors are symmetric, but outer products
//! of moment tensors (used by the orbit identities) are not, so nothing here
//! assumes symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dense tensor of order `k >= 1` with `d^k` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self {
            order,
            dim,
            entries: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn from_entries(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        if order == 0 || dim == 0 {
            return invalid("tensor order and dimension must be positive");
        }
        if entries.len() != dim.pow(order as u32) {
            return invalid(format!(
                "expected {} entries for order {order}, dim {dim}; got {}",
                dim.pow(order as u32),
                entries.len()
            ));
        }
        Ok(Self { order, dim, entries })
    }

    /// `x^{⊗k}`.
    pub fn rank_one(x: &[f64], order: usize) -> Self {
        let mut t = Self::zeros(order, x.len());
        t.add_rank_one(1.0, x);
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.order);
        let flat = index.iter().fold(0, |acc, &i| acc * self.dim + i);
        self.entries[flat]
    }

    /// Adds `scale * x^{⊗k}` in place.
    pub fn add_rank_one(&mut self, scale: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let powers = outer_power(x, self.order);
        for (e, p) in self.entries.iter_mut().zip(powers) {
            *e += scale * p;
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.order != other.order || self.dim != other.dim {
            return invalid(format!(
                "tensor shape mismatch: order {} dim {} vs order {} dim {}",
                self.order, self.dim, other.order, other.dim
            ));
        }
        Ok(())
    }

    /// Entry-wise inner product of the vectorizations.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum())
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(Self {
            order: self.order,
            dim: self.dim,
            entries,
        })
    }

    /// `self ⊗ other`, an order `k + l` tensor.
    pub fn outer(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return invalid("outer product of tensors over different dimensions");
        }
        let mut entries = Vec::with_capacity(self.entries.len() * other.entries.len());
        for a in &self.entries {
            entries.extend(other.entries.iter().map(|b| a * b));
        }
        Ok(Self {
            order: self.order + other.order,
            dim: self.dim,
            entries,
        })
    }

    /// Contracts the first `k - 1` indices against copies of `x`, leaving a
    /// d-vector indexed by the last slot.
    pub fn contract_leading(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return invalid("contraction vector has the wrong dimension");
        }
        let d = self.dim;
        let mut current = self.entries.clone();
        for _ in 1..self.order {
            let rest = current.len() / d;
            let mut next = vec![0.0; rest];
            for (i, xi) in x.iter().enumerate() {
                let block = &current[i * rest..(i + 1) * rest];
                for (n, b) in next.iter_mut().zip(block) {
                    *n += xi * b;
                }
            }
            current = next;
        }
        Ok(current)
    }

    /// Largest deviation between this tensor and the transpose that swaps
    /// index slots `a` and `b`.
    pub fn transpose_deviation(&self, a: usize, b: usize) -> f64 {
        let mut idx = vec![0usize; self.order];
        let mut worst: f64 = 0.0;
        for flat in 0..self.entries.len() {
            unflatten(flat, self.dim, &mut idx);
            idx.swap(a, b);
            let swapped = idx.iter().fold(0, |acc, &i| acc * self.dim + i);
            worst = worst.max((self.entries[flat] - self.entries[swapped]).abs());
        }
        worst
    }
}

fn unflatten(mut flat: usize, dim: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Row-major entries of `x^{⊗k}`.
pub(crate) fn outer_power(x: &[f64], order: usize) -> Vec<f64> {
    let mut acc = vec![1.0];
    for _ in 0..order {
        let mut next = Vec::with_capacity(acc.len() * x.len());
        for a in &acc {
            next.extend(x.iter().map(|xi| a * xi));
        }
        acc = next;
    }
    acc
}

/// Free-function form of [`SymTensor::inner`].
pub fn tensor_inner(t: &SymTensor, s: &SymTensor) -> Result<f64> {
    t.inner(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_one_inner_is_power_of_dot() {
        let x = SymTensor::rank_one(&[1.0, 2.0], 2);
        let y = SymTensor::rank_one(&[3.0, 1.0], 2);
        assert_eq!(x.inner(&y).unwrap(), 25.0);
    }

    #[test]
    fn inner_with_zero() {
        let t = SymTensor::rank_one(&[0.3, -1.2, 2.0], 3);
        assert_eq!(t.inner(&SymTensor::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn inner_matches_explicit_index_loop() {
        let t = SymTensor::rank_one(&[0.7, -0.4], 3);
        let mut s = SymTensor::rank_one(&[-1.1, 0.25], 3);
        s.add_rank_one(0.6, &[0.5, 2.0]);
        let mut brute = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    brute += t.get(&[i, j, k]) * s.get(&[i, j, k]);
                }
            }
        }
        assert!((t.inner(&s).unwrap() - brute).abs() < 1e-14);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = SymTensor::zeros(2, 3);
        let b = SymTensor::zeros(3, 3);
        assert!(a.inner(&b).is_err());
        assert!(SymTensor::zeros(2, 2).inner(&SymTensor::zeros(2, 3)).is_err());
    }

    #[test]
    fn contract_leading_of_rank_one() {
        // <x^{⊗3}, y^{⊗2} ⊗ e_a> = (x·y)^2 x_a
        let x = [1.0, -2.0, 0.5];
        let y = [0.3, 0.1, 2.0];
        let t = SymTensor::rank_one(&x, 3);
        let v = t.contract_leading(&y).unwrap();
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        for a in 0..3 {
            assert!((v[a] - dot * dot * x[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn outer_product_orders_add() {
        let a = SymTensor::rank_one(&[1.0, 2.0], 1);
        let b = SymTensor::rank_one(&[3.0, 4.0], 2);
        let c = a.outer(&b).unwrap();
        assert_eq!(c.order(), 3);
        assert_eq!(c.get(&[1, 0, 1]), 2.0 * 3.0 * 4.0);
    }

    proptest! {
        #[test]
        fn rank_one_sums_are_symmetric(
            xs in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 3), 1..4),
            order in 2usize..5,
            a in 0usize..4,
            b in 0usize..4,
        ) {
            let mut t = SymTensor::zeros(order, 3);
            for x in &xs {
                t.add_rank_one(0.5, x);
            }
            prop_assert!(t.transpose_deviation(a % order, b % order) <= 1e-12);
        }
    }
}
