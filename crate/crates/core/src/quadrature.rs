//! Gauss–Hermite rules for expectations over standard normal vectors.

use crate::error::{invalid, Result};

/// n-point rule with `E[f(Z)] ≈ Σ_i w_i f(z_i)` for `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes from Newton iteration on the orthonormal Hermite recurrence,
    /// rescaled from the `e^{-x²}` weight to the standard normal density.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("a Gauss–Hermite rule needs at least one node");
        }
        const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z: f64 = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * (1.0 + z.abs()) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        // ascending order
        let nodes = x.iter().rev().map(|xi| sqrt2 * xi).collect();
        let weights = w.iter().rev().map(|wi| wi / sqrt_pi).collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Tensor-product rule on R^d: flat points (row-major, `d` per point) and weights.
    pub fn tensor_grid(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let total = n.pow(d as u32);
        let mut points = Vec::with_capacity(total * d);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut w = 1.0;
            for &i in &idx {
                points.push(self.nodes[i]);
                w *= self.weights[i];
            }
            weights.push(w);
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < n {
                    break;
                }
                *slot = 0;
            }
        }
        (points, weights)
    }
}
