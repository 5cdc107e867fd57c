//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use astro_float::{BigFloat, Consts, RoundingMode};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const P: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

/// A discrete variable on `[-1, 1]` with 2 to 6 atoms.
pub fn random_variable(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(2..=6);
    let atoms: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    (atoms, raw.iter().map(|w| w / total).collect())
}

pub fn moments(atoms: &[f64], probs: &[f64], m: usize) -> Vec<f64> {
    (1..=m)
        .map(|k| atoms.iter().zip(probs).map(|(x, p)| p * x.powi(k as i32)).sum())
        .collect()
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, P)
}

fn to_f64(x: &BigFloat) -> f64 {
    format!("{x}").parse().expect("BigFloat prints a parseable decimal")
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// m-th central difference of `log M(t)` at 0 with step `h`.
pub fn fd_cumulant(atoms: &[f64], probs: &[f64], m: usize, h: f64) -> f64 {
    let mut cc = Consts::new().expect("constants cache");
    // Stencil points are formed in BigFloat: rounding `offset * h` in f64
    // breaks the symmetry and leaks f'(0)·ε/h^m into the result.
    let log_mgf = |t: BigFloat, cc: &mut Consts| -> BigFloat {
        let mut s = big(0.0);
        for (x, p) in atoms.iter().zip(probs) {
            let e = t.mul(&big(*x), P, RM).exp(P, RM, cc);
            s = s.add(&big(*p).mul(&e, P, RM), P, RM);
        }
        s.ln(P, RM, cc)
    };
    let mut acc = big(0.0);
    for j in 0..=m {
        let offset = m as f64 / 2.0 - j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let term = big(sign * binomial(m, j)).mul(&log_mgf(big(offset).mul(&big(h), P, RM), &mut cc), P, RM);
        acc = acc.add(&term, P, RM);
    }
    let hm = big(h).powi(m, P, RM);
    to_f64(&acc.div(&hm, P, RM))
}

/// Least-squares fit of finite-difference κ_4 on the five degree-4 moment
/// monomials, over `rows` random variables. Recovers the table coefficients
/// without consulting them.
pub fn fourth_order_regression(seed: u64, rows: usize) -> Vec<(lowsnr::cumulants::Partition, f64)> {
    use rand::SeedableRng;
    let parts = lowsnr::cumulants::partitions_with_max_part(4, 4, false);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = nalgebra::DMatrix::zeros(rows, parts.len());
    let mut b = nalgebra::DVector::zeros(rows);
    for r in 0..rows {
        let (atoms, probs) = random_variable(&mut rng);
        let mu = moments(&atoms, &probs, 4);
        for (c, p) in parts.iter().enumerate() {
            a[(r, c)] = p.monomial(&mu);
        }
        b[r] = fd_cumulant(&atoms, &probs, 4, 1e-2 / 4.0);
    }
    let coef = a.svd(true, true).solve(&b, 1e-14).expect("SVD solve");
    parts.into_iter().zip(coef.iter().copied()).collect()
}
