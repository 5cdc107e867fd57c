//! Moment-cumulant polynomials checked against finite differences of
//! `log E[e^{tX}]`, evaluated in 256-bit floating point so that the
//! `h^{−m}` amplification of round-off does not swamp the signal.

mod common;

use common::{fd_cumulant, moments, random_variable};
use lowsnr::cumulants::{cumulant_coefficients, cumulant_from_moments};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn polynomials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..50 {
        let (atoms, probs) = random_variable(&mut rng);
        let mu = moments(&atoms, &probs, 8);
        for m in 1..=8 {
            let h = 1e-2 / m as f64;
            let fd = fd_cumulant(&atoms, &probs, m, h);
            let poly = cumulant_from_moments(&mu, m).unwrap();
            assert!(
                (fd - poly).abs() <= 1e-4 * poly.abs(),
                "trial {trial}, m = {m}: polynomial {poly}, finite difference {fd}"
            );
        }
    }
}

#[test]
fn fourth_order_coefficients_recovered_by_least_squares() {
    let fit = common::fourth_order_regression(8, 40);
    let table = cumulant_coefficients(4).unwrap();
    for (p, c) in &fit {
        let exact = table.coeff(p).unwrap();
        assert!(
            (c - exact).abs() <= 1e-4 * exact.abs(),
            "{p}: regression {c}, table {exact}"
        );
    }
    let expected = [
        ("[4]", 1.0),
        ("[3,1]", -4.0),
        ("[2,2]", -3.0),
        ("[2,1,1]", 12.0),
        ("[1,1,1,1]", -6.0),
    ];
    for (name, value) in expected {
        let (p, _) = fit.iter().find(|(p, _)| p.to_string() == name).unwrap();
        assert_eq!(table.coeff(p), Some(value));
    }
}

#[test]
fn bernoulli_half_fourth_cumulant() {
    let fd = fd_cumulant(&[0.0, 1.0], &[0.5, 0.5], 4, 2.5e-3);
    assert!((fd + 0.125).abs() < 1e-5, "{fd}");
    let poly = cumulant_from_moments(&[0.5; 4], 4).unwrap();
    assert!((poly + 0.125).abs() < 1e-15);
}
