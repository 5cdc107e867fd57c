//! One EM step is one gradient-ascent step on the population log-likelihood,
//! with a step size per center of `τ_χ = σ²/(α_χ E[w(Y, χ)])`.
//!
//! The example draws a few random mixtures, takes both steps under
//! Gauss–Hermite quadrature and prints the largest discrepancy. It also shows
//! that `E[w] → 1` at low SNR, so `τ_χ → σ²/α_χ`.
//!
//! ```bash
//! cargo run --release --example em_gradient_equivalence
//! ```

use lowsnr::em::{em_step_sizes, em_update, gradient_update_per_center, weight_expectation};
use lowsnr::likelihood::LikelihoodEvaluator;
use lowsnr::DiscreteMixture;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mixture(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Result<DiscreteMixture, lowsnr::Error> {
    let centers = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMixture::new(centers, raw.iter().map(|w| w / total).collect())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for trial in 0..8 {
        let k = 2 + trial % 3;
        let d = 1 + trial % 2;
        let sigma = rng.random_range(5.0..40.0);
        let truth = random_mixture(&mut rng, k, d)?;
        let model = truth.with_centers(random_mixture(&mut rng, k, d)?.centers().to_vec())?;
        let ev = LikelihoodEvaluator::quadrature(truth, sigma)?;

        let em = em_update(&model, &ev)?;
        let taus = em_step_sizes(&model, &ev)?;
        let grad = gradient_update_per_center(&model, &taus, &ev)?;
        let scale = em.max_center_norm().max(1.0);
        let gap = em
            .flat_centers()
            .iter()
            .zip(grad.flat_centers())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        worst = worst.max(gap);
        let ew = weight_expectation(&model, &ev)?;
        println!(
            "K={k} d={d} σ={sigma:5.1}: max rel. gap {gap:.2e}, E[w] − 1 = {:?}",
            ew.iter().map(|w| format!("{:+.1e}", w - 1.0)).collect::<Vec<_>>()
        );
    }
    println!("worst relative gap {worst:.2e}");
    if worst > 1e-8 {
        return Err(format!("EM and gradient steps differ by {worst:e}").into());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
