//! Multireference alignment: the centers are the cyclic shifts of one signal.
//!
//! Averaging over the group collapses cross terms of the likelihood
//! expansion through `⟨T_k, ⊗T_i ⊗ ⊗T*_j⟩ = Π⟨T_i,T_i⟩ Π⟨T_j,T*_j⟩`. The example
//! evaluates that identity on random signals, and shows that EM for the orbit
//! model is gradient ascent with step `σ²`.
//!
//! ```bash
//! cargo run --release --example mra_orbit_identity
//! ```

use lowsnr::em::{orbit_em_update, orbit_gradient_update};
use lowsnr::experiment::orbit_order_pairs;
use lowsnr::group::{check_haar_identity, cyclic_group, orbit_mixture};
use lowsnr::likelihood::{EvalMethod, LikelihoodEvaluator};
use lowsnr::rng::standard_normals;
use lowsnr::NoiseScale;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for d in 3..=6 {
        let group = cyclic_group(d)?;
        let draws = standard_normals(d as u64, 2, d);
        let (theta, theta_star) = draws.split_at(d);
        let mut worst: f64 = 0.0;
        for (i, j) in orbit_order_pairs(4) {
            worst = worst.max(check_haar_identity(&group, theta, theta_star, &i, &j)?);
        }
        println!("cyclic d={d}: max residual over total order ≤ 4 is {worst:.2e}");
    }

    let group = cyclic_group(3)?;
    let signal = vec![1.0, -0.5, 0.25];
    let truth = orbit_mixture(&group, &[(signal, 1.0)])?;
    println!("MRA mixture centers {:?}", truth.centers());
    let sigma = 3.0;
    let ev = LikelihoodEvaluator::new(
        truth,
        NoiseScale::new(sigma)?,
        EvalMethod::Quadrature { nodes_per_axis: 40 },
    )?;
    let guess = [0.3, 0.6, -0.2];
    let em = orbit_em_update(&group, &guess, &ev)?;
    let grad = orbit_gradient_update(&group, &guess, sigma * sigma, &ev)?;
    println!("orbit EM step       {em:.12?}");
    println!("σ²-gradient step    {grad:.12?}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
