//! EM on a finite sample tracks population EM.
//!
//! The sample is drawn with a fixed seed, so the run is reproducible for any
//! thread count (`LOWSNR_THREADS`).
//!
//! ```bash
//! cargo run --release --example finite_sample_em
//! ```

use lowsnr::em::{run_em, EMConfig, EMMode};
use lowsnr::likelihood::{LikelihoodEvaluator, SampleSet};
use lowsnr::{DiscreteMixture, NoiseScale};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let truth = DiscreteMixture::new(vec![vec![1.5], vec![-1.0]], vec![0.4, 0.6])?;
    let init = truth.with_centers(vec![vec![0.5], vec![-0.2]])?;
    let sigma = 1.0;
    let config = EMConfig {
        mode: EMMode::Standard,
        max_iter: 300,
        tol: 1e-9,
    };

    let population = run_em(
        init.clone(),
        config,
        &LikelihoodEvaluator::quadrature(truth.clone(), sigma)?,
    )?;
    let pop_final = &population.states.last().ok_or("empty trajectory")?.mix;
    println!(
        "population EM: {:?} after {} steps",
        pop_final.centers(),
        population.states.len() - 1
    );

    for n in [1_000, 10_000, 100_000] {
        let data = SampleSet::draw(&truth, NoiseScale::new(sigma)?, n, 7)?;
        let traj = run_em(init.clone(), config, &data)?;
        let last = &traj.states.last().ok_or("empty trajectory")?.mix;
        let err = last
            .flat_centers()
            .iter()
            .zip(pop_final.flat_centers())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "n = {n:>6}: {:?}, distance to population fixed point {err:.3e}",
            last.centers()
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
