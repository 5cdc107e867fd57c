//! Mixtures, moment tensors, and the signal-to-noise ratio.
//!
//! `normalize` centers a mixture and scales its farthest center to unit
//! distance, so `snr(normalized, σ) = 1/σ²`.
//!
//! ```bash
//! cargo run --release --example snr_normalization
//! ```

use lowsnr::{moment_tensor, normalize, snr, DiscreteMixture, NoiseScale};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mix = DiscreteMixture::new(
        vec![vec![3.0, 1.0], vec![1.0, -1.0], vec![-2.0, 0.5]],
        vec![0.5, 0.3, 0.2],
    )?;
    println!("T_1 = {:?}", mix.first_moment());
    println!("T_2 entries = {:?}", moment_tensor(&mix, 2)?.entries());
    let n = normalize(&mix)?;
    println!("shift {:?}, scale {:.4}", n.shift, n.scale);
    for sigma in [1.0, 10.0, 100.0] {
        let ns = NoiseScale::new(sigma)?;
        println!(
            "σ = {sigma:>5}: snr(raw) = {:.3e}, snr(normalized) = {:.3e}",
            snr(&mix, ns),
            snr(&n.mixture, ns)
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
