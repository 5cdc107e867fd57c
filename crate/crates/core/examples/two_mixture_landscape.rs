//! The symmetric two-component mixture in `(α, β)` coordinates,
//! `α = (θ_1 + θ_2)/2`, `β = θ_1 − θ_2`.
//!
//! With `α` fixed at the truth, the second-moment objective is
//! `‖ββᵀ − β*β*ᵀ‖²/16`: global minima at `β = ±β*`, a saddle at `β = 0`.
//! The stagewise solver and EM both find `±β*` from a generic start and
//! stall at the saddle when `β` starts orthogonal to `β*`.
//!
//! ```bash
//! cargo run --release --example two_mixture_landscape
//! ```

use lowsnr::em::{run_em, EMConfig, EMMode};
use lowsnr::likelihood::LikelihoodEvaluator;
use lowsnr::moment_match::{from_two_mixture_coordinates, stagewise_solve, two_mixture_coordinates, PenaltySchedule};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn beta_error(beta: &[f64], star: &[f64]) -> f64 {
    let minus: Vec<f64> = beta.iter().zip(star).map(|(b, s)| b - s).collect();
    let plus: Vec<f64> = beta.iter().zip(star).map(|(b, s)| b + s).collect();
    norm(&minus).min(norm(&plus))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let alpha_star = [0.0, 0.0];
    let beta_star = [2.0, 0.0];
    let truth = from_two_mixture_coordinates(&alpha_star, &beta_star)?;
    let schedule = PenaltySchedule::default();

    println!("stagewise moment matching");
    for (name, alpha0, beta0) in [
        ("generic", [0.7, -0.4], [0.5, 1.3]),
        ("orthogonal", [0.0, 0.6], [0.0, 1.3]),
    ] {
        let init = from_two_mixture_coordinates(&alpha0, &beta0)?;
        let stages = stagewise_solve(&truth, &init, 2, &schedule)?;
        let (a, b) = two_mixture_coordinates(&stages[1].solution)?;
        println!(
            "  {name:>10}: α = {a:.3?}, β = {b:.6?}, dist to ±β* = {:.2e}, converged = {}",
            beta_error(&b, &beta_star),
            stages[1].converged
        );
    }

    println!("population EM at σ = 1");
    let ev = LikelihoodEvaluator::quadrature(truth.clone(), 1.0)?;
    let config = EMConfig {
        mode: EMMode::Standard,
        max_iter: 200,
        tol: 1e-10,
    };
    let generic = run_em(from_two_mixture_coordinates(&[0.3, 0.2], &[0.4, 1.4])?, config, &ev)?;
    let last = &generic.states.last().ok_or("empty trajectory")?.mix;
    let (_, b) = two_mixture_coordinates(last)?;
    println!(
        "  generic start: {} iterations, dist to ±β* = {:.2e}",
        generic.states.len() - 1,
        beta_error(&b, &beta_star)
    );
    if beta_error(&b, &beta_star) > 1e-6 {
        return Err("EM did not reach ±β*".into());
    }

    let config = EMConfig { max_iter: 25, ..config };
    let ortho = run_em(from_two_mixture_coordinates(&[0.0, 0.0], &[0.0, 1.4])?, config, &ev)?;
    for s in ortho.states.iter().step_by(5) {
        let (_, b) = two_mixture_coordinates(&s.mix)?;
        println!("  orthogonal start, iter {:>2}: ‖β‖ = {:.3e}", s.iteration, norm(&b));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
