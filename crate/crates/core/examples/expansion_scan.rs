//! How fast does the likelihood gap close as the noise grows?
//!
//! Two mixtures whose first `m − 1` moment tensors agree differ in
//! log-likelihood by `σ^{−2m}‖T_m − T_m*‖²/(2·m!)` to leading order, with a
//! remainder of order `σ^{−2m−2}`. This example measures both for
//!
//! * the symmetric pair `±0.5` vs `±1` in 1-D (`m = 2`), and
//! * a three-center mixture that matches `T_1, T_2` of a three-center truth
//!   (`m = 3`), built with the stagewise moment solver.
//!
//! ```bash
//! cargo run --release --example expansion_scan
//! ```

use lowsnr::likelihood::{expansion_scan, EvalMethod, ExpansionReport, DEFAULT_NOISE_FLOOR};
use lowsnr::moment_match::{stagewise_solve, PenaltySchedule};
use lowsnr::DiscreteMixture;

fn print_report(title: &str, rep: &ExpansionReport) {
    println!("{title}");
    println!("{:>8} {:>14} {:>14} {:>12}", "sigma", "gap", "leading", "residual");
    for i in 0..rep.sigmas.len() {
        println!(
            "{:>8} {:>14.6e} {:>14.6e} {:>12.3e}",
            rep.sigmas[i], rep.neg_loglik_gaps[i], rep.leading_terms[i], rep.residuals[i]
        );
    }
    println!(
        "residual slope {:.3} ± {:.3} (expected {})\n",
        rep.fitted_slope.unwrap_or(f64::NAN),
        rep.slope_stderr.unwrap_or(f64::NAN),
        rep.theoretical_slope
    );
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let quad = EvalMethod::Quadrature { nodes_per_axis: 60 };

    let truth = DiscreteMixture::uniform(vec![vec![1.0], vec![-1.0]])?;
    let mix = DiscreteMixture::uniform(vec![vec![0.5], vec![-0.5]])?;
    let sigmas = [10.0, 20.0, 40.0, 80.0, 160.0];
    let rep = expansion_scan(&truth, &mix, 2, &sigmas, quad, DEFAULT_NOISE_FLOOR)?;
    print_report("±0.5 vs ±1, T_1 matched (m = 2)", &rep);
    let slope = rep.fitted_slope.ok_or("no slope")?;
    if !(-6.6..=-5.4).contains(&slope) {
        return Err(format!("m = 2 slope {slope} outside [-6.6, -5.4]").into());
    }

    // Match T_1 and T_2 of a three-center truth, leave T_3 free.
    let weights = vec![0.3, 0.4, 0.3];
    let truth3 = DiscreteMixture::new(vec![vec![1.0], vec![0.2], vec![-0.9]], weights.clone())?;
    let init = DiscreteMixture::new(vec![vec![0.1], vec![0.9], vec![-0.4]], weights)?;
    let stages = stagewise_solve(&truth3, &init, 2, &PenaltySchedule::default())?;
    let matched = &stages[1].solution;
    println!("three-center mixture matching T_1, T_2: {:?}", matched.centers());
    let rep = expansion_scan(&truth3, matched, 3, &[5.0, 10.0, 20.0, 40.0], quad, DEFAULT_NOISE_FLOOR)?;
    print_report("three centers, T_1 and T_2 matched (m = 3)", &rep);
    let slope = rep.fitted_slope.ok_or("no slope")?;
    if !(-8.6..=-7.4).contains(&slope) {
        return Err(format!("m = 3 slope {slope} outside [-8.6, -7.4]").into());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
