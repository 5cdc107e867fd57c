//! Critical points of `½(p_{n+1} − p*_{n+1})²` on the variety `V_n` of a
//! weighted 1-D mixture, where `p_ℓ(x) = Σ_j α_j x_j^ℓ`.
//!
//! Every such point has exactly `n` distinct coordinates. Its type follows
//! from the multiplicity vector and the sign of `p_{n+1}(x) − p*_{n+1}`; the
//! example checks that rule against the constrained second-order test.
//!
//! ```bash
//! cargo run --release --example critical_points_1d
//! ```

use lowsnr::landscape1d::{
    critical_points_for, hessian_classify_critical_point, multiplicity_vectors, Classification, PowerSumSystem,
};

fn survey(sys: &PowerSumSystem) -> Result<(usize, usize), Box<dyn std::error::Error>> {
    let k = sys.len();
    let uniform = sys.weights().iter().all(|w| (w - sys.weights()[0]).abs() < 1e-15);
    let (mut agree, mut minima) = (0, 0);
    for n in 1..k {
        for mults in multiplicity_vectors(k, n) {
            // with equal weights, assignments differ only by relabeling slots
            let mut seen: Vec<Vec<f64>> = Vec::new();
            for cp in critical_points_for(sys, &mults, 1)? {
                let oracle = hessian_classify_critical_point(&cp, sys)?;
                let rule = cp.classification.ok_or("point on the next variety")?;
                if oracle.classification != Classification::Inconclusive {
                    if rule != oracle.classification {
                        return Err(format!("rule and Hessian disagree at {:?}", cp.point).into());
                    }
                    agree += 1;
                }
                minima += usize::from(rule == Classification::LocalMin);
                let mut key = cp.point.clone();
                if uniform {
                    key.sort_by(f64::total_cmp);
                }
                if seen
                    .iter()
                    .any(|p| p.iter().zip(&key).all(|(a, b)| (a - b).abs() < 1e-9))
                {
                    continue;
                }
                seen.push(key);
                println!(
                    "  n={n} x={:+.4?} p_next−p* = {:+.3e}: rule {:?}, hessian {:?}",
                    cp.point,
                    cp.p_next - cp.p_next_star,
                    rule,
                    oracle.classification
                );
            }
        }
    }
    Ok((agree, minima))
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let skewed = PowerSumSystem::new(vec![0.1, 0.2, 0.3, 0.4], vec![0.9, 0.35, -0.2, -0.8])?;
    println!("weights {:?}", skewed.weights());
    let (agree, minima) = survey(&skewed)?;
    println!("{agree} conclusive agreements, {minima} spurious local minima\n");

    let uniform = PowerSumSystem::new(vec![0.25; 4], vec![0.9, 0.35, -0.2, -0.8])?;
    println!("uniform weights");
    let (_, minima) = survey(&uniform)?;
    println!("{minima} spurious local minima");
    if minima != 0 {
        return Err("uniform weights produced a local minimum".into());
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
