//! Exact coefficients of the moment-to-cumulant map
//! `κ_m = Σ_λ c_λ Π_{ℓ∈λ} μ_ℓ`, and a numeric evaluation on a Gaussian.
//!
//! ```bash
//! cargo run --release --example cumulant_table
//! ```

use lowsnr::cumulants::{cumulant_coefficients, Partition};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let table = cumulant_coefficients(6)?;
    for m in 1..=6 {
        let row: Vec<String> = table.terms(m).iter().map(|(p, c)| format!("{p}:{c}")).collect();
        println!("κ_{m} = {}", row.join("  "));
    }
    for k in 1..=3 {
        let c = table.coeff(&Partition::new(vec![k, k])?).ok_or("missing coefficient")?;
        println!("c_({k},{k}) = {c}");
    }
    if table.coeff(&Partition::new(vec![3, 3])?) != Some(-10.0) {
        return Err("c_(3,3) should be -10".into());
    }

    // N(0, s²): moments 0, s², 0, 3s⁴, 0, 15s⁶ have κ_2 = s² and no other cumulant.
    let s2: f64 = 2.0;
    let moments = [0.0, s2, 0.0, 3.0 * s2 * s2, 0.0, 15.0 * s2.powi(3)];
    let kappas: Vec<f64> = (1..=6).map(|m| table.evaluate(&moments, m)).collect::<Result<_, _>>()?;
    println!("Gaussian cumulants: {kappas:?}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
