//! Declarative experiment configs and the runner behind the `lowsnr` binary.
//!
//! A config names one experiment `kind`, its inputs and parameters, a seed
//! and output paths. Every run writes its artifacts plus `manifest.json`
//! (resolved config, tool version, wall time) next to the primary output.
//! Randomness for kind `k` comes from `derive_seed(k, seed)`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cumulants::{cumulant_coefficients, partitions_with_max_part};
use crate::em::{run_em, t1_one_step_scan, EMConfig, EMMode, EMTrajectory, DEFAULT_RADIUS, DEFAULT_TOL};
use crate::group::check_haar_identity;
use crate::io::{
    center_cells, center_columns, fmt_f64, parse_group, read_json, read_mixture, sidecar_path, write_csv, write_json,
    RunError, RunResult,
};
use crate::landscape1d::{
    classify_by_multiplicity, enumerate_assignments, find_critical_point, hessian_classify_critical_point,
    PowerSumSystem,
};
use crate::likelihood::{
    expansion_scan, EvalMethod, LikelihoodEvaluator, SampleSet, DEFAULT_NODES_PER_AXIS, DEFAULT_NOISE_FLOOR,
};
use crate::mixture::NoiseScale;
use crate::moment_match::{stagewise_solve, two_mixture_coordinates, PenaltySchedule};
use crate::rng::{derive_seed, standard_normals};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    ExpansionScan(ExpansionScanConfig),
    EmRun(EmRunConfig),
    T1Scan(T1ScanConfig),
    Stagewise(StagewiseConfig),
    Landscape1d(Landscape1dConfig),
    OrbitCheck(OrbitCheckConfig),
    CumulantDump(CumulantDumpConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::ExpansionScan(_) => "expansion-scan",
            Experiment::EmRun(_) => "em-run",
            Experiment::T1Scan(_) => "t1-scan",
            Experiment::Stagewise(_) => "stagewise",
            Experiment::Landscape1d(_) => "landscape1d",
            Experiment::OrbitCheck(_) => "orbit-check",
            Experiment::CumulantDump(_) => "cumulant-dump",
        }
    }

    pub fn out(&self) -> &Path {
        match self {
            Experiment::ExpansionScan(c) => &c.out,
            Experiment::EmRun(c) => &c.out,
            Experiment::T1Scan(c) => &c.out,
            Experiment::Stagewise(c) => &c.out,
            Experiment::Landscape1d(c) => &c.out,
            Experiment::OrbitCheck(c) => &c.out,
            Experiment::CumulantDump(c) => &c.out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    #[default]
    Quadrature,
    MonteCarlo,
}

/// Population expectation settings; the Monte Carlo seed is derived, never given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    #[serde(default)]
    pub method: MethodKind,
    #[serde(default = "default_nodes")]
    pub nodes_per_axis: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

fn default_nodes() -> usize {
    DEFAULT_NODES_PER_AXIS
}

fn default_mc_samples() -> usize {
    1_000_000
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::Quadrature,
            nodes_per_axis: default_nodes(),
            mc_samples: default_mc_samples(),
        }
    }
}

impl MethodConfig {
    pub fn resolve(&self, seed: u64) -> EvalMethod {
        match self.method {
            MethodKind::Quadrature => EvalMethod::Quadrature {
                nodes_per_axis: self.nodes_per_axis,
            },
            MethodKind::MonteCarlo => EvalMethod::MonteCarlo {
                n_samples: self.mc_samples,
                seed,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionScanConfig {
    pub truth: PathBuf,
    pub mix: PathBuf,
    pub order: usize,
    pub sigmas: Vec<f64>,
    #[serde(flatten)]
    pub method: MethodConfig,
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
    pub out: PathBuf,
}

fn default_noise_floor() -> f64 {
    DEFAULT_NOISE_FLOOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Standard,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmRunConfig {
    pub truth: PathBuf,
    pub init: PathBuf,
    pub sigma: f64,
    pub mode: ModeKind,
    /// Step size, required for `gradient` mode.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Run on a drawn sample of this size instead of the population.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(flatten)]
    pub method: MethodConfig,
    pub out: PathBuf,
}

fn default_max_iter() -> usize {
    500
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1ScanConfig {
    pub truth: PathBuf,
    pub init: PathBuf,
    #[serde(default = "default_t1_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(flatten)]
    pub method: MethodConfig,
    pub out: PathBuf,
}

fn default_t1_sigmas() -> Vec<f64> {
    vec![8.0, 16.0, 32.0, 64.0]
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagewiseConfig {
    pub truth: PathBuf,
    pub init: PathBuf,
    pub orders: usize,
    #[serde(default)]
    pub schedule: PenaltySchedule,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape1dConfig {
    /// JSON array of weights.
    pub weights: PathBuf,
    /// JSON array of truth values.
    pub truth: PathBuf,
    pub stage: usize,
    pub mults: Vec<usize>,
    /// Slot-to-value map; every assignment is tried when absent.
    #[serde(default)]
    pub assignment: Option<Vec<usize>>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheckConfig {
    /// `cyclic:d`, `rot2:n` or `file:<path>`.
    pub group: String,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default = "default_orbit_order")]
    pub max_order: usize,
    pub out: PathBuf,
}

fn default_pairs() -> usize {
    20
}

fn default_orbit_order() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantDumpConfig {
    pub max_order: usize,
    pub out: PathBuf,
}

/// Parses a config, reporting schema problems as [`RunError::Schema`].
pub fn parse_config(value: serde_json::Value, origin: &str) -> RunResult<ExperimentConfig> {
    serde_json::from_value(value).map_err(|e| RunError::Schema(format!("{origin}: {e}")))
}

/// Runs the experiment and returns the paths written, manifest last.
pub fn run(config: &ExperimentConfig) -> RunResult<Vec<PathBuf>> {
    let start = Instant::now();
    let seed = derive_seed(config.experiment.kind(), config.seed);
    let mut outputs = match &config.experiment {
        Experiment::ExpansionScan(c) => run_expansion_scan(c, seed)?,
        Experiment::EmRun(c) => run_em_experiment(c, seed)?,
        Experiment::T1Scan(c) => run_t1_scan(c, seed)?,
        Experiment::Stagewise(c) => run_stagewise(c)?,
        Experiment::Landscape1d(c) => run_landscape1d(c, seed)?,
        Experiment::OrbitCheck(c) => run_orbit_check(c, seed)?,
        Experiment::CumulantDump(c) => run_cumulant_dump(c)?,
    };
    let manifest = config.experiment.out().with_file_name("manifest.json");
    write_json(
        &manifest,
        &json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "outputs": outputs,
            "wall_time_seconds": start.elapsed().as_secs_f64(),
        }),
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn run_expansion_scan(c: &ExpansionScanConfig, seed: u64) -> RunResult<Vec<PathBuf>> {
    let truth = read_mixture(&c.truth)?;
    let mix = read_mixture(&c.mix)?;
    let rep = expansion_scan(&truth, &mix, c.order, &c.sigmas, c.method.resolve(seed), c.noise_floor)?;
    let rows: Vec<Vec<String>> = (0..rep.sigmas.len())
        .map(|i| {
            vec![
                fmt_f64(rep.sigmas[i]),
                fmt_f64(rep.neg_loglik_gaps[i]),
                fmt_f64(rep.leading_terms[i]),
                fmt_f64(rep.residuals[i]),
                fmt_f64(rep.residuals[i].abs()),
                fmt_f64(rep.gap_stderr[i]),
            ]
        })
        .collect();
    let header = strings(&[
        "sigma",
        "neg_loglik_gap",
        "leading_term",
        "residual",
        "abs_residual",
        "gap_stderr",
    ]);
    write_csv(&c.out, &header, &rows)?;
    let sidecar = sidecar_path(&c.out, "slope");
    write_json(
        &sidecar,
        &json!({
            "order": rep.order,
            "fitted_slope": rep.fitted_slope,
            "slope_stderr": rep.slope_stderr,
            "theoretical_slope": rep.theoretical_slope,
            "n_fit": rep.sigmas.len() - rep.dropped.len(),
            "dropped": rep.dropped,
            "noise_floor": rep.noise_floor,
            "moment_gaps": rep.moment_gaps,
        }),
    )?;
    Ok(vec![c.out.clone(), sidecar])
}

fn trajectory_rows(traj: &EMTrajectory) -> (Vec<String>, Vec<Vec<String>>) {
    let first = &traj.states[0].mix;
    let (k, d) = (first.len(), first.dim());
    let two = two_mixture_coordinates(first).is_ok();
    let mut header = strings(&["iter", "loglik", "t1_norm"]);
    header.extend(center_columns(k, d));
    if two {
        header.extend((0..d).map(|a| format!("alpha_{a}")));
        header.extend((0..d).map(|a| format!("beta_{a}")));
    }
    let rows = traj
        .states
        .iter()
        .map(|s| {
            let mut row = vec![s.iteration.to_string(), fmt_f64(s.loglik), fmt_f64(s.t1_norm)];
            row.extend(center_cells(&s.mix));
            if let Ok((a, b)) = two_mixture_coordinates(&s.mix) {
                row.extend(a.into_iter().chain(b).map(fmt_f64));
            }
            row
        })
        .collect();
    (header, rows)
}

fn run_em_experiment(c: &EmRunConfig, seed: u64) -> RunResult<Vec<PathBuf>> {
    let truth = read_mixture(&c.truth)?;
    let init = read_mixture(&c.init)?;
    let mode = match (c.mode, c.tau) {
        (ModeKind::Standard, _) => EMMode::Standard,
        (ModeKind::Gradient, Some(tau)) => EMMode::Gradient { tau },
        (ModeKind::Gradient, None) => return Err(RunError::Schema("tau: gradient mode needs a step size".into())),
    };
    let config = EMConfig {
        mode,
        max_iter: c.max_iter,
        tol: c.tol,
    };
    let ns = NoiseScale::new(c.sigma)?;
    let traj = match c.samples {
        Some(n) => run_em(init, config, &SampleSet::draw(&truth, ns, n, seed)?)?,
        None => run_em(
            init,
            config,
            &LikelihoodEvaluator::new(truth, ns, c.method.resolve(seed))?,
        )?,
    };
    let (header, rows) = trajectory_rows(&traj);
    write_csv(&c.out, &header, &rows)?;
    let sidecar = sidecar_path(&c.out, "summary");
    write_json(
        &sidecar,
        &json!({
            "mode": traj.mode,
            "data": traj.data_mode,
            "iterations": traj.states.len() - 1,
            "converged": traj.converged,
            "diverged": traj.diverged,
        }),
    )?;
    Ok(vec![c.out.clone(), sidecar])
}

fn run_t1_scan(c: &T1ScanConfig, seed: u64) -> RunResult<Vec<PathBuf>> {
    let truth = read_mixture(&c.truth)?;
    let init = read_mixture(&c.init)?;
    let rep = t1_one_step_scan(&truth, &init, &c.sigmas, c.radius, c.method.resolve(seed))?;
    let rows: Vec<Vec<String>> = rep
        .sigmas
        .iter()
        .zip(&rep.t1_norms)
        .map(|(s, t)| vec![fmt_f64(*s), fmt_f64(*t)])
        .collect();
    write_csv(&c.out, &strings(&["sigma", "t1_norm"]), &rows)?;
    let sidecar = sidecar_path(&c.out, "slope");
    write_json(
        &sidecar,
        &json!({
            "fitted_slope": rep.fitted_slope,
            "slope_stderr": rep.slope_stderr,
            "bound_slope": rep.bound_slope,
            "init_t1_norm": crate::mixture::norm(&init.first_moment()),
        }),
    )?;
    Ok(vec![c.out.clone(), sidecar])
}

fn run_stagewise(c: &StagewiseConfig) -> RunResult<Vec<PathBuf>> {
    let truth = read_mixture(&c.truth)?;
    let init = read_mixture(&c.init)?;
    let stages = stagewise_solve(&truth, &init, c.orders, &c.schedule)?;
    let mut header = strings(&["stage", "objective", "violation", "converged"]);
    header.extend(center_columns(init.len(), init.dim()));
    let rows: Vec<Vec<String>> = stages
        .iter()
        .map(|s| {
            let mut row = vec![
                s.stage.to_string(),
                fmt_f64(s.objective_value),
                fmt_f64(s.constraint_violation),
                s.converged.to_string(),
            ];
            row.extend(center_cells(&s.solution));
            row
        })
        .collect();
    write_csv(&c.out, &header, &rows)?;
    let sidecar = sidecar_path(&c.out, "diagnostics");
    let diag: Vec<_> = stages
        .iter()
        .map(|s| json!({"stage": s.stage, "iterations": s.iterations, "diagnostics": s.diagnostics}))
        .collect();
    write_json(&sidecar, &diag)?;
    Ok(vec![c.out.clone(), sidecar])
}

fn run_landscape1d(c: &Landscape1dConfig, seed: u64) -> RunResult<Vec<PathBuf>> {
    let weights: Vec<f64> = read_json(&c.weights)?;
    let values: Vec<f64> = read_json(&c.truth)?;
    if c.stage != c.mults.len() {
        return Err(RunError::Schema(format!(
            "mults: stage {} needs {} multiplicities, got {:?}",
            c.stage, c.stage, c.mults
        )));
    }
    let sys = PowerSumSystem::new(weights, values)?;
    let assignments = match &c.assignment {
        Some(a) => vec![a.clone()],
        None => enumerate_assignments(&c.mults)?,
    };
    let mut points = Vec::new();
    let mut missing = Vec::new();
    for (i, a) in assignments.iter().enumerate() {
        let cp = match find_critical_point(&sys, &c.mults, a, seed.wrapping_add(i as u64)) {
            Ok(cp) => cp,
            Err(Error::NotFound(_)) | Err(Error::DegenerateSolution(_)) if c.assignment.is_none() => {
                missing.push(a.clone());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let rule = match classify_by_multiplicity(&cp, &sys) {
            Ok(class) => json!(class),
            Err(Error::OnVariety(_)) => json!("on-variety"),
            Err(e) => return Err(e.into()),
        };
        let hessian = hessian_classify_critical_point(&cp, &sys)?;
        points.push(json!({
            "values": cp.values,
            "multiplicities": cp.multiplicities,
            "assignment": cp.assignment,
            "point": cp.point,
            "p_next": cp.p_next,
            "p_next_star": cp.p_next_star,
            "stationarity_residual": cp.stationarity_residual,
            "min_singular_value": cp.min_singular_value,
            "multiplicity_classification": rule,
            "hessian_classification": hessian.classification,
            "projected_hessian_spectrum": hessian.spectrum,
        }));
    }
    if points.is_empty() {
        return Err(Error::NotFound(format!("no critical point with multiplicities {:?}", c.mults)).into());
    }
    write_json(
        &c.out,
        &json!({
            "stage": c.stage,
            "weights": sys.weights(),
            "truth": sys.truth_values(),
            "points": points,
            "unsolved_assignments": missing,
        }),
    )?;
    Ok(vec![c.out.clone()])
}

/// Splits of every total `k ≤ max_order` into multisets `(I, J)`, not both empty.
pub fn orbit_order_pairs(max_order: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let parts = |n: usize| -> Vec<Vec<usize>> {
        if n == 0 {
            vec![vec![]]
        } else {
            partitions_with_max_part(n, n, false)
                .into_iter()
                .map(|p| p.parts().to_vec())
                .collect()
        }
    };
    let mut out = Vec::new();
    for k in 1..=max_order {
        for a in 0..=k {
            for i in parts(a) {
                for j in parts(k - a) {
                    out.push((i.clone(), j));
                }
            }
        }
    }
    out
}

fn join(orders: &[usize]) -> String {
    orders.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("+")
}

fn run_orbit_check(c: &OrbitCheckConfig, seed: u64) -> RunResult<Vec<PathBuf>> {
    let group = parse_group(&c.group)?;
    let d = group.dim();
    let draws = standard_normals(seed, 2 * c.pairs, d);
    let cases = orbit_order_pairs(c.max_order);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for p in 0..c.pairs {
        let theta = &draws[2 * p * d..(2 * p + 1) * d];
        let theta_star = &draws[(2 * p + 1) * d..(2 * p + 2) * d];
        for (i, j) in &cases {
            let r = check_haar_identity(&group, theta, theta_star, i, j)?;
            worst = worst.max(r);
            let k: usize = i.iter().chain(j).sum();
            rows.push(vec![p.to_string(), k.to_string(), join(i), join(j), fmt_f64(r)]);
        }
    }
    write_csv(
        &c.out,
        &strings(&["pair", "k", "i_orders", "j_orders", "residual"]),
        &rows,
    )?;
    let sidecar = sidecar_path(&c.out, "summary");
    write_json(
        &sidecar,
        &json!({"group": c.group, "dim": d, "pairs": c.pairs, "cases": cases.len(), "max_residual": worst}),
    )?;
    Ok(vec![c.out.clone(), sidecar])
}

fn run_cumulant_dump(c: &CumulantDumpConfig) -> RunResult<Vec<PathBuf>> {
    let table = cumulant_coefficients(c.max_order)?;
    write_json(&c.out, &table.to_json())?;
    Ok(vec![c.out.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_with_defaults() {
        let cfg = parse_config(
            json!({"kind": "t1-scan", "seed": 7, "truth": "t.json", "init": "i.json", "out": "o.csv"}),
            "test",
        )
        .unwrap();
        let Experiment::T1Scan(t) = &cfg.experiment else {
            panic!()
        };
        assert_eq!(t.sigmas, vec![8.0, 16.0, 32.0, 64.0]);
        assert_eq!(t.method.nodes_per_axis, DEFAULT_NODES_PER_AXIS);
        let back = parse_config(serde_json::to_value(&cfg).unwrap(), "test").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn seed_is_required() {
        let err = parse_config(
            json!({"kind": "cumulant-dump", "max_order": 4, "out": "c.json"}),
            "cfg.json",
        )
        .unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_kind_is_a_schema_error() {
        let err = parse_config(json!({"kind": "bogus", "seed": 1}), "cfg.json").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn orbit_pairs_up_to_order_two() {
        let pairs = orbit_order_pairs(2);
        // k=1: ([],[1]), ([1],[]); k=2: ([],[2]), ([],[1,1]), ([1],[1]), ([2],[]), ([1,1],[])
        assert_eq!(pairs.len(), 7);
        assert!(pairs.contains(&(vec![1], vec![1])));
        assert!(pairs.contains(&(vec![], vec![1, 1])));
    }

    #[test]
    fn numeric_failures_exit_3() {
        let e: RunError = Error::NotFound("x".into()).into();
        assert_eq!(e.exit_code(), 3);
        let e: RunError = Error::InvalidArgument("x".into()).into();
        assert_eq!(e.exit_code(), 2);
    }
}
