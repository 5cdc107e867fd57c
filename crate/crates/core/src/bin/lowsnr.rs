use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use lowsnr::experiment::{parse_config, run};
use lowsnr::io::{read_json, RunError};

/// Low-SNR Gaussian mixture experiments.
///
/// Every subcommand also accepts `--config file.json`; flags given on the
/// command line override the file.
#[derive(Parser)]
#[command(name = "lowsnr", version)]
struct Cli {
    /// Experiment config (JSON with a `kind` field).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; defaults to 0 when neither flag nor config sets it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Default)]
struct Method {
    /// quadrature | monte-carlo
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "nodes")]
    nodes_per_axis: Option<usize>,
    #[arg(long)]
    mc_samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Likelihood gap vs its leading expansion term over a σ grid.
    ExpansionScan {
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        mix: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        noise_floor: Option<f64>,
        #[command(flatten)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// EM or fixed-step gradient ascent trajectory.
    EmRun {
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<f64>,
        /// standard | gradient
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Use a drawn sample of this size instead of the population.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One EM step from a fixed init across σ; fits the decay of ‖T_1‖.
    T1Scan {
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        #[arg(long)]
        radius: Option<f64>,
        #[command(flatten)]
        method: Method,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stagewise moment matching over the moment varieties.
    Stagewise {
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        orders: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical point of the 1-D power-sum landscape with given multiplicities.
    Landscape1d {
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        stage: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        mults: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        assignment: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Haar orbit moment identity on random pairs of vectors.
    OrbitCheck {
        /// cyclic:d | rot2:n | file:<path>
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact moment-to-cumulant coefficient table as JSON.
    Cumulants {
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Fields(Map<String, Value>);

impl Fields {
    fn put<T: serde::Serialize>(&mut self, key: &str, value: Option<T>) -> &mut Self {
        if let Some(v) = value {
            self.0
                .insert(key.to_string(), serde_json::to_value(v).expect("flag values serialize"));
        }
        self
    }

    fn method(&mut self, m: Method) -> &mut Self {
        self.put("method", m.method)
            .put("nodes_per_axis", m.nodes_per_axis)
            .put("mc_samples", m.mc_samples)
    }
}

fn flags(command: Command) -> (&'static str, Map<String, Value>) {
    let mut f = Fields(Map::new());
    let kind = match command {
        Command::ExpansionScan {
            truth,
            mix,
            order,
            sigmas,
            noise_floor,
            method,
            out,
        } => {
            f.put("truth", truth)
                .put("mix", mix)
                .put("order", order)
                .put("sigmas", sigmas);
            f.put("noise_floor", noise_floor).method(method).put("out", out);
            "expansion-scan"
        }
        Command::EmRun {
            truth,
            init,
            sigma,
            mode,
            tau,
            max_iter,
            tol,
            samples,
            method,
            out,
        } => {
            f.put("truth", truth)
                .put("init", init)
                .put("sigma", sigma)
                .put("mode", mode);
            f.put("tau", tau)
                .put("max_iter", max_iter)
                .put("tol", tol)
                .put("samples", samples);
            f.method(method).put("out", out);
            "em-run"
        }
        Command::T1Scan {
            truth,
            init,
            sigmas,
            radius,
            method,
            out,
        } => {
            f.put("truth", truth)
                .put("init", init)
                .put("sigmas", sigmas)
                .put("radius", radius);
            f.method(method).put("out", out);
            "t1-scan"
        }
        Command::Stagewise {
            truth,
            init,
            orders,
            out,
        } => {
            f.put("truth", truth)
                .put("init", init)
                .put("orders", orders)
                .put("out", out);
            "stagewise"
        }
        Command::Landscape1d {
            weights,
            truth,
            stage,
            mults,
            assignment,
            out,
        } => {
            f.put("weights", weights)
                .put("truth", truth)
                .put("stage", stage)
                .put("mults", mults);
            f.put("assignment", assignment).put("out", out);
            "landscape1d"
        }
        Command::OrbitCheck {
            group,
            pairs,
            max_order,
            out,
        } => {
            f.put("group", group)
                .put("pairs", pairs)
                .put("max_order", max_order)
                .put("out", out);
            "orbit-check"
        }
        Command::Cumulants { max_order, out } => {
            f.put("max_order", max_order).put("out", out);
            "cumulant-dump"
        }
    };
    (kind, f.0)
}

fn resolve(cli: Cli) -> Result<lowsnr::experiment::ExperimentConfig, RunError> {
    let (mut map, origin) = match &cli.config {
        Some(path) => (read_json::<Map<String, Value>>(path)?, path.display().to_string()),
        None => (Map::new(), "command line".to_string()),
    };
    if let Some(cmd) = cli.command {
        let (kind, overrides) = flags(cmd);
        match map.get("kind") {
            Some(k) if k != kind => {
                return Err(RunError::Schema(format!(
                    "kind: config says {k}, subcommand is {kind:?}"
                )));
            }
            _ => {
                map.insert("kind".into(), kind.into());
            }
        }
        map.extend(overrides);
    } else if cli.config.is_none() {
        return Err(RunError::Schema(
            "a subcommand or --config is required (see --help)".into(),
        ));
    }
    if let Some(seed) = cli.seed {
        map.insert("seed".into(), seed.into());
    }
    if cli.config.is_none() {
        map.entry("seed").or_insert(0.into());
    }
    parse_config(Value::Object(map), &origin)
}

fn main() -> ExitCode {
    let outcome = resolve(Cli::parse()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
