//! File formats shared by the CLI and the examples: mixture/group JSON in,
//! CSV and JSON artifacts out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::group::{cyclic_group, planar_rotation_group, FiniteGroupAction};
use crate::mixture::DiscreteMixture;

/// Failure of an experiment run, split by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Inputs missing, malformed or rejected by validation (exit 2).
    #[error("{0}")]
    Schema(String),
    /// The computation itself failed (exit 3).
    #[error("{0}")]
    Numeric(#[from] crate::Error),
    /// Artifacts could not be written (exit 3).
    #[error("{path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) | RunError::Numeric(crate::Error::InvalidArgument(_)) => 2,
            _ => 3,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> RunResult<T> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
}

pub fn read_mixture(path: &Path) -> RunResult<DiscreteMixture> {
    read_json(path)
}

/// `cyclic:d`, `rot2:n` or `file:<path>`.
pub fn parse_group(spec: &str) -> RunResult<FiniteGroupAction> {
    let bad = |msg: String| RunError::Schema(format!("group: {msg}"));
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| bad(format!("expected cyclic:d, rot2:n or file:<path>, got {spec:?}")))?;
    let count = || arg.parse::<usize>().map_err(|e| bad(format!("{arg:?}: {e}")));
    match kind {
        "cyclic" => cyclic_group(count()?).map_err(|e| bad(e.to_string())),
        "rot2" => planar_rotation_group(count()?).map_err(|e| bad(e.to_string())),
        "file" => read_json(Path::new(arg)),
        _ => Err(bad(format!("unknown group kind {kind:?}"))),
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn output_error(path: &Path, source: std::io::Error) -> RunError {
    RunError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> RunResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| output_error(dir, e)),
        _ => Ok(()),
    }
}

/// Writes a header row and string rows.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> RunResult<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e.into()))?;
    w.write_record(header).map_err(|e| output_error(path, e.into()))?;
    for row in rows {
        w.write_record(row).map_err(|e| output_error(path, e.into()))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> RunResult<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| output_error(path, e))
}

/// `report.csv` → `report.slope.json`.
pub fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.json"))
}

/// Column names `center_{j}_{a}` for a `K × d` mixture.
pub fn center_columns(k: usize, d: usize) -> Vec<String> {
    (0..k)
        .flat_map(|j| (0..d).map(move |a| format!("center_{j}_{a}")))
        .collect()
}

pub fn center_cells(mix: &DiscreteMixture) -> Vec<String> {
    mix.centers().iter().flatten().map(|x| fmt_f64(*x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_17_digits() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
    }

    #[test]
    fn malformed_mixture_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        fs::write(&p, r#"{"dim": 1, "centers": [[0.0], [1.0]], "weights": [0.5, 0.4]}"#).unwrap();
        let err = read_mixture(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("weights"), "{err}");
        assert!(err.to_string().contains("m.json"), "{err}");
    }

    #[test]
    fn group_specs() {
        assert_eq!(parse_group("cyclic:4").unwrap().len(), 4);
        assert_eq!(parse_group("rot2:6").unwrap().dim(), 2);
        assert!(parse_group("cyclic").is_err());
        assert!(parse_group("dihedral:3").is_err());
        assert!(parse_group("file:/nonexistent.json").is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("out/report.csv"), "slope"),
            PathBuf::from("out/report.slope.json")
        );
    }

    #[test]
    fn csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.csv");
        write_csv(&p, &["a".into(), "b".into()], &[vec![fmt_f64(1.0), fmt_f64(2.5)]]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000e0,2.5000000000000000e0\n");
    }
}
