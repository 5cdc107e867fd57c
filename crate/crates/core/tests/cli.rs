use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lowsnr(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lowsnr"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn symmetric_pair(dir: &Path) {
    write(
        dir,
        "truth.json",
        r#"{"dim": 1, "centers": [[1.0], [-1.0]], "weights": [0.5, 0.5]}"#,
    );
    write(
        dir,
        "mix.json",
        r#"{"dim": 1, "centers": [[0.5], [-0.5]], "weights": [0.5, 0.5]}"#,
    );
}

#[test]
fn malformed_weights_exit_2_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "truth.json",
        r#"{"dim": 1, "centers": [[1.0], [-1.0]], "weights": [0.7, 0.7]}"#,
    );
    write(
        dir.path(),
        "mix.json",
        r#"{"dim": 1, "centers": [[0.5], [-0.5]], "weights": [0.5, 0.5]}"#,
    );
    let o = lowsnr(
        dir.path(),
        &[
            "expansion-scan",
            "--truth",
            "truth.json",
            "--mix",
            "mix.json",
            "--order",
            "2",
            "--sigmas",
            "10,20,40,80",
            "--out",
            "r.csv",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("weights"), "{}", stderr(&o));
    assert!(!dir.path().join("r.csv").exists());
}

#[test]
fn missing_required_field_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    symmetric_pair(dir.path());
    let o = lowsnr(
        dir.path(),
        &["expansion-scan", "--truth", "truth.json", "--out", "r.csv"],
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("mix"), "{}", stderr(&o));
}

#[test]
fn cumulant_dump_has_exact_integers() {
    let dir = tempfile::tempdir().unwrap();
    let o = lowsnr(dir.path(), &["cumulants", "--max-order", "6", "--out", "c.json"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("c.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let six = v.to_string();
    assert!(six.contains("-10"), "{six}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn expansion_scan_writes_csv_sidecar_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    symmetric_pair(dir.path());
    let o = lowsnr(
        dir.path(),
        &[
            "--seed",
            "3",
            "expansion-scan",
            "--truth",
            "truth.json",
            "--mix",
            "mix.json",
            "--order",
            "2",
            "--sigmas",
            "10,20,40,80,160",
            "--out",
            "out/scan.csv",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sigma,neg_loglik_gap,leading_term,residual,abs_residual,gap_stderr"
    );
    assert_eq!(lines.count(), 5);
    let slope: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/scan.slope.json")).unwrap()).unwrap();
    let s = slope["fitted_slope"].as_f64().unwrap();
    assert!((-6.6..=-5.4).contains(&s), "{s}");
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["kind"], "expansion-scan");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    symmetric_pair(dir.path());
    write(
        dir.path(),
        "cfg.json",
        r#"{"kind": "expansion-scan", "seed": 1, "truth": "truth.json", "mix": "mix.json",
            "order": 2, "sigmas": [10, 20, 40, 80], "out": "a.csv"}"#,
    );
    let o = lowsnr(dir.path(), &["--config", "cfg.json"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap().lines().count(), 5);

    let o = lowsnr(
        dir.path(),
        &[
            "--config",
            "cfg.json",
            "expansion-scan",
            "--sigmas",
            "10,20,40,80,160",
            "--out",
            "b.csv",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("b.csv")).unwrap().lines().count(), 6);

    let o = lowsnr(dir.path(), &["--config", "cfg.json", "stagewise"], &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn monte_carlo_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    symmetric_pair(dir.path());
    let run = |threads: &str, out: &str| {
        let o = lowsnr(
            dir.path(),
            &[
                "--seed",
                "11",
                "expansion-scan",
                "--truth",
                "truth.json",
                "--mix",
                "mix.json",
                "--order",
                "2",
                "--sigmas",
                "2,4,6,8",
                "--method",
                "monte-carlo",
                "--mc-samples",
                "20000",
                "--out",
                out,
            ],
            &[("LOWSNR_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    let one = run("1", "t1.csv");
    let four = run("4", "t4.csv");
    let again = run("4", "t4b.csv");
    assert_eq!(one, four);
    assert_eq!(four, again);
}

#[test]
fn landscape_reports_both_classifications() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "w.json", "[0.2, 0.3, 0.5]");
    write(dir.path(), "t.json", "[1.3, -0.4, 0.7]");
    let o = lowsnr(
        dir.path(),
        &[
            "landscape1d",
            "--weights",
            "w.json",
            "--truth",
            "t.json",
            "--stage",
            "2",
            "--mults",
            "2,1",
            "--out",
            "l.json",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("l.json")).unwrap()).unwrap();
    let points = v["points"].as_array().unwrap();
    assert!(!points.is_empty());
    for p in points {
        for key in [
            "values",
            "multiplicities",
            "p_next",
            "p_next_star",
            "multiplicity_classification",
            "hessian_classification",
        ] {
            assert!(p.get(key).is_some(), "missing {key} in {p}");
        }
    }

    let o = lowsnr(
        dir.path(),
        &[
            "landscape1d",
            "--weights",
            "w.json",
            "--truth",
            "t.json",
            "--stage",
            "3",
            "--mults",
            "2,1",
            "--out",
            "x.json",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unmatched_lower_moment_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "truth.json",
        r#"{"dim": 1, "centers": [[1.0], [-1.0]], "weights": [0.5, 0.5]}"#,
    );
    write(
        dir.path(),
        "mix.json",
        r#"{"dim": 1, "centers": [[0.9], [-0.5]], "weights": [0.5, 0.5]}"#,
    );
    let o = lowsnr(
        dir.path(),
        &[
            "expansion-scan",
            "--truth",
            "truth.json",
            "--mix",
            "mix.json",
            "--order",
            "2",
            "--sigmas",
            "10,20,40,80",
            "--out",
            "r.csv",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn stagewise_and_orbit_check_run() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "truth.json",
        r#"{"dim": 2, "centers": [[2.0, 0.5], [-2.0, -0.5]], "weights": [0.5, 0.5]}"#,
    );
    write(
        dir.path(),
        "init.json",
        r#"{"dim": 2, "centers": [[0.3, 1.0], [0.1, -0.7]], "weights": [0.5, 0.5]}"#,
    );
    let o = lowsnr(
        dir.path(),
        &[
            "stagewise",
            "--truth",
            "truth.json",
            "--init",
            "init.json",
            "--orders",
            "2",
            "--out",
            "s.csv",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
    assert!(dir.path().join("s.diagnostics.json").exists());

    let o = lowsnr(
        dir.path(),
        &[
            "orbit-check",
            "--group",
            "cyclic:4",
            "--pairs",
            "5",
            "--max-order",
            "3",
            "--out",
            "o.csv",
        ],
        &[],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o.summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("max"), "{summary}");
}
