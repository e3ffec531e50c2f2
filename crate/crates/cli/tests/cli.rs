use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lshm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lshm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = lshm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

fn simulate_and_fit(dir: &Path) {
    ok(dir, &["simulate", "--model", "latent", "--preset", "sec61", "--n", "50", "--seed", "7", "--out", "sim.csv"]);
    ok(dir, &["fit", "--data", "sim.csv", "--out", "model.json"]);
}

#[test]
fn simulate_fit_predict_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_and_fit(d);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["model_type"], "latent_state");
    for key in [
        "feature_names", "alpha0", "alpha", "beta0", "beta", "c1_alpha", "c2_beta", "loss",
        "iterations", "converged", "information", "normalization",
    ] {
        assert!(model.get(key).is_some(), "model JSON lacks {key}");
    }
    assert_eq!(model["information"].as_array().unwrap().len(), 16);

    ok(d, &["predict", "--model-file", "model.json", "--data", "sim.csv", "--out", "pred.csv"]);
    let (header, rows) = csv_rows(&d.join("pred.csv"));
    assert_eq!(header, ["lifetime_id", "unit_id", "t", "mu", "g", "lambda"]);
    let (_, sim_rows) = csv_rows(&d.join("sim.csv"));
    assert_eq!(rows.len(), sim_rows.len());
    for r in &rows {
        let v: Vec<f64> = (3..6).map(|i| r[i].parse().unwrap()).collect();
        assert!(v[0] > 0.0 && v[1] > 0.0);
        assert!((v[0] + v[1] - v[2]).abs() <= 1e-12 * v[2]);
    }
}

#[test]
fn simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for model in ["latent", "hmm", "bian"] {
        ok(d, &["simulate", "--model", model, "--n", "10", "--seed", "3", "--out", "a.csv"]);
        ok(d, &["simulate", "--model", model, "--n", "10", "--seed", "3", "--out", "b.csv"]);
        assert_eq!(std::fs::read(d.join("a.csv")).unwrap(), std::fs::read(d.join("b.csv")).unwrap());
    }
}

#[test]
fn warn_reproduces_warn_at_failure_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_and_fit(d);
    ok(d, &[
        "warn", "--model-file", "model.json", "--data", "sim.csv", "--d", "5", "--c1", "1",
        "--c2", "1", "--out", "thr.json", "--report", "report.csv",
    ]);
    // Σ C_d(0) = c1·d over failed lifetimes of length at least d
    let (_, sim) = csv_rows(&d.join("sim.csv"));
    let mut lengths = std::collections::BTreeMap::new();
    let mut failed = std::collections::BTreeSet::new();
    for r in &sim {
        *lengths.entry(r[0].to_string()).or_insert(0usize) += 1;
        if &r[3] == "1" {
            failed.insert(r[0].to_string());
        }
    }
    let expected = failed.iter().filter(|id| lengths[*id] >= 5).count() as f64 * 5.0;

    let summary: Value = serde_json::from_str(&std::fs::read_to_string(d.join("thr.json")).unwrap()).unwrap();
    assert_eq!(summary["warn_at_failure"].as_f64().unwrap(), expected);
    let (header, rows) = csv_rows(&d.join("report.csv"));
    let col = header.iter().position(|h| h == "warn_at_failure_cost").unwrap();
    let total: f64 = rows.iter().map(|r| r[col].parse::<f64>().unwrap()).sum();
    assert_eq!(total, expected);
    let cost_col = header.iter().position(|h| h == "cost").unwrap();
    let cost: f64 = rows.iter().map(|r| r[cost_col].parse::<f64>().unwrap()).sum();
    assert_eq!(cost, summary["evaluation"]["total_cost"].as_f64().unwrap());
}

#[test]
fn tradeoff_and_evaluate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_and_fit(d);
    ok(d, &["tradeoff", "--model-file", "model.json", "--data", "sim.csv", "--criterion", "mu", "--out", "curve.csv"]);
    let (header, rows) = csv_rows(&d.join("curve.csv"));
    assert_eq!(header, ["threshold", "pct_missing_operating_time", "pct_unexpected_failures"]);
    assert_eq!(&rows.last().unwrap()[0], "inf");

    ok(d, &["evaluate", "--model-file", "model.json", "--data", "sim.csv", "--offsets", "0,3", "--out-dir", "eval"]);
    let (header, rows) = csv_rows(&d.join("eval/ks.csv"));
    assert_eq!(header, ["statistic", "p_value", "n"]);
    assert_eq!(rows.len(), 1);
    let (header, residuals) = csv_rows(&d.join("eval/residuals.csv"));
    assert_eq!(header, ["lifetime_id", "unit_id", "length", "residual"]);
    assert_eq!(residuals.len().to_string(), &rows[0][2]);
    let (header, ranks) = csv_rows(&d.join("eval/rank.csv"));
    assert_eq!(header, ["lifetime_id", "unit_id", "eval_offset", "percentile", "cohort_size"]);
    for r in &ranks {
        let p: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn compare_writes_cost_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--model", "hmm", "--n", "30", "--seed", "2", "--out", "hmm.csv"]);
    ok(d, &["compare", "--data", "hmm.csv", "--folds", "3", "--seed", "1", "--d", "2", "--out", "cmp.csv"]);
    let (header, rows) = csv_rows(&d.join("cmp.csv"));
    assert_eq!(
        header,
        ["fold", "model", "threshold", "total_cost", "n_lifetimes", "warn_at_failure", "reduction_pct"]
    );
    assert_eq!(rows.len(), 8);
    assert_eq!(&rows[6][0], "all");
}

#[test]
fn empty_csv_is_a_data_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = lshm(dir.path(), &["fit", "--data", "empty.csv", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty.csv"));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(lshm(d, &["fit", "--out", "m.json"]).status.code(), Some(1));
    assert_eq!(lshm(d, &["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(lshm(d, &["nonsense"]).status.code(), Some(1));
    assert_eq!(lshm(d, &["simulate", "--n", "0", "--out", "x.csv"]).status.code(), Some(1));
    assert_eq!(lshm(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn overflowing_model_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_and_fit(d);
    let mut model: Value = serde_json::from_str(&std::fs::read_to_string(d.join("model.json")).unwrap()).unwrap();
    model["beta0"] = Value::from(800.0);
    std::fs::write(d.join("big.json"), model.to_string()).unwrap();
    let out = lshm(d, &["predict", "--model-file", "big.json", "--data", "sim.csv", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--n", "30", "--seed", "1", "--out", "sim.csv"]);
    std::fs::write(
        d.join("fit.json"),
        r#"{"data": "sim.csv", "out": "m.json", "penalty-alpha": 0.5, "penalty_beta": 0.25, "normalize": true}"#,
    )
    .unwrap();
    ok(d, &["fit", "--config", "fit.json", "--penalty-alpha", "0.2"]);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(model["c1_alpha"], 0.2);
    assert_eq!(model["c2_beta"], 0.25);
    assert!(model["normalization"].is_object());

    std::fs::write(d.join("bad.json"), r#"{"data": "sim.csv", "colour": 1}"#).unwrap();
    assert_eq!(lshm(d, &["fit", "--config", "bad.json"]).status.code(), Some(1));
    std::fs::write(d.join("nested.json"), r#"{"data": {"x": 1}}"#).unwrap();
    assert_eq!(lshm(d, &["fit", "--config", "nested.json"]).status.code(), Some(2));
}

#[test]
fn mismatched_features_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate_and_fit(d);
    ok(d, &["simulate", "--model", "hmm", "--n", "5", "--out", "hmm.csv"]);
    let out = lshm(d, &["predict", "--model-file", "model.json", "--data", "hmm.csv", "--out", "p.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hmm.csv"));
}
