use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_identikit"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const CIRCLE: &str = r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16},
    "functionals": ["sin3", "half_arc"], "seed": 4}"#;

#[test]
fn diagnose_writes_reports_with_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["diagnose", "--seed", "11"], CIRCLE);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["report.json", "singular_values.csv", "partial_sums.csv", "singular_values.svg", "partial_sums_sin3.svg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["config"]["grids"]["fine_factor"], 2);
    assert_eq!(r["config"]["thresholds"]["tau_null"], 1e-10);
    assert_eq!(r["functionals"][0]["classification"]["verdict"], "Regular");
    let svg = std::fs::read_to_string(out.join("singular_values.svg")).unwrap();
    assert!(svg.contains("<!-- data\nseries,x,y\n"));
}

#[test]
fn unknown_config_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["diagnose"], r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16}, "sede": 1}"#);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
}

#[test]
fn unidentified_functional_exits_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema": "identikit/1",
        "model": {"type": "ig_mixture", "alpha": {"lo": -2, "hi": 2, "n": 6}, "beta": {"lo": 0.2, "hi": 3, "n": 3},
                  "t": {"lo": 0.2, "hi": 5, "n": 12}, "lambda0": "gaussian_gamma"},
        "functionals": ["mean_drift"]}"#;
    let o = run(dir.path(), &["estimate", "--simulate", "500"], cfg);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("functional not identified under this model"));
}

#[test]
fn estimate_from_data_file_and_coverage_check() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let cfg = format!(
        r#"{{"schema": "identikit/1", "model": {{"type": "wtp", "w_max": 1, "v_max": 2, "w_density": "uniform",
            "v_density": "uniform", "h": 0.05}}, "functionals": ["mean"], "estimate": {{"data": "{}"}}}}"#,
        data.display()
    );
    // two columns: accept indicator, offer
    let mut rows = String::from("y,v\n");
    for i in 0..400 {
        let v = 2.0 * (i as f64 + 0.5) / 400.0;
        rows.push_str(&format!("{},{v}\n", (i % 3 != 0) as u8));
    }
    std::fs::write(&data, &rows).unwrap();
    let o = run(dir.path(), &["estimate"], &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("out/estimate.json"));
    assert_eq!(r["estimates"][0]["n"], 400);
    assert!(r["estimates"][0]["se"].as_f64().unwrap() > 0.0);

    for i in 0..10 {
        rows.push_str(&format!("1,{}\n", 3.0 + i as f64));
    }
    std::fs::write(&data, &rows).unwrap();
    let o = run(dir.path(), &["estimate"], &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("10 of 410"), "{}", stderr(&o));
}

#[test]
fn single_replication_rates_flag_missing_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16}, "functionals": ["sin3"],
        "rates": {"ns": [200, 800, 3200], "reps": 1}}"#;
    let o = run(dir.path(), &["rates"], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("out/rates.json"));
    assert!(!r["fit"]["flags"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(dir.path().join("out/rates.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn path_reports_on_synthetic_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema": "identikit/1",
        "model": {"type": "synthetic_sequence", "n": 12, "singular_values": {"geometric": 0.5}, "representer": {"geometric": 0.5}},
        "functionals": ["r"], "path": {"rho": 1.0, "ts": [0.05, 0.1, 0.2]}}"#;
    let o = run(dir.path(), &["path"], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&dir.path().join("out/path.json"));
    // the fine mesh doubles the sequence length
    assert_eq!(r["path"]["mode"], 23);
    assert_eq!(r["path"]["cross_check_holds"], true);
}

#[test]
fn dump_operator_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["dump-operator"], CIRCLE);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bytes = std::fs::read(dir.path().join("out/operator_fine.idk")).unwrap();
    let op = identikit::linop::read_operator(&mut bytes.as_slice()).unwrap();
    assert_eq!((op.rows(), op.cols()), (64, 32));
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["diagnose", "--threads", "0"], CIRCLE);
    assert_eq!(o.status.code(), Some(2));
}
