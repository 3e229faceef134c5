use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pmkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmkit"))
        .args(args)
        .output()
        .expect("spawn pmkit")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.json");
    fs::write(
        &path,
        r#"{
            "game": "apple_tasting",
            "p": [0.3, 0.7],
            "strategies": [
                {"strategy": "cbp", "alpha": 1.01},
                {"strategy": "randcbp", "alpha": 1.01, "K": 5, "eps": 1e-7, "sigma": 1.0, "A": 0.0},
                {"strategy": "uniform"}
            ],
            "horizon": 200,
            "runs": 2,
            "seed": 11,
            "stride": 10
        }"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn analyze_prints_structure_json() {
    let out = pmkit(&["analyze", "label_efficient"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["observability"], "globally_observable_only");
    assert_eq!(v["n_actions"], 3);
}

#[test]
fn analyze_tau_detection_game() {
    let out = pmkit(&["analyze", "tau_detection:0.2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n_actions"], 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = pmkit(&[
            "simulate",
            &cfg,
            "--runs",
            "4",
            "--horizon",
            "1000",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ca = fs::read(a.join("curves.csv")).unwrap();
    let cb = fs::read(b.join("curves.csv")).unwrap();
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.starts_with("strategy,run,round,cum_regret"));
    assert!(text.contains("randcbp,3,1000,"));
}

#[test]
fn report_prints_summary_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let res = dir.path().join("res");
    let o = pmkit(&["simulate", &cfg, "--out", res.to_str().unwrap()]);
    assert!(o.status.success());
    let o = pmkit(&["report", res.to_str().unwrap()]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    for col in ["strategy", "mean", "std", "p_value", "wins"] {
        assert!(table.contains(col), "missing {col}");
    }
    for s in ["cbp", "randcbp", "uniform"] {
        assert!(table.contains(s));
    }
    let o = pmkit(&["report", "--json", res.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["strategies"].as_array().unwrap().len(), 3);
}

#[test]
fn monitor_runs_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mon.json");
    fs::write(
        &cfg,
        r#"{"C": 4, "tau_list": [0.2], "balance": "balanced", "errors": "uniform", "runs": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("mon_out.json");
    let o = pmkit(&[
        "monitor",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_input_fails_with_usage() {
    let o = pmkit(&["frobnicate"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = pmkit(&["analyze", "no_such_game"]);
    assert!(!o.status.success());
    let o = pmkit(&["simulate", "/nonexistent/config.json"]);
    assert!(!o.status.success());
}
