use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtk")).args(args).env_remove("QTK_SEED").output().expect("spawn qtk")
}

fn result(out: &Output) -> Value {
    assert!(out.status.success(), "qtk failed: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("json output");
    assert_eq!(v["schema"], "1");
    v["result"].clone()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decompose_reports_linear_xx_count() {
    for n in [3, 5, 8] {
        let r = result(&qtk(&["decompose", "-n", &n.to_string()]));
        assert_eq!(r["xx_count"], 2 * n - 3);
    }
    let r = result(&qtk(&["decompose", "--family", "qubit", "-n", "3"]));
    assert_eq!(r["xx_count"], 6);
}

#[test]
fn too_few_qutrits_fails() {
    let out = qtk(&["decompose", "-n", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn dot_output_is_a_digraph() {
    let out = qtk(&["decompose", "-n", "3", "--emit", "dot"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("digraph"));
}

#[test]
fn circuit_file_round_trip_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c4.json");
    assert!(qtk(&["decompose", "-n", "4", "--circuit-out", path_str(&file)]).status.success());
    let common = ["--seed", "5", "truth-table", "--shots", "64", "--confusion-shots", "0", "--resamples", "20"];
    let a = result(&qtk(&[&common[..], &["--circuit", path_str(&file)]].concat()));
    let b = result(&qtk(&[&common[..], &["-n", "4"]].concat()));
    assert_eq!(a["f_tt"], b["f_tt"]);
    assert_eq!(a["f_x"], b["f_x"]);
}

#[test]
fn noiseless_truth_table_is_perfect() {
    let r = result(&qtk(&["--noiseless", "truth-table", "-n", "3", "--shots", "32", "--confusion-shots", "0"]));
    assert_eq!(r["f_tt"].as_f64().unwrap(), 1.0);
}

#[test]
fn same_seed_same_output() {
    let args = ["--seed", "11", "grover", "--shots", "200"];
    assert_eq!(qtk(&args).stdout, qtk(&args).stdout);
    let other = qtk(&["--seed", "12", "grover", "--shots", "200"]).stdout;
    assert_ne!(qtk(&args).stdout, other);
}

#[test]
fn seed_from_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qtk"));
        c.env_remove("QTK_SEED");
        if let Some(e) = env {
            c.env("QTK_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let v: Value = serde_json::from_slice(&c.args(["grover", "--shots", "10"]).output().unwrap().stdout).unwrap();
        v["config"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 0);
    assert_eq!(run(Some("9"), None), 9);
    assert_eq!(run(Some("9"), Some("3")), 3);
}

#[test]
fn config_with_unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 4\nbogus = 1\n").unwrap();
    let out = qtk(&["--config", path_str(&bad), "grover", "--shots", "10"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, "seed = 4\n[noise]\nxx_leak_prob = 0.02\n").unwrap();
    let out = qtk(&["--config", path_str(&good), "grover", "--shots", "10"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 4);
    assert_eq!(v["config"]["noise"]["xx_leak_prob"], 0.02);
}

#[test]
fn leak_scan_csv_refits_to_same_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("leak.csv");
    let svg = dir.path().join("leak.svg");
    let scan = result(&qtk(&[
        "--seed",
        "2",
        "leak-scan",
        "--n-range",
        "3..6",
        "--shots",
        "800",
        "--csv",
        path_str(&csv),
        "--plot",
        path_str(&svg),
    ]));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let fit = result(&qtk(&["fit", "--input", path_str(&csv)]));
    let (p1, p2) = (scan["fit"]["p"].as_f64().unwrap(), fit["p"].as_f64().unwrap());
    assert!((p1 - p2).abs() < 1e-12, "{p1} vs {p2}");
}

#[test]
fn truth_table_range_writes_csv_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tt.csv");
    let svg = dir.path().join("tt.svg");
    let out = qtk(&[
        "truth-table",
        "--n-range",
        "3..4",
        "--shots",
        "32",
        "--confusion-shots",
        "0",
        "--resamples",
        "10",
        "--csv",
        path_str(&csv),
        "--plot",
        path_str(&svg),
    ]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 2);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("polyline"));
}

#[test]
fn confusion_csv_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cm.csv");
    assert!(qtk(&["confusion", "-n", "2", "--shots", "100", "--csv", path_str(&csv)]).status.success());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("# n=2"));
}
