use std::path::Path;
use std::process::{Command, Output};

use fairmatch::Instance;
use serde_json::Value;

fn fairmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV report as (metric, mean, target, pass).
fn csv_rows(text: &str) -> Vec<(String, f64, String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let cols: Vec<&str> = l.rsplitn(6, ',').collect();
            let pass = cols[0].to_string();
            let target = cols[2].to_string();
            let mean = cols[4].parse().unwrap();
            let metric = cols[5].rsplit(',').next().unwrap().to_string();
            (metric, mean, target, pass)
        })
        .collect()
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ut.json");
    let out = fairmatch(&["gen", "upper_triangular", "n=3", "--out", path_str(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&path).unwrap();
    let inst = Instance::from_json(&text).unwrap();
    assert_eq!((inst.num_agents(), inst.num_items(), inst.num_edges()), (3, 3, 6));
    assert_eq!(inst.to_json(), text);

    let out = fairmatch(&["gen", "cnsw_counterexample"]);
    let inst = Instance::from_json(&stdout(&out)).unwrap();
    assert_eq!((inst.num_agents(), inst.num_items()), (8, 6));
}

#[test]
fn gen_rejects_unknown_generator_and_bad_params() {
    let out = fairmatch(&["gen", "unknown_name"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("random_bipartite"));
    assert_eq!(code(&fairmatch(&["gen", "upper_triangular"])), 1);
    assert_eq!(code(&fairmatch(&["gen", "upper_triangular", "n=0"])), 1);
    assert_eq!(code(&fairmatch(&["gen", "upper_triangular", "n=2", "m=1"])), 1);
    assert_eq!(code(&fairmatch(&["--bogus"])), 1);
    assert_eq!(code(&fairmatch(&["--help"])), 0);
}

#[test]
fn gen_random_uses_the_master_seed() {
    let args = |seed: &'static str| {
        stdout(&fairmatch(&[
            "gen",
            "random_bipartite",
            "k=2",
            "agents_per_class=3",
            "num_items=8",
            "edge_prob=0.5",
            "--seed",
            seed,
        ]))
    };
    assert_eq!(args("5"), args("5"));
    assert_ne!(args("5"), args("6"));
}

#[test]
fn run_random_is_nonwasteful() {
    let out = fairmatch(&["run", "--gen", "cef_impossibility", "--param", "n=20", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["result"]["metrics"]["nonwasteful"], true);
    assert_eq!(doc["config"]["seed"], 3);
    assert_eq!(doc["config"]["algorithm"], "random");
    assert_eq!(doc["tool"], "fairmatch");
}

#[test]
fn greedy_on_a_contested_item_has_zero_cef_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("contested.json");
    let inst = fairmatch::make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
    std::fs::write(&path, inst.to_json()).unwrap();
    let out = fairmatch(&[
        "run",
        "--instance",
        path_str(&path),
        "--algorithm",
        "greedy_lexico",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    let alpha = rows.iter().find(|r| r.0 == "cef_alpha").unwrap();
    assert_eq!(alpha.1, 0.0);
}

#[test]
fn run_reports_load_failures() {
    let out = fairmatch(&["run", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(code(&out), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name":"x","num_classes":1,"agents":[],"items":[]}"#).unwrap();
    assert_eq!(code(&fairmatch(&["run", "--instance", path_str(&path)])), 2);
    assert_eq!(code(&fairmatch(&["run"])), 1);
}

#[test]
fn oracles_return_exact_values() {
    let out = fairmatch(&["oracle", "usw_opt", "--gen", "upper_triangular", "--param", "n=5"]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["result"]["usw_opt"], 5);

    let out = fairmatch(&["oracle", "cmnw", "--gen", "cnsw_counterexample"]);
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((doc["result"]["cnsw"].as_f64().unwrap() - 3.0).abs() < 1e-12);

    let out = fairmatch(&["oracle", "prop", "--gen", "cnsw_counterexample"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    for share in doc["result"].as_array().unwrap() {
        assert!(share.get("divisible_gap").is_some());
    }
}

#[test]
fn oracle_caps_are_enforced_and_overridable() {
    let args = [
        "oracle",
        "prop",
        "--gen",
        "random_bipartite",
        "--param",
        "k=2",
        "--param",
        "agents_per_class=1",
        "--param",
        "num_items=11",
        "--param",
        "edge_prob=0.3",
    ];
    let out = fairmatch(&args);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cap 10"));
    let mut raised = args.to_vec();
    raised.extend(["--prop-items", "11"]);
    assert_eq!(code(&fairmatch(&raised)), 0);
}

#[test]
fn exp_pof_reports_the_analytic_ratio() {
    let out = fairmatch(&["exp", "pof", "k=50", "p=1", "q=2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# fairmatch "));
    let rows = csv_rows(&text);
    let ratio = rows.iter().find(|r| r.0 == "analytic_ratio").unwrap();
    assert!((ratio.1 - 0.6711).abs() < 1e-4);
}

#[test]
fn exp_divisible_targets_the_fixed_point() {
    let out = fairmatch(&["exp", "divisible", "n=20000"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = csv_rows(&stdout(&out));
    let beta = rows.iter().find(|r| r.0 == "beta_analytic").unwrap();
    assert_eq!(beta.2, "0.677");
    assert_eq!(beta.3, "true");
}

#[test]
fn exp_cef_upper_has_the_envy_ratio_row() {
    let out = fairmatch(&["exp", "cef_upper", "n=2000", "trials=20", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let row = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric"] == "envy_ratio")
        .unwrap();
    assert!((row["target"].as_f64().unwrap() - 0.7616).abs() < 1e-4);
    assert_eq!(doc["config"]["trials"], 20);
}

#[test]
fn exp_exits_3_when_a_target_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.csv");
    let out = fairmatch(&["exp", "divisible", "n=10", "--out", path_str(&path)]);
    assert_eq!(code(&out), 3);
    let rows = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert!(rows.iter().any(|r| r.3 == "false"));
}

#[test]
fn exp_rejects_unknown_presets_and_misplaced_trials() {
    let out = fairmatch(&["exp", "nope"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("cef_lower"));
    assert_eq!(code(&fairmatch(&["exp", "pof", "--trials", "5"])), 1);
    assert_eq!(code(&fairmatch(&["exp", "cef_upper", "trials=5", "--trials", "5"])), 1);
    assert_eq!(code(&fairmatch(&["exp", "cef_upper", "--trials", "0"])), 1);
}

#[test]
fn embedded_config_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    let run = |path: &Path, threads: &str| {
        let out = fairmatch(&[
            "exp",
            "cef_lower",
            "n=30",
            "panel=3",
            "--trials",
            "40",
            "--seed",
            "99",
            "--threads",
            threads,
            "--out",
            path_str(path),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    };
    run(&first, "1");
    let text = std::fs::read_to_string(&first).unwrap();
    let config: Value = serde_json::from_str(
        text.lines()
            .nth(1)
            .unwrap()
            .strip_prefix("# config: ")
            .unwrap(),
    )
    .unwrap();
    assert_eq!(config["seed"], 99);
    assert_eq!(config["params"]["panel"], 3);
    run(&second, "2");
    assert_eq!(text, std::fs::read_to_string(&second).unwrap());
}
