use std::path::Path;
use std::process::{Command, Output};

fn contagion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contagion")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CHAIN_LP: [&str; 4] = ["--graph", "chain:11", "--tau", "0.75"];

#[test]
fn generated_graph_can_be_inspected() {
    let dir = tempfile::tempdir().unwrap();
    let out = contagion(&["--out", path_str(dir.path()), "graph", "generate", "karate"]);
    assert!(out.status.success());
    let graph = dir.path().join("graph.json");
    let inspect = contagion(&["graph", "inspect", path_str(&graph)]);
    assert!(inspect.status.success());
    assert!(stdout(&inspect).contains("34 nodes, 78 edges"), "{}", stdout(&inspect));
    assert!(dir.path().join("meta.json").exists());
}

#[test]
fn self_loops_are_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("loop.json");
    std::fs::write(&graph, r#"{"num_nodes": 2, "edges": [[0, 0], [0, 1]]}"#).unwrap();
    let out = contagion(&["graph", "inspect", path_str(&graph)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_inputs_are_usage_errors() {
    assert_eq!(contagion(&["graph", "inspect", "/nonexistent/graph.json"]).status.code(), Some(2));
    assert_eq!(contagion(&["graph", "generate", "chain"]).status.code(), Some(2));
    assert_eq!(contagion(&["centrality", "--graph", "chain:3", "--bogus"]).status.code(), Some(2));
}

#[test]
fn infeasible_preemptive_equalization_exits_three() {
    let mut args = vec!["lp", "equalize", "--mode", "preemptive", "--rho", "1"];
    args.extend(CHAIN_LP);
    let out = contagion(&args);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).starts_with("infeasible"));
}

#[test]
fn precision_equalization_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--out", path_str(dir.path()), "lp", "equalize", "--mode", "precision", "--rho", "1"];
    args.extend(CHAIN_LP);
    let out = contagion(&args);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("feasible: common risk 0.2363636"));
    for name in ["matrix.csv", "strategy.json", "strategy.csv", "risk.csv", "meta.json"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let risk = std::fs::read_to_string(dir.path().join("risk.csv")).unwrap();
    assert_eq!(risk.lines().count(), 12);
}

#[test]
fn zero_transmission_preemptive_equalization_is_feasible() {
    let out = contagion(&["lp", "equalize", "--mode", "preemptive", "--graph", "chain:11", "--tau", "0", "--rho", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("feasible"));
}

fn write_config(dir: &Path, graph: &str) -> std::path::PathBuf {
    let cfg = format!(
        r#"{{
  "graph": {graph},
  "params": {{"tau": 0.5, "rho": 0.5, "treatments_per_step": 1, "horizon": 20, "initial_infection": "uniform_random_single"}},
  "policy": {{"kind": "centrality", "measure": "degree"}},
  "runs": 300,
  "base_seed": 9,
  "metrics": ["communities"]
}}"#
    );
    let path = dir.join("experiment.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "karate"}"#);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = contagion(&["--out", path_str(&out_dir), "experiment", path_str(&cfg)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for name in ["report.csv", "runs.csv", "centrality.csv", "terciles.csv", "meta.json"] {
            assert!(out_dir.join(name).exists(), "{name} missing");
        }
        reports.push(std::fs::read(out_dir.join("report.csv")).unwrap());
        assert_eq!(
            std::fs::read(out_dir.join("runs.csv")).unwrap(),
            std::fs::read(dir.path().join("a/runs.csv")).unwrap()
        );
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(String::from_utf8(reports[0].clone()).unwrap().lines().count(), 35);
}

#[test]
fn experiment_with_missing_graph_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"kind": "file", "path": "absent.json"}"#);
    let out = contagion(&["--out", path_str(&dir.path().join("o")), "experiment", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_and_csv_formats_carry_the_same_values() {
    let csv = stdout(&contagion(&["centrality", "--graph", "barbell:3,5"]));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&contagion(&["--format", "json", "centrality", "--graph", "barbell:3,5"])))
            .unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (v, line) in lines.enumerate() {
        for (col, cell) in header.iter().zip(line.split(',')).skip(1) {
            let from_json = json[col][v].as_f64().unwrap();
            assert_eq!(cell.parse::<f64>().unwrap(), from_json, "{col} node {v}");
        }
    }
}

#[test]
fn simulation_is_reproducible_from_the_seed() {
    let args = ["--seed", "5", "--format", "json", "simulate", "--graph", "karate", "--policy", "degree"];
    let a = contagion(&args);
    let b = contagion(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn trained_network_can_drive_a_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("train.json");
    std::fs::write(&config, r#"{"hidden": 8, "iterations": 3, "steps_per_iteration": 100, "warmup": 50}"#).unwrap();
    let out = contagion(&[
        "--out",
        path_str(dir.path()),
        "rl",
        "train",
        "--graph",
        "star:4",
        "--config",
        path_str(&config),
        "--eval-episodes",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let curve = std::fs::read_to_string(dir.path().join("learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    let policy = format!("dqn:{}", path_str(&dir.path().join("weights.json")));
    let sim = contagion(&["simulate", "--graph", "star:4", "--policy", &policy]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let wrong = contagion(&["simulate", "--graph", "star:5", "--policy", &policy]);
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn exact_optimum_beats_greedy_on_small_graphs() {
    let value = |o: Output| -> f64 {
        let text = stdout(&o);
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        json["expected_sick_days"].as_f64().unwrap()
    };
    let common = ["--graph", "chain:6", "--seeds", "2", "--budget", "1"];
    let mut greedy = vec!["--format", "json", "exact", "eval", "--policy", "greedy"];
    greedy.extend(common);
    let mut optimal = vec!["--format", "json", "exact", "optimal"];
    optimal.extend(common);
    assert!(value(contagion(&optimal)) <= value(contagion(&greedy)) + 1e-12);
}
