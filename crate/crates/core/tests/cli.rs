//! End-to-end runs of the `quack` binary and of the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quack::experiments::{parse_aggregate_csv, parse_trace_csv, run_experiment, ExperimentConfig};

fn quack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quack")).args(args).output().unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
[topology]
kind = "cycle"
m = 6

[env]
kind = "bernoulli"
means = [0.6, 0.5, 0.3]

[algo]
kind = "quack"
policy = "ucb"

[run]
horizon = 300
replications = 2
seed = 9
write_traces = true
"#;

#[test]
fn star_best_leader() {
    let out = quack(&["graph", "--topology", "star", "--m", "9", "--best-leader"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "leader 1, sum 8");
}

#[test]
fn graph_info_for_custom_edges() {
    let edges = configs_dir().join("barbell.txt");
    let out = quack(&["graph", "--topology", "custom", "--m", "10", "--edges", edges.to_str().unwrap(), "--info"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("leader 5, sum 13\n"), "{text}");
    assert!(text.contains("diameter 3"));
}

#[test]
fn run_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out_a = dir.path().join("a");
    let run = quack(&["run", "--config", config.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("invariant violations 0"));

    let csv = std::fs::read_to_string(out_a.join("aggregate.csv")).unwrap();
    let stats = parse_aggregate_csv(&csv).unwrap();
    assert_eq!(stats.rounds(), 300);
    let trace = parse_trace_csv(&std::fs::read_to_string(out_a.join("traces/run1.csv")).unwrap()).unwrap();
    assert_eq!(trace.m, 6);
    assert_eq!(trace.regret.len(), 300);

    let out_b = dir.path().join("b");
    let run = quack(&["run", "--config", config.to_str().unwrap(), "--out", out_b.to_str().unwrap(), "--seed", "10"]);
    assert!(run.status.success());
    assert_ne!(std::fs::read(out_a.join("aggregate.csv")).unwrap(), std::fs::read(out_b.join("aggregate.csv")).unwrap());

    let svg = dir.path().join("both.svg");
    let plot = quack(&[
        "plot",
        "--in",
        out_a.join("aggregate.csv").to_str().unwrap(),
        out_b.join("aggregate.csv").to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains(">a<") && svg.contains(">b<"));
    assert_eq!(svg.matches(r#"class="mean""#).count(), 2);
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, SMALL.replace("horizon = 300", "horizon = \"long\"")).unwrap();
    let out = quack(&["check", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));

    let out = quack(&["check", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(quack(&["run"]).status.code(), Some(2));
}

#[test]
fn check_reports_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_quack"))
        .args(["check", "--config", config.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("invariant violations 0"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn plot_rejects_mismatched_series() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "round,mean_regret,q025,q975\n1,0,0,0\n2,1,1,1\n").unwrap();
    std::fs::write(&b, "round,mean_regret,q025,q975\n1,0,0,0\n").unwrap();
    let out = quack(&["plot", "--in", a.to_str().unwrap(), b.to_str().unwrap(), "--out", dir.path().join("x.svg").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

/// Every shipped config parses and runs in full with a clean invariant report.
#[test]
fn shipped_configs_are_clean() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let result = run_experiment(&cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        if let Some(report) = &result.invariants {
            assert!(report.is_clean(), "{}: {report:?}", path.display());
        }
        assert_eq!(result.stats.runs, cfg.run.replications);
        seen += 1;
    }
    assert_eq!(seen, 10);
}
