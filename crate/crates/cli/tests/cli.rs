use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delaykinetic"))
}

fn run(dir: &Path, name: &str, config: &Value) -> Output {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, config.to_string()).unwrap();
    bin()
        .args(["run", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.join(name))
        .output()
        .unwrap()
}

fn base(mode: &str, model: Value) -> Value {
    json!({
        "mode": mode,
        "model": model,
        "dim": 1, "tau": 1.0, "dt": 0.1, "horizon": 1.0,
        "initial": {"source": "sample", "sampler": {"kind": "affine", "radius": 1.0}, "n": 5, "seed": 9}
    })
}

fn error_record(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap()
}

#[test]
fn zero_kernel_gives_constant_continuations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "sim", &base("simulate", json!({"kernel": "zero"})));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("sim/trajectories.csv")).unwrap();
    let mut finals = std::collections::BTreeMap::new();
    let mut starts = std::collections::BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (t, id, x): (f64, usize, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        if t == 0.0 {
            starts.insert(id, x);
        }
        if t > 0.0 {
            finals.insert(id, x);
        }
    }
    assert_eq!(starts.len(), 5);
    assert_eq!(starts, finals);
}

#[test]
fn coherence_mode_on_the_linear_model() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "coh", &base("coherence", json!({"kernel": "linear_attraction"})));
    assert!(out.status.success());
    let summary: Value = serde_json::from_slice(&std::fs::read(tmp.path().join("coh/summary.json")).unwrap()).unwrap();
    assert!(summary["max_gap"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["seed"], 9);
}

#[test]
fn invalid_step_exits_with_config_status() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base("simulate", json!({"kernel": "zero"}));
    cfg["tau"] = json!(0.25);
    cfg["dt"] = json!(0.1);
    let out = run(tmp.path(), "bad", &cfg);
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "config");
    assert!(rec["message"].as_str().unwrap().contains("tau/dt"));

    cfg = base("simulate", json!({"kernel": "zero"}));
    cfg["unknown"] = json!(true);
    assert_eq!(run(tmp.path(), "unknown", &cfg).status.code(), Some(2));
}

#[test]
fn overflowing_drift_exits_with_divergence_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), "div", &base("simulate", json!({"kernel": "constant", "velocity": [1e308]})));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"], "divergence");
}

#[test]
fn exhausted_picard_budget_exits_with_non_convergence_status() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base("meanfield", json!({"kernel": "linear_attraction"}));
    cfg["picard"] = json!({"tol": 1e-300, "max_iters": 2});
    let out = run(tmp.path(), "nc", &cfg);
    assert_eq!(out.status.code(), Some(4));
    let rec = error_record(&out);
    assert_eq!(rec["error"], "non_convergence");
    assert_eq!(rec["iterations"], 2);
}

#[test]
fn describe_models_is_sorted_and_stable() {
    let a = bin().arg("describe-models").output().unwrap();
    let b = bin().arg("describe-models").output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert!(names.contains(&"pure_delay_linear"));
    let pheromone = text.split("pheromone\n").nth(1).unwrap();
    assert!(pheromone.contains("decay"));
}

#[test]
fn initial_paths_round_trip_through_a_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let first = run(tmp.path(), "a", &base("simulate", json!({"kernel": "linear_attraction"})));
    assert!(first.status.success());
    let mut cfg = base("simulate", json!({"kernel": "linear_attraction"}));
    cfg["initial"] = json!({"source": "directory", "path": "a/initial"});
    let second = run(tmp.path(), "b", &cfg);
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("trajectories.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let cfg = delaykinetic_cli::config::ExperimentConfig::from_json(&text).unwrap();
        cfg.prepare(&dir).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
