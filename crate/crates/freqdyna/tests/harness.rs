use std::path::Path;
use std::process::Command;

use freqdyna::config::{Agent, EnvName, ExperimentConfig, ExperimentKind, RegressBias};
use freqdyna::formats::{read_metrics, read_params_bin, read_queue_snapshot, METRIC_COLUMNS};
use freqdyna::harness::{read_aggregate, run_experiment};

fn small_rl(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        exp: ExperimentKind::Rl,
        env: EnvName::Maze,
        agent: Agent::DynaFrequency,
        d: 1,
        m: 5,
        seeds: vec![0, 1],
        steps: 1200,
        warmup: 1000,
        snapshot_steps: vec![1200],
        out: out.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn empty_seed_list_gives_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig { seeds: vec![], ..small_rl(dir.path()) };
    let outcome = run_experiment(&cfg).unwrap();
    assert!(outcome.records.is_empty());
    assert!(outcome.aggregate_path.is_none());
}

#[test]
fn seeds_write_distinct_files_with_one_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_rl(dir.path());
    let outcome = run_experiment(&cfg).unwrap();
    assert_eq!(outcome.records.len(), 2);
    assert!(outcome.records.iter().all(|r| r.completed()));
    let (a, b) = (&outcome.records[0].metric_path, &outcome.records[1].metric_path);
    assert_ne!(a, b);
    for path in [a, b] {
        let header = std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, METRIC_COLUMNS.join(","));
        assert!(!read_metrics(path).unwrap().is_empty());
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let queue = read_queue_snapshot(&dir.path().join(format!("{stem}_queue_step1200.csv"))).unwrap();
        assert!(!queue.is_empty());
        let net = read_params_bin(&dir.path().join(format!("{stem}_qnet.bin"))).unwrap();
        assert_eq!(net.layer_sizes(), vec![2, 64, 64, 4]);
    }
    let agg = read_aggregate(outcome.aggregate_path.as_ref().unwrap()).unwrap();
    assert_eq!(agg.runs.len(), 2);
    assert_eq!(agg.buckets.len(), 1);
    assert_eq!(agg.buckets[0].step, 1000);
}

#[test]
fn reruns_reproduce_every_file() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = run_experiment(&small_rl(d1.path())).unwrap();
    let b = run_experiment(&small_rl(d2.path())).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 2 * 3 + 1);
    for name in names {
        let x = std::fs::read(d1.path().join(&name)).unwrap();
        let y = std::fs::read(d2.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    assert_eq!(a.aggregate_path.unwrap().file_name(), b.aggregate_path.unwrap().file_name());
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg = ExperimentConfig { beta: 2.0, ..small_rl(&out) };
    assert!(run_experiment(&cfg).is_err());
    assert!(!out.exists());
}

#[test]
fn regression_runs_write_learning_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        exp: ExperimentKind::Regress,
        bias: RegressBias::High,
        seeds: vec![3, 4],
        steps: 100,
        out: dir.path().to_path_buf(),
        ..Default::default()
    };
    let outcome = run_experiment(&cfg).unwrap();
    let agg = read_aggregate(outcome.aggregate_path.as_ref().unwrap()).unwrap();
    assert_eq!(agg.metric, "test_rmse");
    assert_eq!(agg.buckets.len(), 6);
    assert_eq!(agg.final_value.per_run.len(), 2);
    let text = std::fs::read_to_string(&outcome.records[0].metric_path).unwrap();
    assert!(text.starts_with("iteration,test_rmse\n0,"));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_freqdyna"))
}

#[test]
fn cli_rl_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let status = cli()
        .args(["rl", "--env", "maze", "--agent", "dyna-value", "--d", "1", "--m", "5", "--seeds", "0..2"])
        .args(["--steps", "1100", "--warmup", "1000", "--snapshot-steps", "1100", "--out", out])
        .status()
        .unwrap();
    assert!(status.success());
    let mut queues = Vec::new();
    let mut metrics = Vec::new();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        if name.contains("_queue_step") {
            queues.push(p);
        } else if name.ends_with(".csv") {
            metrics.push(p);
        }
    }
    assert_eq!((queues.len(), metrics.len()), (2, 2));
    let output = cli()
        .arg("stats")
        .arg("--queue")
        .args(&queues)
        .arg("--curves")
        .args(&metrics)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["queue_ball_fraction"].as_array().unwrap().len(), 2);
    let f = v["queue_ball_fraction"][0]["fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f));
    assert_eq!(v["curve_aggregate"][0]["runs"], 2);
}

#[test]
fn cli_rejects_bad_values() {
    let out = cli().args(["rl", "--agent", "dyna-magic"]).output().unwrap();
    assert!(!out.status.success());
    let out = cli().args(["rl", "--d", "0", "--out", "/nonexistent/x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cli().args(["regress", "--exp", "rl"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"exp": "regress", "bias": "grad-norm", "steps": 40, "seeds": [1]}"#).unwrap();
    let out = dir.path().join("out");
    let status = cli()
        .args(["regress", "--config", cfg_path.to_str().unwrap(), "--steps", "20", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(files.len(), 2);
    let csv = files.iter().find(|f| f.to_string_lossy().starts_with("regress_grad-norm_seed1_")).unwrap();
    let text = std::fs::read_to_string(out.join(csv)).unwrap();
    assert_eq!(text.lines().count(), 1 + 2);
}
