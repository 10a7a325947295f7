use std::path::Path;
use std::process::Command;

use fedauct::harness::{self, ledger_io, ExperimentConfig};
use fedauct::reputation::ReputationLedger;
use fedauct::WorkerId;

const SMALL_TASK: &str = r#""task": {"train_size_per_worker": 200, "validation_size": 500, "test_size": 500, "rounds": 2}"#;

fn small_multitask(tasks: usize) -> String {
    format!(
        r#"{{"kind": "multi_task", "tasks": {tasks}, "discard": 1, "mechanisms": ["ours", "bid_greedy"],
            "groups": [{{"accuracy": 1.0, "count": 4}}, {{"accuracy": 0.4, "count": 2}}], {SMALL_TASK}}}"#
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedauct"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn experiments_are_byte_identical_on_rerun() {
    for text in [
        small_multitask(3),
        r#"{"kind": "auction_sweep_workers", "worker_counts": [10, 30], "repetitions": 4}"#
            .to_string(),
        format!(r#"{{"kind": "contribution_case2", "case_local_epochs": 2, {SMALL_TASK}}}"#),
    ] {
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let a = harness::run_experiment(&cfg)
            .unwrap()
            .to_csv_string()
            .unwrap();
        let b = harness::run_experiment(&cfg)
            .unwrap()
            .to_csv_string()
            .unwrap();
        assert_eq!(a, b);
        assert!(a.lines().count() > 1);
    }
}

#[test]
fn different_seeds_give_different_sweeps() {
    let mut cfg = ExperimentConfig::from_json(
        r#"{"kind": "auction_sweep_budget", "budgets": [30], "repetitions": 3}"#,
    )
    .unwrap();
    let a = harness::run_experiment(&cfg).unwrap();
    cfg.seed = 99;
    let b = harness::run_experiment(&cfg).unwrap();
    assert_ne!(a.rows()[0].value, b.rows()[0].value);
    assert!(b.rows().iter().all(|r| r.seed == 99));
}

#[test]
fn case1_reports_each_accuracy_for_both_methods() {
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"kind": "contribution_case1", "case_local_epochs": 2, {SMALL_TASK}}}"#
    ))
    .unwrap();
    let t = harness::run_experiment(&cfg).unwrap();
    assert_eq!(t.len(), 20);
    assert!(t
        .rows()
        .iter()
        .all(|r| r.metric == "contribution" && r.x_name == "data_accuracy"));
    assert!(t.value("ours", "contribution", Some(0.4)).is_some());
}

#[test]
fn fresh_ledger_of_thirty_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ledger.txt");
    let l = ReputationLedger::<f64>::with_workers((0..30).map(WorkerId), 0.5);
    ledger_io::write_ledger(&p, &l).unwrap();
    assert_eq!(ledger_io::read_ledger::<f64>(&p).unwrap(), l);
    assert!(ledger_io::read_ledger::<f64>(&dir.path().join("absent"))
        .unwrap()
        .is_empty());
    std::fs::write(&p, "").unwrap();
    assert!(ledger_io::read_ledger::<f64>(&p).unwrap().is_empty());
}

#[test]
fn cli_sweep_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "auction_sweep_budget", "budgets": [40], "mechanisms": ["ours"], "repetitions": 1}"#,
    );
    let out = dir.path().join("o.csv");
    let st = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "experiment_id,mechanism,x_name,x_value,metric,value,seed"
    );
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("auction_sweep_budget,ours,budget,40.0,unit_utility,"));
}

#[test]
fn cli_flags_and_env_override_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind": "auction_sweep_budget", "workers": 12, "seed": 1}"#,
    );
    let run = |extra: &[&str], env: Option<&str>| {
        let out = dir.path().join("a.csv");
        let mut cmd = bin();
        cmd.args(["auction", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(extra);
        match env {
            Some(v) => cmd.env(harness::SEED_ENV, v),
            None => cmd.env_remove(harness::SEED_ENV),
        };
        assert!(cmd.status().unwrap().success());
        std::fs::read_to_string(&out).unwrap()
    };
    let base = run(&[], None);
    assert!(base.lines().nth(1).unwrap().ends_with(",1"));
    assert!(run(&[], Some("7")).lines().nth(1).unwrap().ends_with(",7"));
    assert!(run(&["--seed", "8"], Some("7"))
        .lines()
        .nth(1)
        .unwrap()
        .ends_with(",8"));
    let with_budget = run(&["--budget", "9.5"], None);
    assert!(with_budget.contains(",budget,9.5,total_payment,"));
}

#[test]
fn cli_config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"kind": "auction_sweep_budget", "mechanisms": []}"#,
    );
    for cfg in [bad, dir.path().join("missing.json")] {
        let st = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(1));
    }
    let good = write(
        dir.path(),
        "good.json",
        r#"{"kind": "auction_sweep_budget"}"#,
    );
    let st = bin()
        .args(["sweep", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(&out)
        .env(harness::SEED_ENV, "not-a-number")
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn cli_properties_passes_on_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"kind": "property_suite", "properties": {"budget_instances": 200, "ir_instances": 200,
            "truthfulness_instances": 50, "measure_complexity": false}}"#,
    );
    let out = dir.path().join("p.csv");
    let st = bin()
        .args(["properties", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("budget_feasibility_violations,0.0"));
    assert!(text.contains("truthfulness_violations,0.0"));
}

#[test]
fn cli_simulate_resumes_from_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "m.json", &small_multitask(2));
    let ledger = dir.path().join("ledger.txt");
    let out = dir.path().join("o.csv");
    for _ in 0..2 {
        let st = bin()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--ledger")
            .arg(&ledger)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let l = ledger_io::read_ledger::<f64>(&ledger).unwrap();
    assert_eq!(l.len(), 6);
    let tasks: std::collections::BTreeSet<u64> = l
        .records
        .values()
        .flat_map(|r| r.history.iter().map(|h| h.task))
        .collect();
    assert_eq!(tasks.iter().max(), Some(&3));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(",task,2.0,task_final_loss,"));
    assert!(text.contains(",task,3.0,task_final_loss,"));
}

#[test]
fn simulate_rejects_other_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_json(r#"{"kind": "auction_sweep_budget"}"#).unwrap();
    assert!(harness::simulate_with_ledger(&cfg, &dir.path().join("l")).is_err());
}
