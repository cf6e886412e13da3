use std::fs;
use std::path::PathBuf;

use lfsm_harness::{read_reps_csv, recompute, run_experiment, ExperimentConfig, Scenario};

fn config(scenario: Scenario, overrides: &[&str]) -> ExperimentConfig {
    let base = ExperimentConfig::default_for(scenario).canonical_json();
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_json_str(&base, &overrides).unwrap()
}

#[test]
fn injected_failure_is_recorded_and_the_rest_complete() {
    let cfg = config(Scenario::LocalTimeLaw, &["replications=3", "params.inject_failures=[2]"]);
    let report = run_experiment(&cfg, 2).unwrap();
    let s = &report.summary;
    assert_eq!((s.replications, s.successes), (3, 2));
    assert_eq!(s.failures.len(), 1);
    assert_eq!(s.failures[0].rep, 2);
    assert!(s.failures[0].message.contains("injected"));
    assert!(!report.verdict("replications_completed").unwrap().pass);
    assert!(!s.pass);
    assert!(report.records[0].is_ok() && report.records[1].is_ok());
}

#[test]
fn single_replication_mass_identity_passes() {
    let report = run_experiment(&config(Scenario::MassIdentity, &["replications=1"]), 1).unwrap();
    assert!(report.summary.pass, "{:?}", report.summary.verdicts);
}

#[test]
fn rerun_gives_identical_records() {
    let cfg = config(Scenario::SupportCoverage, &["replications=6", "n_ladder=[4096]"]);
    let a = run_experiment(&cfg, 1).unwrap();
    let b = run_experiment(&cfg, 3).unwrap();
    assert_eq!(a.reps_csv(), b.reps_csv());
    assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
}

#[test]
fn summary_is_recomputable_from_the_csv_alone() {
    for (scenario, overrides) in [
        (Scenario::HolderIncrements, &["replications=200", "n_ladder=[4096]"][..]),
        (Scenario::ZeroEnergyScaling, &["replications=20", "n_ladder=[1024,2048,4096]"][..]),
        (Scenario::DecompositionIdentity, &["replications=10", "n_ladder=[8]", "params.compute_v=true"][..]),
        (Scenario::LfsmSanity, &["replications=50", "params.inject_failures=[3]"][..]),
    ] {
        let cfg = config(scenario, overrides);
        let report = run_experiment(&cfg, 1).unwrap();
        let records = read_reps_csv(&report.reps_csv()).unwrap();
        assert_eq!(records, report.records, "{scenario:?}");
        let again = recompute(&cfg, records).unwrap();
        assert_eq!(again.summary_json().unwrap(), report.summary_json().unwrap(), "{scenario:?}");
    }
}

#[test]
fn written_outputs_carry_the_config_hash() {
    let cfg = config(Scenario::NormInequalities, &[]);
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, 1).unwrap().write(dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("reps.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# config_hash={}", cfg.hash()));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config_hash"], cfg.hash());
    assert_eq!(summary["master_seed"], cfg.master_seed);
    assert!(dir.path().join("plots/triangular_shift_norms.csv").exists());
    assert!(dir.path().join("plots/triangular_shift_norms.meta.json").exists());
}

#[test]
fn output_directory_does_not_change_the_hash() {
    let a = config(Scenario::MassIdentity, &[]);
    let mut b = a.clone();
    b.output = Some(PathBuf::from("elsewhere"));
    assert_eq!(a.hash(), b.hash());
    let c = config(Scenario::MassIdentity, &["master_seed=1"]);
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn shipped_configs_are_valid_and_match_the_defaults() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for scenario in Scenario::ALL {
        let path = dir.join(format!("{}.json", scenario.name()));
        let cfg = ExperimentConfig::load(&path, &[]).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.hash(), ExperimentConfig::default_for(scenario).hash(), "{}", path.display());
    }
}

#[test]
fn invalid_configs_report_every_violation() {
    let base = ExperimentConfig::default_for(Scenario::LocalTimeLaw).canonical_json();
    let err = ExperimentConfig::from_json_str(&base, &["replications=0".into(), "n_ladder=[5,3]".into()])
        .and_then(|c| c.validate())
        .unwrap_err();
    assert!(err.is_config());
    let msg = err.to_string();
    assert!(msg.contains("replications") && msg.contains("n_ladder"), "{msg}");
    let unknown = ExperimentConfig::from_json_str(&base, &["params.bandwidth.width=2".into()]).unwrap_err();
    assert!(unknown.is_config());
}
