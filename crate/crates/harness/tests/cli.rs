use std::path::PathBuf;
use std::process::Command;

fn lfsm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfsm"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn list_scenarios_names_all_nine() {
    let out = lfsm().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = lfsm()
        .args(["run", "--config"])
        .arg(configs().join("mass_identity.json"))
        .args(["--override", "replications=2", "--workers", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("reps.csv").exists());
}

#[test]
fn failed_replication_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = lfsm()
        .args(["run", "--config"])
        .arg(configs().join("mass_identity.json"))
        .args(["--override", "replications=2", "--override", "params.inject_failures=[1]", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL replications_completed"));
}

#[test]
fn bad_config_exits_two() {
    let out = lfsm()
        .args(["validate", "--config"])
        .arg(configs().join("local_time_law.json"))
        .args(["--override", "spec.alpha=1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let missing = lfsm().args(["run", "--config", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn seed_flag_changes_the_hash() {
    let hash = |extra: &[&str]| {
        let out = lfsm()
            .args(["validate", "--config"])
            .arg(configs().join("holder_increments.json"))
            .args(extra)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    assert_ne!(hash(&[]), hash(&["--override", "master_seed=5"]));
}
