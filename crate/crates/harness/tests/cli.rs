mod common;

use std::path::Path;
use std::process::{Command, Output};

fn mssvdd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mssvdd")).args(args).current_dir(cwd).output().unwrap()
}

const ROBOT_CONFIG: &str = r#"
[dataset]
kind = "robot"
path = "robot.data"
problem = "LP1"

[grids]
variants = ["linear"]
omegas = ["w2"]
strategies = ["ds1", "ds3"]
c = [0.2]
beta = [0.1]
d = [2]
eta = [0.03]

[protocol]
repeats = 1
cv_k = 3
max_iter = 5

[output]
dir = "run"
"#;

#[test]
fn train_report_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    common::write(&dir.path().join("robot.data"), &common::robot_text(20, 20, 1));
    common::write(&dir.path().join("exp.toml"), ROBOT_CONFIG);

    let out = mssvdd(&["train", "--config", "exp.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("## LP1"));
    for f in ["summary.md", "summary.csv", "splits.csv", "results.json", "models/ms-svdd-linear-w2-ds3.msvd"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }

    let out = mssvdd(&["report", "--runs", "run", "--format", "csv"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("dataset,method"));

    common::write(&dir.path().join("probe.data"), &common::robot_text(3, 3, 2));
    let out = mssvdd(
        &["evaluate", "--model", "run/models/ms-svdd-linear-w2-ds3.msvd", "--data", "probe.data"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["items"], 6);
    assert_eq!(v["strategy"], "DS3");

    let out = mssvdd(&["grid", "--config", "exp.toml"], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("run/grid.json").exists());
}

#[test]
fn exit_codes_separate_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    common::write(&dir.path().join("unknown.toml"), "[dataset]\nkind = \"robot\"\ncolour = 1\n");
    assert_eq!(mssvdd(&["train", "--config", "unknown.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(mssvdd(&["train", "--config", "absent.toml"], dir.path()).status.code(), Some(2));
    assert_eq!(mssvdd(&["report", "--runs", ".", "--format", "pdf"], dir.path()).status.code(), Some(2));

    common::write(&dir.path().join("exp.toml"), ROBOT_CONFIG);
    assert_eq!(mssvdd(&["train", "--config", "exp.toml"], dir.path()).status.code(), Some(3));
    common::write(&dir.path().join("robot.data"), "normal\n1 2 3\n");
    assert_eq!(mssvdd(&["train", "--config", "exp.toml"], dir.path()).status.code(), Some(3));

    common::write(&dir.path().join("junk.msvd"), "not a model");
    common::write(&dir.path().join("probe.data"), &common::robot_text(2, 2, 3));
    let out = mssvdd(&["evaluate", "--model", "junk.msvd", "--data", "probe.data"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}
