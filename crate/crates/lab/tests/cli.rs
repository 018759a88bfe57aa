mod common;

use std::path::Path;
use std::process::{Command, Output};

use quiz_service::SceneFile;
use serde_json::Value;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .env("LAB_LOG", "warn")
        .output()
        .expect("lab binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn assess_writes_table_traces_and_report() {
    let out = tempfile::tempdir().unwrap();
    let config = common::fixture("quick.json");
    let o = lab(&["assess", "--config", path(&config), "--out", path(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "assessment.csv",
        "infeasible.csv",
        "report.json",
        "ec_vs_time.csv",
        "traces",
    ] {
        assert!(out.path().join(f).exists(), "{f} missing");
    }

    let again = tempfile::tempdir().unwrap();
    let o = lab(&[
        "report",
        path(&out.path().join("assessment.csv")),
        "--out",
        path(again.path()),
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(out.path().join("report.json")).unwrap(),
        std::fs::read(again.path().join("report.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = lab(&["assess", "--config", path(&missing), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));

    let mut config = common::single_point("ur10e-like", common::canonical("vertical-lift"));
    config.sweeps.payloads.clear();
    let file = dir.path().join("empty.json");
    std::fs::write(&file, serde_json::to_string(&config).unwrap()).unwrap();
    let o = lab(&["assess", "--config", path(&file), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("payloads"));

    // No --out and no output_dir in the file.
    let ok = common::single_point("ur10e-like", common::canonical("vertical-lift"));
    let file = dir.path().join("no-out.json");
    std::fs::write(&file, serde_json::to_string(&ok).unwrap()).unwrap();
    assert_eq!(lab(&["assess", "--config", path(&file)]).status.code(), Some(2));
}

#[test]
fn all_infeasible_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut mv = common::canonical("vertical-lift");
    mv.goal = cobot_energy::fixtures::MoveGoal::CartesianOffset([0.0, 0.0, 10.0]);
    let file = dir.path().join("far.json");
    std::fs::write(
        &file,
        serde_json::to_string(&common::single_point("ur10e-like", mv)).unwrap(),
    )
    .unwrap();
    let o = lab(&[
        "assess",
        "--config",
        path(&file),
        "--out",
        path(&dir.path().join("out")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn optimize_emits_versioned_documents() {
    let dir = tempfile::tempdir().unwrap();
    let robot = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/robots/ur10e-like.json");
    for strategy in ["command", "time", "saturate"] {
        let out = dir.path().join(format!("{strategy}.json"));
        let o = lab(&["optimize", strategy, "--robot", path(&robot), "--out", path(&out)]);
        assert!(o.status.success(), "{strategy}: {}", String::from_utf8_lossy(&o.stderr));
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["strategy"], strategy);
        assert_eq!(doc["robot"], "ur10e-like");
    }
    let o = lab(&["optimize", "command", "--robot", "no-such-robot"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(&["optimize", "teleport"]);
    assert!(!o.status.success());
}

#[test]
fn scenes_generate_writes_a_valid_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scenes.json");
    let o = lab(&["scenes", "generate", "--seed", "42", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file = SceneFile::load(&out).unwrap();
    assert_eq!(file.seed, 42);
    assert_eq!(file.scenes.len(), quiz_service::generate::SCENE_COUNT);
}
