#![allow(dead_code)]

use std::path::{Path, PathBuf};

use cobot_energy::fixtures::{canonical_moves, FixtureMove};
use cobot_energy::motion::CommandKind;
use lab_cli::assess::{Profile, SpeedLevel, Sweeps};
use lab_cli::AssessmentConfig;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn level(name: &str, joint: f64, linear: f64) -> SpeedLevel {
    SpeedLevel {
        name: name.into(),
        joint,
        linear,
    }
}

pub fn fast() -> SpeedLevel {
    level("fast", 3.2, 1.0)
}

pub fn fast_accel() -> SpeedLevel {
    level("fast", 14.0, 5.0)
}

pub fn nominal() -> Profile {
    Profile {
        name: "nominal".into(),
        time_scale: 1.0,
    }
}

pub fn canonical(name: &str) -> FixtureMove {
    canonical_moves().into_iter().find(|m| m.name == name).unwrap()
}

/// One move, one payload, joint command, fast limits, nominal profile.
pub fn single_point(robot: &str, mv: FixtureMove) -> AssessmentConfig {
    AssessmentConfig {
        robot_file: robot.into(),
        output_dir: None,
        seed: 42,
        dt: 0.002,
        sweeps: Sweeps {
            moves: vec![mv],
            random_moves: 0,
            payloads: vec![0.0],
            commands: vec![CommandKind::MoveJoint],
            v_limits: vec![fast()],
            a_limits: vec![fast_accel()],
            profiles: vec![nominal()],
        },
    }
}

/// Every file under `dir`, relative path and contents, sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}
