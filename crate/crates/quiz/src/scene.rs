//! Scene file format: ten multiple-choice questions, each carrying the
//! simulated trajectory and power trace of every option.

use std::path::Path;

use cobot_energy::kinematics::{forward_kinematics, joint_positions};
use cobot_energy::power::{compute_power_trace, integrate_energy};
use cobot_energy::{MotionCommand, Payload, PowerTrace, RegenPolicy, RobotModel, Trajectory, DOF};
use serde::{Deserialize, Serialize};

use crate::error::{QuizError, Result};
use crate::SCHEMA_VERSION;

/// Every scene's data comes from the simulator, not from a recorded robot.
pub const DATA_SOURCE: &str = "simulated";

/// One playback frame per this many trajectory samples.
pub const FRAME_STRIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    Standby,
    CommandChoice,
    MotionTime,
    Saturation,
}

impl Technique {
    pub const ALL: [Technique; 4] = [
        Technique::Standby,
        Technique::CommandChoice,
        Technique::MotionTime,
        Technique::Saturation,
    ];
}

/// Base and joint-origin positions of the arm at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmFrame {
    pub t: f64,
    pub points: [[f64; 3]; DOF + 1],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramOption {
    pub label: String,
    pub description: String,
    pub commands: Vec<MotionCommand>,
    pub trajectory: Trajectory,
    pub trace: PowerTrace,
    /// J
    pub e_grid: f64,
    /// Flange position at every trajectory sample.
    pub path_polyline: Vec<[f64; 3]>,
    pub frames: Vec<ArmFrame>,
}

impl ProgramOption {
    /// Simulates `trajectory` and derives the energy, path and playback data.
    pub fn simulate(
        model: &RobotModel,
        payload: &Payload,
        label: impl Into<String>,
        description: impl Into<String>,
        commands: Vec<MotionCommand>,
        trajectory: Trajectory,
    ) -> Result<Self> {
        let trace = compute_power_trace(model, &trajectory, payload, RegenPolicy::DissipateAll)?;
        let e_grid = integrate_energy(&trace)?.e_grid;
        let path_polyline = trajectory
            .samples
            .iter()
            .map(|s| forward_kinematics(model, &s.q).position.into())
            .collect();
        let last = trajectory.samples.len() - 1;
        let frames = trajectory
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| i % FRAME_STRIDE == 0 || *i == last)
            .map(|(_, s)| ArmFrame {
                t: s.t,
                points: joint_positions(model, &s.q).map(Into::into),
            })
            .collect();
        Ok(Self {
            label: label.into(),
            description: description.into(),
            commands,
            trajectory,
            trace,
            e_grid,
            path_polyline,
            frames,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizScene {
    pub id: String,
    pub technique: Technique,
    pub robot_variant: String,
    pub payload: Payload,
    pub title: String,
    pub prompt: String,
    pub data_source: String,
    pub options: Vec<ProgramOption>,
    pub correct_index: usize,
    pub theory_text: String,
}

impl QuizScene {
    pub fn energies(&self) -> Vec<f64> {
        self.options.iter().map(|o| o.e_grid).collect()
    }
}

/// Index of the smallest value and the relative gap to the runner-up,
/// `(second − best) / best`.
pub fn argmin_with_gap(values: &[f64]) -> Option<(usize, f64)> {
    let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b]))?;
    let second = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != best)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    Some((best, (second - values[best]) / values[best]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub schema_version: u32,
    pub seed: u64,
    /// Parameter sets the scenes were simulated with.
    pub robots: Vec<RobotModel>,
    pub scenes: Vec<QuizScene>,
}

impl SceneFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn scene(&self, id: &str) -> Option<&QuizScene> {
        self.scenes.iter().find(|s| s.id == id)
    }

    pub fn robot(&self, name: &str) -> Option<&RobotModel> {
        self.robots.iter().find(|r| r.name == name)
    }

    /// Structural checks: schema, unique ids, option counts, and that the
    /// stored answer is the unique argmin of the stored energies.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(QuizError::InvalidScenes(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} not supported", self.schema_version));
        }
        if self.scenes.is_empty() {
            return bad("no scenes".into());
        }
        let mut ids = std::collections::HashSet::new();
        for s in &self.scenes {
            if !ids.insert(s.id.as_str()) {
                return bad(format!("duplicate scene id {}", s.id));
            }
            if !(2..=3).contains(&s.options.len()) {
                return bad(format!("scene {} has {} options", s.id, s.options.len()));
            }
            if self.robot(&s.robot_variant).is_none() {
                return bad(format!("scene {} uses unknown robot {}", s.id, s.robot_variant));
            }
            match argmin_with_gap(&s.energies()) {
                Some((best, gap)) if best == s.correct_index && gap > 0.0 => {}
                _ => return bad(format!("scene {} correct_index is not the unique minimum", s.id)),
            }
        }
        Ok(())
    }
}
