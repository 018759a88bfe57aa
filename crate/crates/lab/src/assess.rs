//! Energy assessment sweeps over the Cartesian product of evaluation
//! parameters: moves, payloads, command styles, speed settings and timing
//! profiles.

use std::fs;
use std::path::{Path, PathBuf};

use cobot_energy::export::write_power_trace_csv;
use cobot_energy::fixtures::{self, FixtureMove, MoveGoal};
use cobot_energy::kinematics::forward_kinematics;
use cobot_energy::motion::{plan_movej_sampled, plan_movel_sampled, time_scale, CommandKind, DEFAULT_DT};
use cobot_energy::power::{compute_power_trace, integrate_energy};
use cobot_energy::{RegenPolicy, RobotModel, DOF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::error::{LabError, Result};
use crate::load_robot;

/// A named speed setting; `joint` applies to joint moves (rad/s or
/// rad/s²), `linear` to linear moves (m/s or m/s²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedLevel {
    pub name: String,
    pub joint: f64,
    pub linear: f64,
}

/// Uniform time scaling applied after planning; `time_scale` > 1 slows
/// the move down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub name: String,
    pub time_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweeps {
    #[serde(default)]
    pub moves: Vec<FixtureMove>,
    /// Extra joint moves drawn from the config seed.
    #[serde(default)]
    pub random_moves: usize,
    /// kg
    pub payloads: Vec<f64>,
    pub commands: Vec<CommandKind>,
    pub v_limits: Vec<SpeedLevel>,
    pub a_limits: Vec<SpeedLevel>,
    pub profiles: Vec<Profile>,
}

fn default_seed() -> u64 {
    cobot_energy::strategies::DEFAULT_SEED
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentConfig {
    /// Robot parameter file, relative to the config file, or a built-in
    /// model name.
    pub robot_file: PathBuf,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Planner sample period, s.
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub sweeps: Sweeps,
}

impl AssessmentConfig {
    /// Parses a config file; a relative `robot_file` is resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        let mut config: AssessmentConfig =
            serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        if config.robot_file.is_relative() {
            let candidate = path.parent().unwrap_or(Path::new(".")).join(&config.robot_file);
            if candidate.exists() {
                config.robot_file = candidate;
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sweeps;
        let bad = |m: String| Err(LabError::Config(m));
        if s.moves.is_empty() && s.random_moves == 0 {
            return bad("sweep over moves is empty".into());
        }
        for (name, len) in [
            ("payloads", s.payloads.len()),
            ("commands", s.commands.len()),
            ("v_limits", s.v_limits.len()),
            ("a_limits", s.a_limits.len()),
            ("profiles", s.profiles.len()),
        ] {
            if len == 0 {
                return bad(format!("sweep over {name} is empty"));
            }
        }
        if let Some(m) = s.payloads.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return bad(format!("payload {m} kg is not a non-negative mass"));
        }
        for l in s.v_limits.iter().chain(&s.a_limits) {
            if !(l.joint.is_finite() && l.joint > 0.0 && l.linear.is_finite() && l.linear > 0.0) {
                return bad(format!("speed level {} needs positive limits", l.name));
            }
        }
        if let Some(p) = s
            .profiles
            .iter()
            .find(|p| !(p.time_scale.is_finite() && p.time_scale > 0.0))
        {
            return bad(format!("profile {} needs a positive time scale", p.name));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        Ok(())
    }

    /// All moves of the sweep: the listed ones, then the seeded random ones.
    pub fn moves(&self, model: &RobotModel) -> Vec<FixtureMove> {
        let mut moves = self.sweeps.moves.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let center = fixtures::ur_work_pose();
        let mut draw = || -> [f64; DOF] {
            std::array::from_fn(|j| {
                let lim = &model.limits[j];
                (center[j] + rng.random_range(-0.6..=0.6)).clamp(lim.q_min, lim.q_max)
            })
        };
        for i in 0..self.sweeps.random_moves {
            let start = draw();
            moves.push(FixtureMove {
                name: format!("random-{:02}", i + 1),
                start,
                goal: MoveGoal::Joints(draw()),
            });
        }
        moves
    }

    pub fn product_size(&self) -> usize {
        let s = &self.sweeps;
        (s.moves.len() + s.random_moves)
            * s.payloads.len()
            * s.commands.len()
            * s.v_limits.len()
            * s.a_limits.len()
            * s.profiles.len()
    }
}

/// Parameters of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// 1-based position in the canonical sweep order.
    pub index: usize,
    pub fixture: FixtureMove,
    pub payload: f64,
    pub command: CommandKind,
    pub v_level: SpeedLevel,
    pub a_level: SpeedLevel,
    pub profile: Profile,
}

impl SweepPoint {
    fn limits(&self) -> (f64, f64) {
        match self.command {
            CommandKind::MoveJoint => (self.v_level.joint, self.a_level.joint),
            CommandKind::MoveLinear => (self.v_level.linear, self.a_level.linear),
        }
    }
}

/// Sweep points in canonical order: moves, payloads, commands, velocity
/// levels, acceleration levels, profiles, the last varying fastest.
pub fn sweep_points(config: &AssessmentConfig, model: &RobotModel) -> Vec<SweepPoint> {
    let s = &config.sweeps;
    let mut points = Vec::with_capacity(config.product_size());
    for fixture in config.moves(model) {
        for &payload in &s.payloads {
            for &command in &s.commands {
                for v in &s.v_limits {
                    for a in &s.a_limits {
                        for p in &s.profiles {
                            points.push(SweepPoint {
                                index: points.len() + 1,
                                fixture: fixture.clone(),
                                payload,
                                command,
                                v_level: v.clone(),
                                a_level: a.clone(),
                                profile: p.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    points
}

/// One feasible sweep point with its integrated energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentRow {
    pub index: usize,
    #[serde(rename = "move")]
    pub move_name: String,
    pub payload: f64,
    pub command: CommandKind,
    pub v_level: String,
    pub a_level: String,
    pub profile: String,
    pub v_limit: f64,
    pub a_limit: f64,
    pub time_scale: f64,
    pub duration: f64,
    pub e_grid: f64,
    pub e_mech: f64,
    pub e_copper: f64,
    pub e_friction: f64,
    pub e_baseline: f64,
    pub e_dissipated: f64,
    pub e_reused: f64,
    pub p_peak: f64,
    pub peak_temp: f64,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasiblePoint {
    pub index: usize,
    #[serde(rename = "move")]
    pub move_name: String,
    pub payload: f64,
    pub command: CommandKind,
    pub v_level: String,
    pub a_level: String,
    pub profile: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentTable {
    pub robot: String,
    pub seed: u64,
    pub product_size: usize,
    pub rows: Vec<AssessmentRow>,
    pub infeasible: Vec<InfeasiblePoint>,
}

pub const TABLE_FILE: &str = "assessment.csv";
pub const INFEASIBLE_FILE: &str = "infeasible.csv";
pub const TRACE_DIR: &str = "traces";

fn simulate_point(
    model: &RobotModel,
    point: &SweepPoint,
    dt: f64,
    out_dir: &Path,
) -> std::result::Result<AssessmentRow, String> {
    let fixture = &point.fixture;
    let q0 = fixture.start_vector();
    let q1 = fixture.resolve_goal(model).map_err(|e| format!("goal: {e}"))?;
    let (v, a) = point.limits();
    let planned = match point.command {
        CommandKind::MoveJoint => plan_movej_sampled(model, &q0, &q1, v, a, dt),
        CommandKind::MoveLinear => plan_movel_sampled(model, &q0, &forward_kinematics(model, &q1), v, a, dt),
    }
    .map_err(|e| format!("planning: {e}"))?;
    let k = point.profile.time_scale;
    let traj = time_scale(model, &planned, k).map_err(|e| format!("time scaling: {e}"))?;
    let payload = fixtures::payload(point.payload);
    let trace = compute_power_trace(model, &traj, &payload, RegenPolicy::DissipateAll).map_err(|e| e.to_string())?;
    let report = integrate_energy(&trace).map_err(|e| e.to_string())?;

    let trace_file = format!("{TRACE_DIR}/point-{:04}.csv", point.index);
    let file = fs::File::create(out_dir.join(&trace_file)).map_err(|e| format!("{trace_file}: {e}"))?;
    write_power_trace_csv(std::io::BufWriter::new(file), &traj, &trace).map_err(|e| e.to_string())?;

    Ok(AssessmentRow {
        index: point.index,
        move_name: fixture.name.clone(),
        payload: point.payload,
        command: point.command,
        v_level: point.v_level.name.clone(),
        a_level: point.a_level.name.clone(),
        profile: point.profile.name.clone(),
        v_limit: v,
        a_limit: a,
        time_scale: k,
        duration: report.duration,
        e_grid: report.e_grid,
        e_mech: report.e_mech,
        e_copper: report.e_copper,
        e_friction: report.e_friction,
        e_baseline: report.e_baseline,
        e_dissipated: report.e_dissipated,
        e_reused: report.e_reused,
        p_peak: report.p_peak,
        peak_temp: trace.peak_temperature(),
        trace_file,
    })
}

/// Plans, simulates and integrates every sweep point (in parallel), writes
/// one power-trace CSV per feasible point plus the two tables, and returns
/// the table in canonical order.
pub fn run_assessment(config: &AssessmentConfig, out_dir: &Path) -> Result<AssessmentTable> {
    config.validate()?;
    let model = load_robot(&config.robot_file)?;
    let points = sweep_points(config, &model);
    info!(points = points.len(), robot = %model.name, "sweep size");
    fs::create_dir_all(out_dir.join(TRACE_DIR))?;

    let outcomes: Vec<(SweepPoint, std::result::Result<AssessmentRow, String>)> = points
        .into_par_iter()
        .map(|p| {
            let r = simulate_point(&model, &p, config.dt, out_dir);
            (p, r)
        })
        .collect();

    let mut rows = Vec::new();
    let mut infeasible = Vec::new();
    for (p, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(reason) => {
                warn!(index = p.index, name = %p.fixture.name, command = %p.command, "infeasible: {reason}");
                infeasible.push(InfeasiblePoint {
                    index: p.index,
                    move_name: p.fixture.name,
                    payload: p.payload,
                    command: p.command,
                    v_level: p.v_level.name,
                    a_level: p.a_level.name,
                    profile: p.profile.name,
                    reason,
                });
            }
        }
    }

    write_csv(&out_dir.join(TABLE_FILE), &rows)?;
    write_csv(&out_dir.join(INFEASIBLE_FILE), &infeasible)?;
    let table = AssessmentTable {
        robot: model.name.clone(),
        seed: config.seed,
        product_size: config.product_size(),
        rows,
        infeasible,
    };
    if table.rows.is_empty() {
        return Err(LabError::AllInfeasible {
            points: table.product_size,
        });
    }
    Ok(table)
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a table written by [`run_assessment`].
pub fn read_rows(path: &Path) -> Result<Vec<AssessmentRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
