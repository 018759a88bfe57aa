//! Single strategy runs on the fixture programs, reported as one JSON
//! document each.

use cobot_energy::fixtures::{self, DESCENT_PAYLOAD};
use cobot_energy::power::compute_power_trace;
use cobot_energy::strategies::{
    optimal_motion_time, optimal_standby_with, saturate_power, select_command, StandbyConstraint, StandbyOptions,
};
use cobot_energy::{RegenPolicy, RobotModel, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Standby,
    Command,
    Time,
    Saturate,
}

impl Strategy {
    /// Payload used when none is given, kg.
    pub fn default_payload(self) -> f64 {
        match self {
            Strategy::Standby | Strategy::Command => 0.0,
            Strategy::Time | Strategy::Saturate => DESCENT_PAYLOAD,
        }
    }
}

/// Range of time scales searched by the motion-time strategy.
pub const K_RANGE: (f64, f64) = (1.0, 6.0);

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeRequest {
    pub strategy: Strategy,
    pub payload: Option<f64>,
    pub seed: u64,
    /// Standby only: keep the tool within this distance of the start, m.
    pub tcp_tolerance: Option<f64>,
    /// Saturation only: lowest admissible bus power, W.
    pub floor: f64,
}

impl OptimizeRequest {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            payload: None,
            seed: cobot_energy::strategies::DEFAULT_SEED,
            tcp_tolerance: None,
            floor: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutput {
    pub schema_version: u32,
    pub strategy: Strategy,
    pub robot: String,
    pub inputs: Value,
    pub result: Value,
    pub curve: Value,
}

fn bus_curve(model: &RobotModel, traj: &Trajectory, payload: &cobot_energy::Payload) -> Result<Vec<[f64; 2]>> {
    let trace = compute_power_trace(model, traj, payload, RegenPolicy::DissipateAll)?;
    Ok(trace.samples.iter().map(|s| [s.t, s.p_bus]).collect())
}

pub fn run_optimize(model: &RobotModel, req: &OptimizeRequest) -> Result<OptimizeOutput> {
    let mass = req.payload.unwrap_or(req.strategy.default_payload());
    if !(mass.is_finite() && mass >= 0.0) {
        return Err(LabError::Config(format!(
            "payload {mass} kg is not a non-negative mass"
        )));
    }
    let payload = fixtures::payload(mass);
    let (inputs, result, curve) = match req.strategy {
        Strategy::Standby => {
            let q_seed = fixtures::standby_reference_pose();
            let constraint = match req.tcp_tolerance {
                Some(tol) if tol.is_finite() && tol > 0.0 => StandbyConstraint::FixedTcpPosition { tol },
                Some(tol) => return Err(LabError::Config(format!("tcp tolerance must be positive, got {tol}"))),
                None => StandbyConstraint::Free,
            };
            let opts = StandbyOptions {
                seed: req.seed,
                ..StandbyOptions::default()
            };
            let r = optimal_standby_with(model, &payload, &q_seed, constraint, &opts)?;
            (
                json!({ "payload": mass, "q_seed": q_seed, "constraint": constraint, "options": opts }),
                serde_json::to_value(&r)?,
                Value::Null,
            )
        }
        Strategy::Command => {
            let (a, b) = fixtures::command_pair();
            let speeds = fixtures::high_speed();
            let r = select_command(model, &a, &b, &payload, &speeds)?;
            (
                json!({ "payload": mass, "q_start": a, "q_end": b, "speeds": speeds }),
                serde_json::to_value(&r)?,
                Value::Null,
            )
        }
        Strategy::Time => {
            let traj = fixtures::descent_trajectory(model)?;
            let r = optimal_motion_time(model, &traj, &payload, K_RANGE.0, K_RANGE.1)?;
            let curve = serde_json::to_value(&r.curve)?;
            (
                json!({ "payload": mass, "program": "vertical-descent", "k_min": K_RANGE.0, "k_max": K_RANGE.1 }),
                json!({ "k_star": r.k_star, "e_star": r.e_star, "duration_star": r.duration_star }),
                curve,
            )
        }
        Strategy::Saturate => {
            let traj = fixtures::descent_trajectory(model)?;
            let r = saturate_power(model, &traj, &payload, req.floor)?;
            let curve = json!({
                "columns": ["t", "p_bus"],
                "before": bus_curve(model, &traj, &payload)?,
                "after": bus_curve(model, &r.traj_out, &payload)?,
            });
            (
                json!({ "payload": mass, "program": "vertical-descent", "p_floor": req.floor }),
                json!({
                    "e_grid_before": r.e_grid_before,
                    "e_grid_after": r.e_grid_after,
                    "e_grid_before_same_horizon": r.e_grid_before_same_horizon,
                    "e_dissipated_before": r.e_dissipated_before,
                    "e_dissipated_after": r.e_dissipated_after,
                    "duration_before": traj.duration(),
                    "duration_after": r.traj_out.duration(),
                    "iterations": r.iterations,
                    "converged": r.converged,
                }),
                curve,
            )
        }
    };
    Ok(OptimizeOutput {
        schema_version: SCHEMA_VERSION,
        strategy: req.strategy,
        robot: model.name.clone(),
        inputs,
        result,
        curve,
    })
}
