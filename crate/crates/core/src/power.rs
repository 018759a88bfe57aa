//! Electrical power model, DC-bus regeneration accounting and energy
//! integration.
//!
//! Each drive is reduced to a joint-referred DC motor: friction is added to
//! the rigid-body torque, the current is `i = τ_total / kt_eff`, and the
//! electrical power is mechanical power plus copper loss `i² R`. The bus sums
//! all drives and the constant controller idle power.

use serde::{Deserialize, Serialize};

use crate::dynamics::{gravity_torque, inverse_dynamics};
use crate::error::{Error, Result};
use crate::model::{JointVector, MotorParams, Payload, RobotModel};
use crate::motion::Trajectory;
use crate::DOF;

/// What happens to regenerated power on the DC bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegenPolicy {
    /// Every watt of negative bus power is burnt in the brake resistor.
    #[default]
    DissipateAll,
    /// Negative bus power down to `p_floor` (≤ 0) is recovered; anything
    /// below the floor is burnt.
    ReuseUpTo { p_floor: f64 },
}

impl RegenPolicy {
    pub fn floor(&self) -> f64 {
        match *self {
            RegenPolicy::DissipateAll => 0.0,
            RegenPolicy::ReuseUpTo { p_floor } => p_floor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.floor();
        if f.is_finite() && f <= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "regeneration floor must be <= 0, got {f}"
            )))
        }
    }

    /// Splits bus power into `(grid, dissipated, reused)` so that
    /// `grid - dissipated - reused == p_bus`.
    pub fn split(&self, p_bus: f64) -> (f64, f64, f64) {
        if p_bus >= 0.0 {
            return (p_bus, 0.0, 0.0);
        }
        let floor = self.floor();
        if p_bus >= floor {
            (0.0, 0.0, -p_bus)
        } else {
            (0.0, floor - p_bus, -floor)
        }
    }
}

/// `sign` with `sign(0) = 0`.
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Friction torque seen by the drive at joint speed `omega`.
pub fn friction_torque(motor: &MotorParams, omega: f64) -> f64 {
    motor.visc_friction * omega + motor.coul_friction * sign(omega)
}

/// Electrical power and current of one drive. Negative power means the
/// drive regenerates.
pub fn joint_electrical_power(motor: &MotorParams, tau: f64, omega: f64) -> (f64, f64) {
    let tau_total = tau + friction_torque(motor, omega);
    let current = tau_total / motor.kt_eff;
    (tau_total * omega + current * current * motor.r_winding, current)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub t: f64,
    pub p_joint: [f64; DOF],
    pub i_joint: [f64; DOF],
    /// Rigid-body mechanical power `Σ τ·ω`, friction excluded.
    pub p_mech: f64,
    pub p_friction: f64,
    pub p_copper: f64,
    pub p_bus: f64,
    pub p_grid: f64,
    pub p_dissipated: f64,
    pub p_reused: f64,
    /// Winding temperatures, °C.
    pub temp: [f64; DOF],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub dt: f64,
    pub p_baseline: f64,
    pub policy: RegenPolicy,
    pub samples: Vec<PowerSample>,
}

impl PowerTrace {
    pub fn duration(&self) -> f64 {
        self.dt * (self.samples.len().saturating_sub(1)) as f64
    }

    /// Cumulative grid energy at each sample (trapezoidal), J.
    pub fn cumulative_grid_energy(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.samples.len());
        for (k, s) in self.samples.iter().enumerate() {
            if k > 0 {
                acc += 0.5 * self.dt * (self.samples[k - 1].p_grid + s.p_grid);
            }
            out.push(acc);
        }
        out
    }

    pub fn peak_temperature(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.temp.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrated energies of one trace. All energies in J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_grid: f64,
    pub e_mech: f64,
    pub e_copper: f64,
    pub e_friction: f64,
    pub e_baseline: f64,
    pub e_dissipated: f64,
    pub e_reused: f64,
    /// W
    pub p_peak: f64,
    /// s
    pub duration: f64,
}

/// Bus power with the drive breakdown for one kinematic state.
pub(crate) struct BusPower {
    pub p_joint: [f64; DOF],
    pub i_joint: [f64; DOF],
    pub p_mech: f64,
    pub p_friction: f64,
    pub p_copper: f64,
    pub p_bus: f64,
}

pub(crate) fn bus_power(model: &RobotModel, tau: &JointVector, qd: &JointVector) -> BusPower {
    let mut out = BusPower {
        p_joint: [0.0; DOF],
        i_joint: [0.0; DOF],
        p_mech: 0.0,
        p_friction: 0.0,
        p_copper: 0.0,
        p_bus: model.p_baseline,
    };
    for j in 0..DOF {
        let motor = &model.motors[j];
        let (p, i) = joint_electrical_power(motor, tau[j], qd[j]);
        out.p_joint[j] = p;
        out.i_joint[j] = i;
        out.p_mech += tau[j] * qd[j];
        out.p_friction += friction_torque(motor, qd[j]) * qd[j];
        out.p_copper += i * i * motor.r_winding;
        out.p_bus += p;
    }
    out
}

pub fn compute_power_trace(
    model: &RobotModel,
    traj: &Trajectory,
    payload: &Payload,
    policy: RegenPolicy,
) -> Result<PowerTrace> {
    policy.validate()?;
    payload.validate()?;
    traj.check_structure()?;

    let mut samples = Vec::with_capacity(traj.samples.len());
    let mut copper: [Vec<f64>; DOF] = std::array::from_fn(|_| Vec::with_capacity(traj.samples.len()));
    for s in &traj.samples {
        let tau = inverse_dynamics(model, &s.q, &s.qd, &s.qdd, payload);
        let bus = bus_power(model, &tau, &s.qd);
        let (p_grid, p_dissipated, p_reused) = policy.split(bus.p_bus);
        for ((loss, i), motor) in copper.iter_mut().zip(bus.i_joint).zip(&model.motors) {
            loss.push(i * i * motor.r_winding);
        }
        samples.push(PowerSample {
            t: s.t,
            p_joint: bus.p_joint,
            i_joint: bus.i_joint,
            p_mech: bus.p_mech,
            p_friction: bus.p_friction,
            p_copper: bus.p_copper,
            p_bus: bus.p_bus,
            p_grid,
            p_dissipated,
            p_reused,
            temp: [model.ambient_temp; DOF],
        });
    }
    for (j, (loss, motor)) in copper.iter().zip(&model.motors).enumerate() {
        let temps = motor_temperature(loss, motor, model.ambient_temp, traj.dt);
        for (s, t) in samples.iter_mut().zip(temps) {
            s.temp[j] = t;
        }
    }
    Ok(PowerTrace {
        dt: traj.dt,
        p_baseline: model.p_baseline,
        policy,
        samples,
    })
}

fn trapezoid(dt: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut prev: Option<f64> = None;
    let mut acc = 0.0;
    for v in values {
        if let Some(p) = prev {
            acc += 0.5 * dt * (p + v);
        }
        prev = Some(v);
    }
    acc
}

pub fn integrate_energy(trace: &PowerTrace) -> Result<EnergyReport> {
    let n = trace.samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let dt = trace.dt;
    let s = &trace.samples;
    let duration = trace.duration();
    Ok(EnergyReport {
        e_grid: trapezoid(dt, s.iter().map(|x| x.p_grid)),
        e_mech: trapezoid(dt, s.iter().map(|x| x.p_mech)),
        e_copper: trapezoid(dt, s.iter().map(|x| x.p_copper)),
        e_friction: trapezoid(dt, s.iter().map(|x| x.p_friction)),
        e_baseline: trapezoid(dt, s.iter().map(|_| trace.p_baseline)),
        e_dissipated: trapezoid(dt, s.iter().map(|x| x.p_dissipated)),
        e_reused: trapezoid(dt, s.iter().map(|x| x.p_reused)),
        p_peak: s.iter().map(|x| x.p_grid).fold(0.0, f64::max),
        duration,
    })
}

/// Power drawn while holding `q` at rest: gravity-holding copper loss plus
/// controller idle power.
pub fn standby_power(model: &RobotModel, q: &JointVector, payload: &Payload) -> Result<f64> {
    model.check_position_limits(q)?;
    let g = gravity_torque(model, q, payload);
    let copper: f64 = model
        .motors
        .iter()
        .zip(g.iter())
        .map(|(m, tau)| {
            let i = tau / m.kt_eff;
            i * i * m.r_winding
        })
        .sum();
    Ok(copper + model.p_baseline)
}

/// First-order lumped winding temperature driven by copper loss, explicit
/// Euler at the trace spacing, starting at ambient.
pub fn motor_temperature(loss: &[f64], motor: &MotorParams, ambient: f64, dt: f64) -> Vec<f64> {
    // Clamping the step keeps explicit Euler monotone for dt > tau.
    let alpha = (dt / motor.thermal_tau).min(1.0);
    let mut temp = ambient;
    let mut out = Vec::with_capacity(loss.len());
    for k in 0..loss.len() {
        if k > 0 {
            let target = ambient + motor.thermal_res * loss[k - 1];
            temp += alpha * (target - temp);
        }
        out.push(temp);
    }
    out
}
