//! Manufacturer-style motion commands: joint-linear (MoveJ) and
//! Cartesian-linear (MoveL) moves with trapezoidal velocity profiles, uniform
//! time scaling and limit validation.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, inverse_kinematics};
use crate::model::{ensure_finite, rotation_angle, JointVector, Pose, RobotModel};
use crate::DOF;

/// Controller sample period used by the planners, s.
pub const DEFAULT_DT: f64 = 0.002;

/// Slack used when comparing planned values against limits, in the units of
/// the compared quantity.
const LIMIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: JointVector,
    pub qd: JointVector,
    pub qdd: JointVector,
}

impl TrajectorySample {
    pub fn rest(t: f64, q: JointVector) -> Self {
        Self {
            t,
            q,
            qd: JointVector::zeros(),
            qdd: JointVector::zeros(),
        }
    }
}

/// Uniformly sampled joint-space motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    /// Holds `q` at rest for `n` samples (at least 2).
    pub fn hold(q: JointVector, n: usize, dt: f64) -> Self {
        let n = n.max(2);
        Self {
            dt,
            samples: (0..n).map(|i| TrajectorySample::rest(i as f64 * dt, q)).collect(),
        }
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn start(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn end(&self) -> &TrajectorySample {
        &self.samples[self.samples.len() - 1]
    }

    /// Checks sample count, finiteness and uniform spacing.
    pub fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTrajectory(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.samples.len() < 2 {
            return bad(format!("need at least 2 samples, got {}", self.samples.len()));
        }
        let t0 = self.samples[0].t;
        for (i, s) in self.samples.iter().enumerate() {
            let finite = s.t.is_finite() && [s.q, s.qd, s.qdd].iter().all(|v| v.iter().all(|x| x.is_finite()));
            if !finite {
                return bad(format!("sample {i} is not finite"));
            }
            let expected = t0 + i as f64 * self.dt;
            if (s.t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
                return bad(format!("sample {i} at t={} breaks uniform spacing", s.t));
            }
        }
        Ok(())
    }

    /// Cubic Hermite interpolation of position and velocity at time `t`
    /// (clamped to the trajectory), plus linearly interpolated acceleration.
    pub fn interpolate(&self, t: f64) -> (JointVector, JointVector, JointVector) {
        let n = self.samples.len();
        let t0 = self.samples[0].t;
        let mut x = ((t - t0) / self.dt).clamp(0.0, (n - 1) as f64);
        // Times that are sample instants up to rounding return the sample itself.
        if (x - x.round()).abs() < 1e-9 {
            x = x.round();
        }
        let k = (x.floor() as usize).min(n - 2);
        let u = x - k as f64;
        let a = &self.samples[k];
        let b = &self.samples[k + 1];
        if u == 0.0 {
            return (a.q, a.qd, a.qdd);
        }
        if u == 1.0 {
            return (b.q, b.qd, b.qdd);
        }
        let h = self.dt;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let q = a.q * h00 + a.qd * (h10 * h) + b.q * h01 + b.qd * (h11 * h);
        let d00 = (6.0 * u2 - 6.0 * u) / h;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = (-6.0 * u2 + 6.0 * u) / h;
        let d11 = 3.0 * u2 - 2.0 * u;
        let qd = a.q * d00 + a.qd * d10 + b.q * d01 + b.qd * d11;
        let qdd = a.qdd * (1.0 - u) + b.qdd * u;
        (q, qd, qdd)
    }
}

/// A single manufacturer-style motion command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum MotionCommand {
    /// Straight line in joint space; limits in rad/s and rad/s².
    MoveJoint {
        target: [f64; DOF],
        v_limit: f64,
        a_limit: f64,
    },
    /// Straight tool line in Cartesian space; limits in m/s and m/s².
    MoveLinear { target: Pose, v_limit: f64, a_limit: f64 },
}

impl MotionCommand {
    pub fn kind(&self) -> CommandKind {
        match self {
            MotionCommand::MoveJoint { .. } => CommandKind::MoveJoint,
            MotionCommand::MoveLinear { .. } => CommandKind::MoveLinear,
        }
    }

    pub fn plan(&self, model: &RobotModel, q_start: &JointVector) -> Result<Trajectory> {
        match self {
            MotionCommand::MoveJoint {
                target,
                v_limit,
                a_limit,
            } => plan_movej(model, q_start, &JointVector::from(*target), *v_limit, *a_limit),
            MotionCommand::MoveLinear {
                target,
                v_limit,
                a_limit,
            } => plan_movel(model, q_start, target, *v_limit, *a_limit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommandKind {
    MoveJoint,
    MoveLinear,
}

impl std::fmt::Display for CommandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CommandKind::MoveJoint => "movej",
            CommandKind::MoveLinear => "movel",
        })
    }
}

/// Rest-to-rest trapezoidal velocity profile over a scalar distance, with
/// phase durations rounded up to whole samples.
///
/// Rounding keeps the cruise velocity and acceleration at or below the
/// requested limits; the profile degenerates to a triangle when there is no
/// room to cruise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidProfile {
    pub distance: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub dt: f64,
    /// Samples spent accelerating (and, symmetrically, decelerating).
    pub accel_steps: usize,
    pub cruise_steps: usize,
}

impl TrapezoidProfile {
    pub fn new(distance: f64, v_max: f64, a_max: f64, dt: f64) -> Result<Self> {
        for (name, v) in [
            ("distance", distance),
            ("velocity", v_max),
            ("acceleration", a_max),
            ("dt", dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "profile {name} must be positive, got {v}"
                )));
            }
        }
        let (t_a, t_c) = if distance >= v_max * v_max / a_max {
            (v_max / a_max, distance / v_max - v_max / a_max)
        } else {
            ((distance / a_max).sqrt(), 0.0)
        };
        let steps = |t: f64| (t / dt - 1e-9).ceil().max(0.0) as usize;
        let accel_steps = steps(t_a).max(1);
        let cruise_steps = steps(t_c);
        let t_a = accel_steps as f64 * dt;
        let t_c = cruise_steps as f64 * dt;
        let velocity = distance / (t_a + t_c);
        Ok(Self {
            distance,
            velocity,
            acceleration: velocity / t_a,
            dt,
            accel_steps,
            cruise_steps,
        })
    }

    /// Number of sample intervals; the profile has `steps() + 1` samples.
    pub fn steps(&self) -> usize {
        2 * self.accel_steps + self.cruise_steps
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// Instants at which the acceleration switches, including both ends.
    pub fn phase_times(&self) -> [f64; 4] {
        let t_a = self.accel_steps as f64 * self.dt;
        let t_c = self.cruise_steps as f64 * self.dt;
        [0.0, t_a, t_a + t_c, 2.0 * t_a + t_c]
    }

    /// `(s, ṡ, s̈)` at any time `t` of the continuous profile, clamped to
    /// its ends. Inside a phase this is exact; at a switch the later phase wins.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let [_, t1, t2, t3] = self.phase_times();
        let a = self.acceleration;
        if t <= 0.0 {
            (0.0, 0.0, 0.0)
        } else if t < t1 {
            (0.5 * a * t * t, a * t, a)
        } else if t < t2 {
            (0.5 * a * t1 * t1 + self.velocity * (t - t1), self.velocity, 0.0)
        } else if t < t3 {
            let rem = t3 - t;
            (self.distance - 0.5 * a * rem * rem, a * rem, -a)
        } else {
            (self.distance, 0.0, 0.0)
        }
    }

    /// The same continuous profile sampled `factor` times more densely.
    pub fn refined(&self, factor: usize) -> Self {
        assert!(factor > 0, "refinement factor must be positive");
        Self {
            dt: self.dt / factor as f64,
            accel_steps: self.accel_steps * factor,
            cruise_steps: self.cruise_steps * factor,
            ..*self
        }
    }

    /// `(s, ṡ, s̈)` at sample `i`. Acceleration is zero at both ends and the
    /// mean of the adjacent phases at interior phase switches.
    pub fn sample(&self, i: usize) -> (f64, f64, f64) {
        let n = self.steps();
        let na = self.accel_steps;
        let nc = self.cruise_steps;
        let a = self.acceleration;
        let v = self.velocity;
        let t_a = na as f64 * self.dt;
        if i == 0 {
            return (0.0, 0.0, 0.0);
        }
        if i >= n {
            return (self.distance, 0.0, 0.0);
        }
        let t = i as f64 * self.dt;
        if i <= na {
            let acc = match (i == na, nc) {
                (false, _) => a,
                (true, 0) => 0.0,
                (true, _) => 0.5 * a,
            };
            return (0.5 * a * t * t, a * t, acc);
        }
        if i < na + nc {
            return (0.5 * a * t_a * t_a + v * (t - t_a), v, 0.0);
        }
        let rem = (n - i) as f64 * self.dt;
        let acc = if i == na + nc { -0.5 * a } else { -a };
        (self.distance - 0.5 * a * rem * rem, a * rem, acc)
    }
}

fn check_limits_arg(v_limit: f64, a_limit: f64) -> Result<()> {
    if v_limit.is_finite() && v_limit > 0.0 && a_limit.is_finite() && a_limit > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "velocity and acceleration limits must be positive, got {v_limit} and {a_limit}"
        )))
    }
}

pub fn plan_movej(
    model: &RobotModel,
    q_start: &JointVector,
    q_end: &JointVector,
    v_limit: f64,
    a_limit: f64,
) -> Result<Trajectory> {
    plan_movej_sampled(model, q_start, q_end, v_limit, a_limit, DEFAULT_DT)
}

/// Normalized profile `s: 0 → 1` of a joint move, `None` for a null move.
///
/// The joint with the tightest velocity (or acceleration) budget relative to
/// its travel sets the pace; all joints follow `q_start + s·(q_end − q_start)`.
pub fn movej_profile(
    model: &RobotModel,
    q_start: &JointVector,
    q_end: &JointVector,
    v_limit: f64,
    a_limit: f64,
    dt: f64,
) -> Result<Option<TrapezoidProfile>> {
    check_limits_arg(v_limit, a_limit)?;
    model.check_position_limits(q_start)?;
    model.check_position_limits(q_end)?;
    let delta = q_end - q_start;
    if delta.iter().all(|d| *d == 0.0) {
        return Ok(None);
    }
    let mut v_norm = f64::INFINITY;
    let mut a_norm = f64::INFINITY;
    for j in 0..DOF {
        let d = delta[j].abs();
        if d > 0.0 {
            let lim = &model.limits[j];
            v_norm = v_norm.min(v_limit.min(lim.v_max) / d);
            a_norm = a_norm.min(a_limit.min(lim.a_max) / d);
        }
    }
    TrapezoidProfile::new(1.0, v_norm, a_norm, dt).map(Some)
}

/// Synchronized joint-space move: every joint follows the same normalized
/// trapezoid, scaled so that no joint exceeds `min(limit, joint maximum)`.
pub fn plan_movej_sampled(
    model: &RobotModel,
    q_start: &JointVector,
    q_end: &JointVector,
    v_limit: f64,
    a_limit: f64,
    dt: f64,
) -> Result<Trajectory> {
    match movej_profile(model, q_start, q_end, v_limit, a_limit, dt)? {
        Some(profile) => Ok(sample_joint_path(&profile, q_start, q_end)),
        None => Ok(Trajectory::hold(*q_start, 2, dt)),
    }
}

/// Samples `q_start + s·(q_end − q_start)` for a normalized profile `s`.
/// The final sample is exactly `q_end`.
pub fn sample_joint_path(profile: &TrapezoidProfile, q_start: &JointVector, q_end: &JointVector) -> Trajectory {
    let dt = profile.dt;
    let delta = q_end - q_start;
    let n = profile.steps();
    let mut samples: Vec<TrajectorySample> = (0..=n)
        .map(|i| {
            let (s, sd, sdd) = profile.sample(i);
            TrajectorySample {
                t: i as f64 * dt,
                q: q_start + delta * s,
                qd: delta * sd,
                qdd: delta * sdd,
            }
        })
        .collect();
    samples[n].q = *q_end;
    Trajectory { dt, samples }
}

pub fn plan_movel(
    model: &RobotModel,
    q_start: &JointVector,
    target: &Pose,
    v_limit: f64,
    a_limit: f64,
) -> Result<Trajectory> {
    plan_movel_sampled(model, q_start, target, v_limit, a_limit, DEFAULT_DT)
}

/// Straight tool line with slerped orientation on a shared trapezoid.
///
/// The profile runs over translational path length; a pure reorientation
/// runs the same profile over the rotation angle, with the limits read as
/// rad/s and rad/s².
pub fn plan_movel_sampled(
    model: &RobotModel,
    q_start: &JointVector,
    target: &Pose,
    v_limit: f64,
    a_limit: f64,
    dt: f64,
) -> Result<Trajectory> {
    check_limits_arg(v_limit, a_limit)?;
    ensure_finite(q_start, "start configuration")?;
    model.check_position_limits(q_start)?;
    let start = forward_kinematics(model, q_start);
    let dp = target.position - start.position;
    let length = dp.norm();
    let angle = rotation_angle(&start.orientation, &target.orientation);
    // Below this, FK round-off rather than a real displacement.
    const NULL_MOVE: f64 = 1e-12;
    if length < NULL_MOVE && angle < NULL_MOVE {
        return Ok(Trajectory::hold(*q_start, 2, dt));
    }
    let distance = if length > 0.0 { length } else { angle };

    let profile = TrapezoidProfile::new(distance, v_limit, a_limit, dt)?;
    let n = profile.steps();
    let mut qs: Vec<JointVector> = Vec::with_capacity(n + 1);
    qs.push(*q_start);
    let mut q = *q_start;
    for i in 1..=n {
        let fraction = if i == n { 1.0 } else { profile.sample(i).0 / distance };
        let pose = line_pose(&start, target, &dp, fraction);
        q = inverse_kinematics(model, &pose, &q).map_err(|e| match e {
            Error::LimitViolation { joint, .. } => Error::JointLimitOnPath { joint, sample: i },
            other => other,
        })?;
        qs.push(q);
    }

    let mut samples = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (qd, qdd) = if i == 0 || i == n {
            (JointVector::zeros(), JointVector::zeros())
        } else {
            (
                (qs[i + 1] - qs[i - 1]) / (2.0 * dt),
                (qs[i + 1] - qs[i] * 2.0 + qs[i - 1]) / (dt * dt),
            )
        };
        for j in 0..DOF {
            let limit = model.limits[j].v_max;
            if qd[j].abs() > limit + LIMIT_SLACK {
                return Err(Error::JointVelocityExceeded {
                    joint: j + 1,
                    sample: i,
                    velocity: qd[j],
                    limit,
                });
            }
        }
        samples.push(TrajectorySample {
            t: i as f64 * dt,
            q: qs[i],
            qd,
            qdd,
        });
    }
    Ok(Trajectory { dt, samples })
}

fn line_pose(start: &Pose, target: &Pose, dp: &Vector3<f64>, fraction: f64) -> Pose {
    let orientation = start
        .orientation
        .try_slerp(&target.orientation, fraction, 1e-12)
        .unwrap_or_else(|| slerp_fallback(&start.orientation, &target.orientation, fraction));
    Pose::new(start.position + dp * fraction, orientation)
}

// `try_slerp` gives up on antipodal quaternions; any great circle works then.
fn slerp_fallback(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>, fraction: f64) -> UnitQuaternion<f64> {
    let rel = a.inverse() * b;
    let axis = rel.axis().unwrap_or(Vector3::x_axis());
    a * UnitQuaternion::from_axis_angle(&axis, rel.angle() * fraction)
}

/// Uniform time dilation by `k`: same samples, `dt' = k·dt`, `qd/k`,
/// `qdd/k²`. Speeding up (`k < 1`) is refused with `LimitViolation` when
/// the result would break a velocity or acceleration limit.
pub fn time_scale(model: &RobotModel, traj: &Trajectory, k: f64) -> Result<Trajectory> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {k}"
        )));
    }
    let scaled = time_scale_unchecked(traj, k);
    if k < 1.0 {
        if let Some(v) = validate_limits(model, &scaled)
            .into_iter()
            .find(|v| v.quantity != LimitQuantity::Position)
        {
            let lim = &model.limits[v.joint - 1];
            let max = match v.quantity {
                LimitQuantity::Velocity => lim.v_max,
                _ => lim.a_max,
            };
            return Err(Error::LimitViolation {
                joint: v.joint,
                value: v.value,
                min: -max,
                max,
            });
        }
    }
    Ok(scaled)
}

pub(crate) fn time_scale_unchecked(traj: &Trajectory, k: f64) -> Trajectory {
    let dt = traj.dt * k;
    let t0 = traj.samples.first().map_or(0.0, |s| s.t);
    let k2 = k * k;
    Trajectory {
        dt,
        samples: traj
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| TrajectorySample {
                t: t0 + i as f64 * dt,
                q: s.q,
                qd: s.qd / k,
                qdd: s.qdd / k2,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitQuantity {
    Position,
    Velocity,
    Acceleration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitViolationRecord {
    /// 1-based joint number.
    pub joint: usize,
    pub sample: usize,
    pub quantity: LimitQuantity,
    pub value: f64,
    /// How far the value lies beyond the limit, always positive.
    pub margin: f64,
}

/// Every position, velocity and acceleration limit violation, in sample
/// order. Values within 1e-9 of a limit count as inside.
pub fn validate_limits(model: &RobotModel, traj: &Trajectory) -> Vec<LimitViolationRecord> {
    let mut out = Vec::new();
    for (i, s) in traj.samples.iter().enumerate() {
        for j in 0..DOF {
            let lim = &model.limits[j];
            let q = s.q[j];
            let pos_margin = (lim.q_min - q).max(q - lim.q_max);
            let checks = [
                (LimitQuantity::Position, q, pos_margin),
                (LimitQuantity::Velocity, s.qd[j], s.qd[j].abs() - lim.v_max),
                (LimitQuantity::Acceleration, s.qdd[j], s.qdd[j].abs() - lim.a_max),
            ];
            for (quantity, value, margin) in checks {
                if margin > LIMIT_SLACK || margin.is_nan() {
                    out.push(LimitViolationRecord {
                        joint: j + 1,
                        sample: i,
                        quantity,
                        value,
                        margin,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_with_touching_cruise() {
        let p = TrapezoidProfile::new(1.0, 1.0, 1.0, DEFAULT_DT).unwrap();
        assert_eq!(p.cruise_steps, 0);
        assert!((p.duration() - 2.0).abs() < 1e-12);
        assert!((p.velocity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_profile() {
        let p = TrapezoidProfile::new(0.25, 1.0, 1.0, DEFAULT_DT).unwrap();
        assert!((p.duration() - 1.0).abs() < 1e-12);
        assert!((p.velocity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rounding_never_exceeds_limits() {
        for (d, v, a) in [
            (0.3217, 0.77, 2.3),
            (1e-6, 1.0, 1.0),
            (5.0, 2.0, 0.9),
            (0.01, 3.0, 40.0),
        ] {
            let p = TrapezoidProfile::new(d, v, a, DEFAULT_DT).unwrap();
            assert!(p.velocity <= v && p.acceleration <= a, "{d} {v} {a}: {p:?}");
            let (s, sd, sdd) = p.sample(p.steps());
            assert_eq!((s, sd, sdd), (d, 0.0, 0.0));
        }
    }

    #[test]
    fn profile_is_continuous_at_switches() {
        let p = TrapezoidProfile::new(2.0, 1.0, 2.0, 0.01).unwrap();
        let na = p.accel_steps;
        let nc = p.cruise_steps;
        for i in [na, na + nc] {
            let (_, v0, _) = p.sample(i - 1);
            let (_, v1, _) = p.sample(i);
            let (_, v2, _) = p.sample(i + 1);
            assert!((v1 - v0).abs() <= p.acceleration * p.dt + 1e-12);
            assert!((v2 - v1).abs() <= p.acceleration * p.dt + 1e-12);
        }
    }

    #[test]
    fn hermite_reproduces_samples() {
        let m = crate::fixtures::pendulum(1.0, 1.0);
        let mut q1 = JointVector::zeros();
        q1[0] = 1.0;
        let traj = plan_movej_sampled(&m, &JointVector::zeros(), &q1, 1.0, 2.0, 0.01).unwrap();
        for (i, s) in traj.samples.iter().enumerate().step_by(7) {
            let (q, qd, _) = traj.interpolate(i as f64 * traj.dt);
            assert_eq!(q, s.q);
            assert_eq!(qd, s.qd);
        }
        let (q, _, _) = traj.interpolate(traj.duration() * 0.5 + 0.003);
        assert!((q[0] - 0.5).abs() < 0.01);
    }
}
