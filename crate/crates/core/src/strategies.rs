//! Energy-reduction strategies built on the simulation stack: optimal
//! standby pose, joint versus Cartesian command choice, energy-optimal
//! execution time, and a power saturator that retimes regenerating phases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{gravity_torque, inertial_torque, potential_energy};
use crate::error::{Error, Result};
use crate::kinematics::forward_kinematics;
use crate::model::{JointVector, Payload, RobotModel};
use crate::motion::{
    plan_movej, plan_movel, validate_limits, CommandKind, LimitQuantity, Trajectory, TrajectorySample,
};
use crate::optim::{golden_section, nelder_mead, NelderMeadOptions};
use crate::power::{bus_power, compute_power_trace, integrate_energy, standby_power, PowerTrace, RegenPolicy};
use crate::DOF;

/// Seed of the random-start generator unless the caller supplies one.
pub const DEFAULT_SEED: u64 = 42;

fn simulate(model: &RobotModel, traj: &Trajectory, payload: &Payload) -> Result<(PowerTrace, f64, f64)> {
    let trace = compute_power_trace(model, traj, payload, RegenPolicy::DissipateAll)?;
    let report = integrate_energy(&trace)?;
    Ok((trace, report.e_grid, report.e_dissipated))
}

/// Energy drawn from the grid for `traj` with all regeneration burnt.
pub fn grid_energy(model: &RobotModel, traj: &Trajectory, payload: &Payload) -> Result<f64> {
    simulate(model, traj, payload).map(|(_, e, _)| e)
}

// ---------------------------------------------------------------------------
// Standby

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum StandbyConstraint {
    #[default]
    Free,
    /// Keep the flange within `tol` metres of its position at the seed.
    FixedTcpPosition { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandbyOptions {
    pub seed: u64,
    /// Random in-limit starts in addition to the seed pose.
    pub restarts: usize,
}

impl Default for StandbyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            restarts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandbyResult {
    pub q_star: JointVector,
    /// W
    pub power_star: f64,
    /// Standby power at the seed pose, W.
    pub baseline_power: f64,
    pub saving_fraction: f64,
}

/// Relative power difference below which two standby candidates tie.
const POWER_TIE: f64 = 1e-9;

pub fn optimal_standby(
    model: &RobotModel,
    payload: &Payload,
    q_seed: &JointVector,
    constraint: StandbyConstraint,
) -> Result<StandbyResult> {
    optimal_standby_with(model, payload, q_seed, constraint, &StandbyOptions::default())
}

/// Multi-start Nelder–Mead over the joint box. Under `FixedTcpPosition`
/// the search objective carries a steep penalty outside the tolerance and
/// infeasible end points are discarded.
pub fn optimal_standby_with(
    model: &RobotModel,
    payload: &Payload,
    q_seed: &JointVector,
    constraint: StandbyConstraint,
    opts: &StandbyOptions,
) -> Result<StandbyResult> {
    payload.validate()?;
    let baseline_power = standby_power(model, q_seed, payload)?;
    let anchor = forward_kinematics(model, q_seed).position;
    let tol = match constraint {
        StandbyConstraint::Free => None,
        StandbyConstraint::FixedTcpPosition { tol } => {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::InvalidArgument(format!("TCP tolerance must be >= 0, got {tol}")));
            }
            Some(tol)
        }
    };
    let excess = |q: &JointVector| -> f64 {
        tol.map_or(0.0, |tol| {
            ((forward_kinematics(model, q).position - anchor).norm() - tol).max(0.0)
        })
    };

    let lower: Vec<f64> = model.limits.iter().map(|l| l.q_min).collect();
    let upper: Vec<f64> = model.limits.iter().map(|l| l.q_max).collect();
    let objective = |x: &[f64]| -> f64 {
        let q = JointVector::from_column_slice(x);
        let p = standby_power(model, &q, payload).unwrap_or(f64::INFINITY);
        p + 1e6 * excess(&q)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![*q_seed];
    for _ in 0..opts.restarts {
        starts.push(JointVector::from_fn(|j, _| rng.random_range(lower[j]..=upper[j])));
    }

    let nm = NelderMeadOptions::default();
    // Equal-power poses (hanging versus balanced upright) are split in
    // favour of the lower potential energy, i.e. the stable one.
    let mut best: Option<(JointVector, f64, f64)> = None;
    let mut consider = |q: JointVector| {
        if !model.within_limits(&q) || excess(&q) > 0.0 {
            return;
        }
        let Ok(p) = standby_power(model, &q, payload) else {
            return;
        };
        let u = potential_energy(model, &q, payload);
        let better = best.is_none_or(|(_, bp, bu)| {
            let tie = POWER_TIE * bp.abs().max(1.0);
            p < bp - tie || (p <= bp + tie && u < bu)
        });
        if better {
            best = Some((q, p, u));
        }
    };
    consider(*q_seed);
    for start in &starts {
        let m = nelder_mead(objective, start.as_slice(), &lower, &upper, &nm);
        consider(JointVector::from_column_slice(&m.x));
    }

    let (q_star, power_star, _) = best.ok_or(Error::NoFeasibleCandidate)?;
    Ok(StandbyResult {
        q_star,
        power_star,
        baseline_power,
        saving_fraction: 1.0 - power_star / baseline_power,
    })
}

// ---------------------------------------------------------------------------
// Command choice

/// Speed settings for the two command styles: joint limits in rad/s and
/// rad/s², Cartesian limits in m/s and m/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommandSpeeds {
    pub v_joint: f64,
    pub a_joint: f64,
    pub v_linear: f64,
    pub a_linear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandComparison {
    /// J; `None` when the joint move could not be planned.
    pub e_movej: Option<f64>,
    /// J; `None` when the linear move could not be planned.
    pub e_movel: Option<f64>,
    pub recommended: CommandKind,
    /// `1 - min/max` of the two energies; 0 when only one branch is feasible.
    pub saving_fraction: f64,
    pub movej_error: Option<String>,
    pub movel_error: Option<String>,
}

/// Plans both command styles between the same endpoints and recommends the
/// one drawing less grid energy; ties go to the joint move.
pub fn select_command(
    model: &RobotModel,
    q_start: &JointVector,
    q_end: &JointVector,
    payload: &Payload,
    speeds: &CommandSpeeds,
) -> Result<CommandComparison> {
    let target = forward_kinematics(model, q_end);
    let movej =
        plan_movej(model, q_start, q_end, speeds.v_joint, speeds.a_joint).and_then(|t| grid_energy(model, &t, payload));
    let movel = plan_movel(model, q_start, &target, speeds.v_linear, speeds.a_linear)
        .and_then(|t| grid_energy(model, &t, payload));

    match (movej, movel) {
        (Ok(ej), Ok(el)) => Ok(CommandComparison {
            e_movej: Some(ej),
            e_movel: Some(el),
            recommended: if ej <= el {
                CommandKind::MoveJoint
            } else {
                CommandKind::MoveLinear
            },
            saving_fraction: 1.0 - ej.min(el) / ej.max(el),
            movej_error: None,
            movel_error: None,
        }),
        (Ok(ej), Err(e)) => Ok(CommandComparison {
            e_movej: Some(ej),
            e_movel: None,
            recommended: CommandKind::MoveJoint,
            saving_fraction: 0.0,
            movej_error: None,
            movel_error: Some(e.to_string()),
        }),
        (Err(e), Ok(el)) => Ok(CommandComparison {
            e_movej: None,
            e_movel: Some(el),
            recommended: CommandKind::MoveLinear,
            saving_fraction: 0.0,
            movej_error: Some(e.to_string()),
            movel_error: None,
        }),
        (Err(ej), Err(el)) => Err(Error::NoFeasiblePlan {
            movej: ej.to_string(),
            movel: el.to_string(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Execution time

/// A trajectory prepared for fast energy evaluation under uniform time
/// scaling: with `τ = τ_inertial/k² + τ_gravity` no dynamics are recomputed.
pub struct ScalableMotion<'a> {
    model: &'a RobotModel,
    dt: f64,
    qd: Vec<JointVector>,
    tau_inertial: Vec<JointVector>,
    tau_gravity: Vec<JointVector>,
    peak_qd: JointVector,
    peak_qdd: JointVector,
}

impl<'a> ScalableMotion<'a> {
    pub fn new(model: &'a RobotModel, traj: &Trajectory, payload: &Payload) -> Result<Self> {
        traj.check_structure()?;
        payload.validate()?;
        let mut peak_qd = JointVector::zeros();
        let mut peak_qdd = JointVector::zeros();
        for s in &traj.samples {
            peak_qd = peak_qd.sup(&s.qd.abs());
            peak_qdd = peak_qdd.sup(&s.qdd.abs());
        }
        Ok(Self {
            model,
            dt: traj.dt,
            qd: traj.samples.iter().map(|s| s.qd).collect(),
            tau_inertial: traj
                .samples
                .iter()
                .map(|s| inertial_torque(model, &s.q, &s.qd, &s.qdd, payload))
                .collect(),
            tau_gravity: traj
                .samples
                .iter()
                .map(|s| gravity_torque(model, &s.q, payload))
                .collect(),
            peak_qd,
            peak_qdd,
        })
    }

    pub fn base_duration(&self) -> f64 {
        self.dt * (self.qd.len() - 1) as f64
    }

    /// Why speeding up by `k < 1` is not allowed, if it is not.
    pub fn infeasibility(&self, k: f64) -> Option<String> {
        if k >= 1.0 {
            return None;
        }
        for j in 0..DOF {
            let lim = &self.model.limits[j];
            let v = self.peak_qd[j] / k;
            if v - lim.v_max > 1e-9 {
                return Some(format!(
                    "joint {} velocity {v:.4} rad/s exceeds {:.4}",
                    j + 1,
                    lim.v_max
                ));
            }
            let a = self.peak_qdd[j] / (k * k);
            if a - lim.a_max > 1e-9 {
                return Some(format!(
                    "joint {} acceleration {a:.4} rad/s² exceeds {:.4}",
                    j + 1,
                    lim.a_max
                ));
            }
        }
        None
    }

    /// Grid energy (all regeneration burnt) of the motion scaled by `k`.
    pub fn e_grid(&self, k: f64) -> f64 {
        let inv_k = 1.0 / k;
        let inv_k2 = inv_k * inv_k;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for i in 0..self.qd.len() {
            let tau = self.tau_inertial[i] * inv_k2 + self.tau_gravity[i];
            let p = bus_power(self.model, &tau, &(self.qd[i] * inv_k)).p_bus.max(0.0);
            if i > 0 {
                acc += 0.5 * (prev + p);
            }
            prev = p;
        }
        acc * self.dt * k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: f64,
    /// s
    pub duration: f64,
    /// J
    pub e_grid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPoint {
    pub k: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicCurve {
    pub base_duration: f64,
    pub points: Vec<CurvePoint>,
    pub excluded: Vec<ExcludedPoint>,
}

/// `n` geometrically spaced values from `lo` to `hi`, both included.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let ratio = hi / lo;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => lo * ratio.powf(i as f64 / (n - 1) as f64),
        })
        .collect()
}

fn check_range(k_min: f64, k_max: f64) -> Result<()> {
    if k_min.is_finite() && k_max.is_finite() && k_min > 0.0 && k_max > k_min {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scale range must satisfy 0 < k_min < k_max, got [{k_min}, {k_max}]"
        )))
    }
}

fn curve_on(motion: &ScalableMotion<'_>, ks: &[f64]) -> CharacteristicCurve {
    let base = motion.base_duration();
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &k in ks {
        match motion.infeasibility(k) {
            Some(reason) => excluded.push(ExcludedPoint { k, reason }),
            None => points.push(CurvePoint {
                k,
                duration: k * base,
                e_grid: motion.e_grid(k),
            }),
        }
    }
    CharacteristicCurve {
        base_duration: base,
        points,
        excluded,
    }
}

/// Grid energy against execution time for uniform scalings of `traj_base`.
pub fn characteristic_curve(
    model: &RobotModel,
    traj_base: &Trajectory,
    payload: &Payload,
    k_min: f64,
    k_max: f64,
    n_points: usize,
) -> Result<CharacteristicCurve> {
    check_range(k_min, k_max)?;
    if n_points < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 curve points, got {n_points}"
        )));
    }
    let motion = ScalableMotion::new(model, traj_base, payload)?;
    let curve = curve_on(&motion, &geometric_grid(k_min, k_max, n_points));
    if curve.points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTimeResult {
    pub k_star: f64,
    /// J
    pub e_star: f64,
    /// s
    pub duration_star: f64,
    pub curve: CharacteristicCurve,
}

/// Points on the coarse bracketing grid.
pub const COARSE_POINTS: usize = 33;
/// Width of the final golden-section bracket in `k`.
pub const K_TOLERANCE: f64 = 1e-4;

/// Coarse geometric grid, then golden-section refinement between the
/// neighbours of the best grid point.
pub fn optimal_motion_time(
    model: &RobotModel,
    traj_base: &Trajectory,
    payload: &Payload,
    k_min: f64,
    k_max: f64,
) -> Result<MotionTimeResult> {
    let curve = characteristic_curve(model, traj_base, payload, k_min, k_max, COARSE_POINTS)?;
    let motion = ScalableMotion::new(model, traj_base, payload)?;
    let pts = &curve.points;
    let best = (0..pts.len())
        .min_by(|&a, &b| pts[a].e_grid.total_cmp(&pts[b].e_grid))
        .ok_or(Error::EmptyCurve)?;
    let lo = pts[best.saturating_sub(1)].k;
    let hi = pts[(best + 1).min(pts.len() - 1)].k;
    let (mut k_star, mut e_star) = (pts[best].k, pts[best].e_grid);
    if hi > lo {
        let energy = |k: f64| match motion.infeasibility(k) {
            Some(_) => f64::INFINITY,
            None => motion.e_grid(k),
        };
        let (k, e) = golden_section(energy, lo, hi, K_TOLERANCE);
        if e < e_star {
            k_star = k;
            e_star = e;
        }
    }
    Ok(MotionTimeResult {
        k_star,
        e_star,
        duration_star: k_star * curve.base_duration,
        curve,
    })
}

// ---------------------------------------------------------------------------
// Power saturation

/// Bus power margin above the floor that ends a regenerating interval, W.
pub const SATURATION_EPSILON: f64 = 0.5;
/// Slow-down applied to every violating interval per iteration.
pub const STRETCH_PER_ITERATION: f64 = 1.05;
pub const MAX_SATURATION_ITERATIONS: usize = 200;
/// Candidate blend widths (s) between retimed and untouched sections,
/// narrowest first.
const BLEND_WIDTHS: [f64; 7] = [0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationResult {
    pub traj_out: Trajectory,
    pub e_grid_before: f64,
    pub e_grid_after: f64,
    pub e_dissipated_before: f64,
    pub e_dissipated_after: f64,
    /// Grid energy of the input followed by a hold at its final pose until
    /// the retimed motion ends: both programs then cover the same interval.
    pub e_grid_before_same_horizon: f64,
    pub iterations: usize,
    /// `false` when the iteration cap was hit with bus power still below
    /// the floor; the best iterate is returned regardless.
    pub converged: bool,
}

/// A monotone time warp `dt/dτ = r(τ)` with `r ≥ 1` piecewise linear on the
/// sample grid of the source trajectory.
struct TimeWarp {
    dt: f64,
    rate: Vec<f64>,
    /// New time at each source sample.
    at_node: Vec<f64>,
}

impl TimeWarp {
    fn new(dt: f64, rate: Vec<f64>) -> Self {
        let mut at_node = Vec::with_capacity(rate.len());
        let mut t = 0.0;
        at_node.push(t);
        for w in rate.windows(2) {
            t += 0.5 * dt * (w[0] + w[1]);
            at_node.push(t);
        }
        Self { dt, rate, at_node }
    }

    fn total(&self) -> f64 {
        *self.at_node.last().unwrap_or(&0.0)
    }

    /// Source time `τ` reached at new time `t`, with `r(τ)` and `r'(τ)`.
    /// `hint` is the node to start searching from and is advanced.
    fn invert(&self, t: f64, hint: &mut usize) -> (f64, f64, f64) {
        let last = self.rate.len() - 1;
        while *hint + 1 < last && self.at_node[*hint + 1] <= t {
            *hint += 1;
        }
        let k = *hint;
        let r0 = self.rate[k];
        let slope = (self.rate[k + 1] - r0) / self.dt;
        let delta = (t - self.at_node[k]).max(0.0);
        // Root of r0·u + slope·u²/2 = delta in the cancellation-free form.
        let disc = (r0 * r0 + 2.0 * slope * delta).max(0.0);
        let u = (2.0 * delta / (r0 + disc.sqrt())).min(self.dt);
        (k as f64 * self.dt + u, r0 + slope * u, slope)
    }

    fn apply(&self, src: &Trajectory) -> (Trajectory, Vec<f64>) {
        let total = self.total();
        let dt0 = self.dt;
        let n_out = ((total / dt0).round() as usize).max(1) + 1;
        let dt = total / (n_out - 1) as f64;
        let t0 = src.samples[0].t;
        let mut hint = 0;
        let mut taus = Vec::with_capacity(n_out);
        let mut samples = Vec::with_capacity(n_out);
        for i in 0..n_out {
            let t = i as f64 * dt;
            if i == n_out - 1 {
                let end = src.end();
                samples.push(TrajectorySample {
                    t,
                    q: end.q,
                    qd: end.qd,
                    qdd: end.qdd,
                });
                taus.push(src.duration());
                continue;
            }
            let (tau, r, dr) = self.invert(t, &mut hint);
            let (q, qd_src, qdd_src) = src.interpolate(t0 + tau);
            samples.push(TrajectorySample {
                t,
                q,
                qd: qd_src / r,
                qdd: qdd_src / (r * r) - qd_src * (dr / (r * r * r)),
            });
            taus.push(tau);
        }
        (Trajectory { dt, samples }, taus)
    }
}

/// Smooths per-sample stretch factors into a continuous rate: each stretched
/// sample pulls its neighbours up linearly over `width` samples.
fn blended_rate(stretch: &[f64], width: usize) -> Vec<f64> {
    let n = stretch.len();
    let mut rate = vec![1.0; n];
    for (i, &m) in stretch.iter().enumerate() {
        if m <= 1.0 {
            continue;
        }
        let lo = i.saturating_sub(width);
        let hi = (i + width).min(n - 1);
        for (j, r) in rate.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let falloff = 1.0 - (i.abs_diff(j) as f64) / (width as f64 + 1.0);
            *r = f64::max(*r, 1.0 + (m - 1.0) * falloff);
        }
    }
    rate
}

fn only_motion_violations(model: &RobotModel, traj: &Trajectory) -> usize {
    validate_limits(model, traj)
        .iter()
        .filter(|v| v.quantity != LimitQuantity::Position)
        .count()
}

/// Retimes every stretch of the motion where the bus regenerates below
/// `p_floor`, slowing it until the bus stays at or above the floor.
///
/// The geometric joint path and both endpoints are kept; only timing
/// changes. Energies are reported with all regeneration burnt.
pub fn saturate_power(
    model: &RobotModel,
    traj: &Trajectory,
    payload: &Payload,
    p_floor: f64,
) -> Result<SaturationResult> {
    RegenPolicy::ReuseUpTo { p_floor }.validate()?;
    traj.check_structure()?;
    let threshold = p_floor + SATURATION_EPSILON;
    let (trace, e_grid_before, e_dissipated_before) = simulate(model, traj, payload)?;

    let violating = |trace: &PowerTrace| trace.samples.iter().any(|s| s.p_bus < threshold);
    if !violating(&trace) {
        return Ok(SaturationResult {
            traj_out: traj.clone(),
            e_grid_before,
            e_grid_after: e_grid_before,
            e_dissipated_before,
            e_dissipated_after: e_dissipated_before,
            e_grid_before_same_horizon: e_grid_before,
            iterations: 0,
            converged: true,
        });
    }

    let n = traj.samples.len();
    let baseline_violations = only_motion_violations(model, traj);
    let mut stretch = vec![1.0; n];
    let mut current = (
        traj.clone(),
        trace,
        (0..n).map(|i| i as f64 * traj.dt).collect::<Vec<_>>(),
    );
    // The input itself is a candidate, so dissipation can never get worse.
    let mut best = (traj.clone(), e_grid_before, e_dissipated_before);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_SATURATION_ITERATIONS {
        let (_, ref trace, ref taus) = current;
        let mut any = false;
        let mut k = 0;
        while k < trace.samples.len() {
            if trace.samples[k].p_bus >= threshold {
                k += 1;
                continue;
            }
            let start = k;
            while k < trace.samples.len() && trace.samples[k].p_bus < threshold {
                k += 1;
            }
            let tau_a = taus[start.saturating_sub(1)];
            let tau_b = taus[k.min(trace.samples.len() - 1)];
            let i0 = (tau_a / traj.dt).floor() as usize;
            let i1 = ((tau_b / traj.dt).ceil() as usize).min(n - 1);
            for s in &mut stretch[i0..=i1] {
                *s *= STRETCH_PER_ITERATION;
            }
            any = true;
        }
        if !any {
            converged = true;
            break;
        }
        iterations += 1;

        let mut candidate = None;
        for width in BLEND_WIDTHS {
            let w = ((width / traj.dt).round() as usize).max(1);
            let warp = TimeWarp::new(traj.dt, blended_rate(&stretch, w));
            let (out, taus) = warp.apply(traj);
            let ok = only_motion_violations(model, &out) <= baseline_violations;
            candidate = Some((out, taus));
            if ok {
                break;
            }
        }
        let (out, taus) = candidate.expect("at least one blend width");
        let (trace, e_grid, e_diss) = simulate(model, &out, payload)?;
        if e_diss < best.2 || (e_diss == best.2 && e_grid < best.1) {
            best = (out.clone(), e_grid, e_diss);
        }
        current = (out, trace, taus);
    }

    let (traj_out, e_grid_after, e_dissipated_after) = if converged {
        let (out, trace, _) = current;
        let report = integrate_energy(&trace)?;
        (out, report.e_grid, report.e_dissipated)
    } else {
        best
    };

    let extra = (traj_out.duration() - traj.duration()).max(0.0);
    let hold = standby_power(model, &traj.end().q, payload).unwrap_or(model.p_baseline);
    Ok(SaturationResult {
        e_grid_before_same_horizon: e_grid_before + hold * extra,
        traj_out,
        e_grid_before,
        e_grid_after,
        e_dissipated_before,
        e_dissipated_after,
        iterations,
        converged,
    })
}
