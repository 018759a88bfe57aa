//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls the recursive dynamics; each oracle is either a closed
//! form or a numerical scheme of a different kind than the code under test.

#![allow(dead_code)]

use cobot_energy::dynamics::{inverse_dynamics, kinetic_energy, potential_energy};
use cobot_energy::fixtures::TwoLink;
use cobot_energy::motion::TrapezoidProfile;
use cobot_energy::{JointVector, Payload, RobotModel};
use rand::Rng;

/// Closed-form Lagrangian torques of the planar two-link arm with gravity
/// along -y, joint angles measured from +x.
pub fn two_link_torque(p: &TwoLink, q: [f64; 2], qd: [f64; 2], qdd: [f64; 2]) -> [f64; 2] {
    let (c1, c2, c12) = (q[0].cos(), q[1].cos(), (q[0] + q[1]).cos());
    let s2 = q[1].sin();
    let m11 = p.m1 * p.lc1 * p.lc1 + p.i1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2.0 * p.l1 * p.lc2 * c2) + p.i2;
    let m12 = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.i2;
    let m22 = p.m2 * p.lc2 * p.lc2 + p.i2;
    let h = p.m2 * p.l1 * p.lc2 * s2;
    let g1 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * c1 + p.m2 * p.lc2 * p.g * c12;
    let g2 = p.m2 * p.lc2 * p.g * c12;
    [
        m11 * qdd[0] + m12 * qdd[1] - h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]) + g1,
        m12 * qdd[0] + m22 * qdd[1] + h * qd[0] * qd[0] + g2,
    ]
}

/// Nodes and weights of `n`-point Gauss–Legendre quadrature on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Mechanical work balance of a synchronized joint move along the
/// continuous profile `s(t)`.
pub struct WorkBalance {
    /// ∫ Σ τ·q̇ dt
    pub work: f64,
    /// Change of kinetic plus potential energy.
    pub delta_energy: f64,
    /// ∫ |Σ τ·q̇| dt
    pub gross_work: f64,
}

impl WorkBalance {
    pub fn relative_error(&self) -> f64 {
        (self.work - self.delta_energy).abs() / self.delta_energy.abs().max(self.gross_work)
    }
}

/// Integrates the mechanical power of `q0 + s(t)·(q1 − q0)` phase by phase
/// with composite Gauss–Legendre quadrature, so no quadrature node sits on
/// an acceleration switch.
pub fn work_balance(
    model: &RobotModel,
    profile: &TrapezoidProfile,
    q0: &JointVector,
    q1: &JointVector,
    payload: &Payload,
) -> WorkBalance {
    let rule = gauss_legendre(8);
    let delta = q1 - q0;
    let power = |t: f64| {
        let (s, sd, sdd) = profile.eval(t);
        let q = q0 + delta * s;
        let qd = delta * sd;
        inverse_dynamics(model, &q, &qd, &(delta * sdd), payload).dot(&qd)
    };
    let times = profile.phase_times();
    let (mut work, mut gross) = (0.0, 0.0);
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let pieces = 16;
        let h = (b - a) / pieces as f64;
        for k in 0..pieces {
            let mid = a + (k as f64 + 0.5) * h;
            for &(x, wt) in &rule {
                let p = power(mid + 0.5 * h * x);
                work += 0.5 * h * wt * p;
                gross += 0.5 * h * wt * p.abs();
            }
        }
    }
    let zero = JointVector::zeros();
    let e0 = kinetic_energy(model, q0, &zero, payload) + potential_energy(model, q0, payload);
    let e1 = kinetic_energy(model, q1, &zero, payload) + potential_energy(model, q1, payload);
    WorkBalance {
        work,
        delta_energy: e1 - e0,
        gross_work: gross,
    }
}

/// Central-difference gradient of the potential energy, step `h` rad.
pub fn potential_gradient(model: &RobotModel, q: &JointVector, payload: &Payload, h: f64) -> JointVector {
    JointVector::from_fn(|j, _| {
        let mut plus = *q;
        let mut minus = *q;
        plus[j] += h;
        minus[j] -= h;
        (potential_energy(model, &plus, payload) - potential_energy(model, &minus, payload)) / (2.0 * h)
    })
}

/// A configuration drawn uniformly from `fraction` of each joint range,
/// centred in the range.
pub fn random_config(model: &RobotModel, rng: &mut impl Rng, fraction: f64) -> JointVector {
    JointVector::from_fn(|j, _| {
        let lim = &model.limits[j];
        let mid = 0.5 * (lim.q_min + lim.q_max);
        let half = 0.5 * fraction * (lim.q_max - lim.q_min);
        rng.random_range(mid - half..=mid + half)
    })
}

/// Energy of the analytic single-joint motion: copper loss of a trapezoid
/// falling as `c/T³` plus idle power `p0·T`. `c` follows from the base
/// profile: accelerating torque `J·a0` held for `2·t_a0`.
pub struct InertiaJointCurve {
    pub c: f64,
    pub p0: f64,
}

impl InertiaJointCurve {
    pub fn new(inertia: f64, kt: f64, r: f64, p0: f64, t_a0: f64, a0: f64, t0: f64) -> Self {
        let i = inertia * a0 / kt;
        Self {
            c: 2.0 * t_a0 * i * i * r * t0.powi(3),
            p0,
        }
    }

    pub fn energy(&self, t: f64) -> f64 {
        self.c / t.powi(3) + self.p0 * t
    }

    pub fn t_star(&self) -> f64 {
        (3.0 * self.c / self.p0).powf(0.25)
    }
}

/// Every index whose value lies within `tol` of the minimum.
pub fn near_argmins(values: &[f64], tol: f64) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (0..values.len()).filter(|&i| values[i] <= min + tol).collect()
}
