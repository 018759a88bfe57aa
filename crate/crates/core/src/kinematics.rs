//! Forward kinematics, geometric Jacobian and damped least-squares IK.

use nalgebra::{Isometry3, Matrix3, Matrix6, Translation3, UnitQuaternion, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::model::{ensure_finite, JointVector, LinkParams, Pose, RobotModel};
use crate::DOF;

/// Transform from frame `i-1` to frame `i` for joint angle `q`.
pub fn link_transform(link: &LinkParams, q: f64) -> Isometry3<f64> {
    let (sa, ca) = link.dh_alpha.sin_cos();
    let translation = Translation3::new(link.dh_a, -sa * link.dh_d, ca * link.dh_d);
    let rotation = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), link.dh_alpha)
        * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q);
    Isometry3::from_parts(translation, rotation)
}

/// Base frame followed by the six joint frames; the last entry is the flange.
pub fn link_frames(model: &RobotModel, q: &JointVector) -> [Isometry3<f64>; DOF + 1] {
    let mut frames = [Isometry3::identity(); DOF + 1];
    for j in 0..DOF {
        frames[j + 1] = frames[j] * link_transform(&model.links[j], q[j]);
    }
    frames
}

pub fn forward_kinematics(model: &RobotModel, q: &JointVector) -> Pose {
    let flange = link_frames(model, q)[DOF];
    Pose::new(flange.translation.vector, flange.rotation)
}

/// Positions of the base and every joint frame origin, for stick-figure drawing.
pub fn joint_positions(model: &RobotModel, q: &JointVector) -> [Vector3<f64>; DOF + 1] {
    link_frames(model, q).map(|f| f.translation.vector)
}

/// Geometric Jacobian of the flange. Rows 0..3 map joint rates to linear
/// velocity, rows 3..6 to angular velocity, both in the base frame.
pub fn jacobian(model: &RobotModel, q: &JointVector) -> Matrix6<f64> {
    let frames = link_frames(model, q);
    let p_end = frames[DOF].translation.vector;
    let mut jac = Matrix6::zeros();
    for j in 0..DOF {
        let frame = &frames[j + 1];
        let z = frame.rotation * Vector3::z();
        let lin = z.cross(&(p_end - frame.translation.vector));
        jac.fixed_view_mut::<3, 1>(0, j).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, j).copy_from(&z);
    }
    jac
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))`, which for a square Jacobian is `|det J|`.
pub fn manipulability(jac: &Matrix6<f64>) -> f64 {
    jac.determinant().abs()
}

/// Pose error as a twist: position difference and rotation vector, both
/// expressed in the base frame.
pub fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.position - current.position;
    let dr = (target.orientation * current.orientation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub damping: f64,
    pub max_iterations: usize,
    pub manipulability_threshold: f64,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Largest joint step (rad, infinity norm) taken in one iteration.
    pub max_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 1e-3,
            max_iterations: 200,
            manipulability_threshold: 1e-6,
            position_tolerance: 1e-10,
            orientation_tolerance: 1e-10,
            max_step: 0.5,
        }
    }
}

pub fn inverse_kinematics(model: &RobotModel, target: &Pose, seed: &JointVector) -> Result<JointVector> {
    inverse_kinematics_with(model, target, seed, &IkOptions::default())
}

/// Damped least-squares continuation from `seed`.
///
/// Each step solves `dq = Jᵀ (J Jᵀ + λ² I)⁻¹ e`; no angle wrapping is applied,
/// so successive calls seeded with the previous answer stay on one branch.
pub fn inverse_kinematics_with(
    model: &RobotModel,
    target: &Pose,
    seed: &JointVector,
    opts: &IkOptions,
) -> Result<JointVector> {
    ensure_finite(seed, "IK seed")?;
    model.check_position_limits(seed)?;
    if !target.position.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("IK target"));
    }

    let converged = |e: &Vector6<f64>| {
        e.fixed_rows::<3>(0).norm() <= opts.position_tolerance
            && e.fixed_rows::<3>(3).norm() <= opts.orientation_tolerance
    };

    let lambda2 = opts.damping * opts.damping;
    let mut q = *seed;
    let mut err = pose_error(&forward_kinematics(model, &q), target);
    let mut iterations = 0;
    while !converged(&err) {
        if iterations == opts.max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual: err.norm(),
            });
        }
        let jac = jacobian(model, &q);
        let jjt = jac * jac.transpose() + Matrix6::identity() * lambda2;
        let Some(y) = jjt.cholesky().map(|c| c.solve(&err)) else {
            return Err(Error::NearSingularity { manipulability: 0.0 });
        };
        let mut dq = jac.transpose() * y;
        let step = dq.amax();
        if step > opts.max_step {
            dq *= opts.max_step / step;
        }
        q += dq;
        err = pose_error(&forward_kinematics(model, &q), target);
        iterations += 1;
    }

    let w = manipulability(&jacobian(model, &q));
    if w < opts.manipulability_threshold {
        return Err(Error::NearSingularity { manipulability: w });
    }
    model.check_position_limits(&q)?;
    Ok(q)
}

/// Rotation matrix helper used by tests and fixtures.
pub fn rotation_matrix(pose: &Pose) -> Matrix3<f64> {
    pose.orientation.to_rotation_matrix().into_inner()
}
