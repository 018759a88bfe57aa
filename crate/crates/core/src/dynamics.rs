//! Recursive Newton–Euler inverse dynamics and mechanical energy helpers.
//!
//! Torques here are rigid-body torques only; drive friction is applied by
//! the power model.

use nalgebra::{Matrix6, Point3, Rotation3, Vector3};

use crate::kinematics::{link_frames, link_transform};
use crate::model::{links_with_payload, JointVector, LinkParams, Payload, RobotModel};
use crate::DOF;

/// Joint torques for the prescribed motion, payload included as a point mass
/// at the flange offset.
pub fn inverse_dynamics(
    model: &RobotModel,
    q: &JointVector,
    qd: &JointVector,
    qdd: &JointVector,
    payload: &Payload,
) -> JointVector {
    let links = links_with_payload(model, payload);
    rnea(&links, q, qd, qdd, &model.gravity_vector())
}

/// Velocity- and acceleration-dependent torques only (gravity switched off).
/// Under a uniform time scale `k` these scale exactly by `1/k²`.
pub fn inertial_torque(
    model: &RobotModel,
    q: &JointVector,
    qd: &JointVector,
    qdd: &JointVector,
    payload: &Payload,
) -> JointVector {
    let links = links_with_payload(model, payload);
    rnea(&links, q, qd, qdd, &Vector3::zeros())
}

pub fn gravity_torque(model: &RobotModel, q: &JointVector, payload: &Payload) -> JointVector {
    let zero = JointVector::zeros();
    inverse_dynamics(model, q, &zero, &zero, payload)
}

/// Joint-space mass matrix assembled column by column from unit-acceleration
/// probes with gravity switched off.
pub fn mass_matrix(model: &RobotModel, q: &JointVector, payload: &Payload) -> Matrix6<f64> {
    let links = links_with_payload(model, payload);
    let zero = JointVector::zeros();
    let mut m = Matrix6::zeros();
    for j in 0..DOF {
        let mut e = JointVector::zeros();
        e[j] = 1.0;
        m.set_column(j, &rnea(&links, q, &zero, &e, &Vector3::zeros()));
    }
    m
}

fn rnea(
    links: &[LinkParams; DOF],
    q: &JointVector,
    qd: &JointVector,
    qdd: &JointVector,
    gravity: &Vector3<f64>,
) -> JointVector {
    let z = Vector3::z();

    // Outward pass; every quantity is expressed in its own link frame.
    let mut w = Vector3::zeros();
    let mut wd = Vector3::zeros();
    // A base acceleration of -g applies gravity to every link.
    let mut vd = -gravity;
    let mut rot = [Rotation3::identity(); DOF];
    let mut pos = [Vector3::zeros(); DOF];
    let mut force = [Vector3::zeros(); DOF];
    let mut moment = [Vector3::zeros(); DOF];

    for i in 0..DOF {
        let t = link_transform(&links[i], q[i]);
        let r = t.rotation.to_rotation_matrix();
        let p = t.translation.vector;
        let rt = r.transpose();

        let vd_origin = rt * (wd.cross(&p) + w.cross(&w.cross(&p)) + vd);
        let w_parent = rt * w;
        w = w_parent + z * qd[i];
        wd = rt * wd + w_parent.cross(&(z * qd[i])) + z * qdd[i];
        vd = vd_origin;

        let link = &links[i];
        let c = link.com_vector();
        let vdc = wd.cross(&c) + w.cross(&w.cross(&c)) + vd;
        let inertia = link.inertia_matrix();
        force[i] = vdc * link.mass;
        moment[i] = inertia * wd + w.cross(&(inertia * w));
        rot[i] = r;
        pos[i] = p;
    }

    // Inward pass.
    let mut f = Vector3::zeros();
    let mut n = Vector3::zeros();
    let mut tau = JointVector::zeros();
    for i in (0..DOF).rev() {
        let c = links[i].com_vector();
        let (f_child, n_child) = if i + 1 < DOF {
            let rc = rot[i + 1];
            let fc = rc * f;
            (fc, rc * n + pos[i + 1].cross(&fc))
        } else {
            (Vector3::zeros(), Vector3::zeros())
        };
        n = moment[i] + n_child + c.cross(&force[i]);
        f = force[i] + f_child;
        tau[i] = n.z;
    }
    tau
}

/// Gravitational potential energy of all links and the payload, J.
pub fn potential_energy(model: &RobotModel, q: &JointVector, payload: &Payload) -> f64 {
    let links = links_with_payload(model, payload);
    let frames = link_frames(model, q);
    let g = model.gravity_vector();
    links
        .iter()
        .enumerate()
        .map(|(i, link)| {
            let c = frames[i + 1] * Point3::from(link.com_vector());
            -link.mass * g.dot(&c.coords)
        })
        .sum()
}

/// Kinetic energy from link centre-of-mass Jacobians, J.
///
/// Computed from base-frame geometry rather than the Newton–Euler recursion
/// so that the two can be checked against each other.
pub fn kinetic_energy(model: &RobotModel, q: &JointVector, qd: &JointVector, payload: &Payload) -> f64 {
    let links = links_with_payload(model, payload);
    let frames = link_frames(model, q);
    let axes: Vec<(Vector3<f64>, Vector3<f64>)> = (0..DOF)
        .map(|j| (frames[j + 1].rotation * Vector3::z(), frames[j + 1].translation.vector))
        .collect();
    let mut ke = 0.0;
    for (i, link) in links.iter().enumerate() {
        let frame = &frames[i + 1];
        let c = (frame * Point3::from(link.com_vector())).coords;
        let mut v = Vector3::zeros();
        let mut w = Vector3::zeros();
        for (j, (z, p)) in axes.iter().enumerate().take(i + 1) {
            v += z.cross(&(c - p)) * qd[j];
            w += z * qd[j];
        }
        let r = frame.rotation.to_rotation_matrix();
        let inertia_world = r * link.inertia_matrix() * r.transpose();
        ke += 0.5 * link.mass * v.norm_squared() + 0.5 * w.dot(&(inertia_world * w));
    }
    ke
}
