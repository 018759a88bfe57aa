//! Reduced analytic models and the canonical fixture suite.
//!
//! The reduced models pad unused joints with massless, zero-length links so
//! they share the 6-DOF machinery while keeping closed-form answers. The
//! poses and moves of the fixture suite were chosen by hand for this crate;
//! they are not taken from any published experiment, and every number they
//! produce is synthetic.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::model::{
    DhConvention, JointLimits, JointVector, LinkParams, MotorParams, Payload, RobotModel, RobotSchemaV1,
    DEFAULT_GRAVITY,
};
use crate::DOF;

fn ideal_motor(kt_eff: f64, r_winding: f64) -> MotorParams {
    MotorParams {
        kt_eff,
        r_winding,
        visc_friction: 0.0,
        coul_friction: 0.0,
        thermal_res: 1.0,
        thermal_tau: 60.0,
    }
}

fn wide_limits() -> [JointLimits; DOF] {
    [JointLimits {
        q_min: -PI,
        q_max: PI,
        v_max: 10.0,
        a_max: 50.0,
    }; DOF]
}

fn reduced(name: &str, links: [LinkParams; DOF], gravity: [f64; 3], p_baseline: f64) -> RobotModel {
    RobotModel {
        schema: RobotSchemaV1,
        convention: DhConvention::ModifiedDh,
        name: name.to_string(),
        description: "reduced analytic test model".to_string(),
        gravity,
        p_baseline,
        ambient_temp: 25.0,
        links,
        motors: [ideal_motor(10.0, 1.0); DOF],
        limits: wide_limits(),
    }
}

fn empty_links() -> [LinkParams; DOF] {
    [LinkParams::kinematic(0.0, 0.0, 0.0); DOF]
}

fn rod_inertia(izz: f64) -> [[f64; 3]; 3] {
    [[izz / 2.0, 0.0, 0.0], [0.0, izz / 2.0, 0.0], [0.0, 0.0, izz]]
}

/// One joint about the vertical axis with the flange `length` along the
/// link x axis. A point mass sits at `com` on that axis.
pub fn planar_one_link(length: f64, mass: f64, com: f64) -> RobotModel {
    let mut links = empty_links();
    links[0].mass = mass;
    links[0].com = [com, 0.0, 0.0];
    links[1].dh_a = length;
    reduced("planar-1", links, DEFAULT_GRAVITY, 0.0)
}

/// Single-joint pendulum: point mass `mass` at radius `radius`, gravity along
/// +x of the base so that `q1 = 0` hangs straight down. Drives have
/// `kt_eff = 10`, `r_winding = 1`, no friction, and the controller idles at 50 W.
pub fn pendulum(mass: f64, radius: f64) -> RobotModel {
    let mut links = empty_links();
    links[0].mass = mass;
    links[0].com = [radius, 0.0, 0.0];
    links[1].dh_a = radius;
    reduced("pendulum", links, [9.81, 0.0, 0.0], 50.0)
}

/// Two-link planar arm in the x-y plane with gravity along -y.
#[derive(Debug, Clone, Copy)]
pub struct TwoLink {
    pub m1: f64,
    pub l1: f64,
    pub lc1: f64,
    pub i1: f64,
    pub m2: f64,
    pub l2: f64,
    pub lc2: f64,
    pub i2: f64,
    pub g: f64,
}

impl Default for TwoLink {
    fn default() -> Self {
        Self {
            m1: 3.0,
            l1: 0.6,
            lc1: 0.25,
            i1: 0.09,
            m2: 1.5,
            l2: 0.5,
            lc2: 0.2,
            i2: 0.03,
            g: 9.81,
        }
    }
}

impl TwoLink {
    pub fn model(&self) -> RobotModel {
        let mut links = empty_links();
        links[0].mass = self.m1;
        links[0].com = [self.lc1, 0.0, 0.0];
        links[0].inertia = rod_inertia(self.i1);
        links[1].dh_a = self.l1;
        links[1].mass = self.m2;
        links[1].com = [self.lc2, 0.0, 0.0];
        links[1].inertia = rod_inertia(self.i2);
        links[2].dh_a = self.l2;
        reduced("planar-2", links, [0.0, -self.g, 0.0], 20.0)
    }
}

/// A single vertical-axis joint carrying a rotor of inertia `inertia` on its
/// axis: no gravity torque, no friction, copper loss only, idle power `p_baseline`.
pub fn inertia_joint(inertia: f64, kt_eff: f64, r_winding: f64, p_baseline: f64) -> RobotModel {
    let mut links = empty_links();
    links[0].mass = 1.0;
    links[0].inertia = rod_inertia(inertia);
    links[1].dh_a = 0.3;
    let mut m = reduced("inertia-joint", links, DEFAULT_GRAVITY, p_baseline);
    m.motors[0] = ideal_motor(kt_eff, r_winding);
    m
}

/// A typical working configuration of the UR-like arms: upper arm raised,
/// forearm reaching forward, tool pointing down.
pub fn ur_work_pose() -> JointVector {
    JointVector::new(0.0, -1.2, 1.5, -1.87, -FRAC_PI_2, 0.0)
}

/// Reference pose against which standby savings are reported: upper arm
/// vertical, forearm horizontal, tool pointing down.
pub fn standby_reference_pose() -> JointVector {
    JointVector::new(0.0, -FRAC_PI_2, FRAC_PI_2, -FRAC_PI_2, -FRAC_PI_2, 0.0)
}

/// How the goal of a fixture move is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MoveGoal {
    /// Absolute joint target.
    Joints([f64; DOF]),
    /// Tool translation in the base frame with unchanged orientation; the
    /// joint target is resolved by inverse kinematics from the start.
    CartesianOffset([f64; 3]),
}

/// A named start configuration plus goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureMove {
    pub name: String,
    pub start: [f64; DOF],
    pub goal: MoveGoal,
}

impl FixtureMove {
    pub fn start_vector(&self) -> JointVector {
        JointVector::from(self.start)
    }

    /// Joint-space goal, solving IK for Cartesian offsets.
    pub fn resolve_goal(&self, model: &RobotModel) -> crate::Result<JointVector> {
        match self.goal {
            MoveGoal::Joints(q) => Ok(JointVector::from(q)),
            MoveGoal::CartesianOffset(d) => {
                let start = self.start_vector();
                let pose = crate::kinematics::forward_kinematics(model, &start);
                let target = crate::Pose::new(pose.position + Vector3::from(d), pose.orientation);
                crate::kinematics::inverse_kinematics(model, &target, &start)
            }
        }
    }
}

/// Six canonical moves for the UR-like arms: vertical lift, vertical descent,
/// horizontal sweep, near-singular reach, wrist reorientation and a base
/// rotation.
pub fn canonical_moves() -> Vec<FixtureMove> {
    let work = ur_work_pose();
    let w: [f64; DOF] = work.into();
    vec![
        FixtureMove {
            name: "vertical-lift".into(),
            start: w,
            goal: MoveGoal::CartesianOffset([0.0, 0.0, 0.3]),
        },
        FixtureMove {
            name: "vertical-descent".into(),
            start: descent_start().into(),
            goal: MoveGoal::CartesianOffset([0.0, 0.0, -0.5]),
        },
        FixtureMove {
            name: "horizontal-sweep".into(),
            start: w,
            goal: MoveGoal::CartesianOffset([0.0, 0.4, 0.0]),
        },
        FixtureMove {
            name: "near-singular-reach".into(),
            start: w,
            goal: MoveGoal::Joints([0.0, -0.5, 0.25, -1.32, -FRAC_PI_2, 0.0]),
        },
        FixtureMove {
            name: "wrist-reorientation".into(),
            start: command_pair().0.into(),
            goal: MoveGoal::Joints(command_pair().1.into()),
        },
        FixtureMove {
            name: "base-rotation".into(),
            start: w,
            goal: MoveGoal::Joints([1.2, -1.2, 1.5, -1.87, -FRAC_PI_2, 0.0]),
        },
    ]
}

/// Start of the vertical descent fixture: tool high above the table,
/// pointing down.
pub fn descent_start() -> JointVector {
    JointVector::new(0.0, -1.6, 1.3, -1.27, -FRAC_PI_2, 0.0)
}

/// Joint-space endpoints whose straight Cartesian connection needs a large
/// wrist reconfiguration.
pub fn command_pair() -> (JointVector, JointVector) {
    (
        JointVector::new(-0.6, -1.3, 1.6, -1.9, -FRAC_PI_2, 0.0),
        JointVector::new(0.6, -1.0, 1.2, -0.9, -1.0, 1.2),
    )
}

/// Payloads used by the fixture suite, kg.
pub const FIXTURE_PAYLOADS: [f64; 2] = [0.0, 5.0];

pub fn payload(mass: f64) -> Payload {
    Payload {
        mass,
        com_offset: [0.0, 0.0, 0.05],
    }
}

/// The high-speed command setting used by the fixture suite: joint moves
/// capped only by the joint velocity maxima at 14 rad/s², linear moves at
/// 1 m/s and 5 m/s².
pub fn high_speed() -> crate::strategies::CommandSpeeds {
    crate::strategies::CommandSpeeds {
        v_joint: 3.2,
        a_joint: 14.0,
        v_linear: 1.0,
        a_linear: 5.0,
    }
}

/// The vertical descent as a fast joint move with the fixture payload.
pub fn descent_trajectory(model: &RobotModel) -> crate::Result<crate::Trajectory> {
    let mv = canonical_moves()
        .into_iter()
        .find(|m| m.name == "vertical-descent")
        .expect("descent fixture");
    let speeds = high_speed();
    crate::motion::plan_movej(
        model,
        &mv.start_vector(),
        &mv.resolve_goal(model)?,
        speeds.v_joint,
        speeds.a_joint,
    )
}

/// Payload carried during the descent fixture, kg.
pub const DESCENT_PAYLOAD: f64 = 5.0;

/// Start configuration and target of a 40 mm tool translation whose midpoint
/// is exactly a wrist-singular pose (`q5 = 0`) of the UR-like arms.
pub fn wrist_singular_line(model: &RobotModel) -> crate::Result<(JointVector, crate::Pose)> {
    let singular = JointVector::new(0.0, -1.2, 1.5, -1.87, 0.0, 0.0);
    let pose = crate::kinematics::forward_kinematics(model, &singular);
    let offset = Vector3::new(0.0, 0.02, 0.0);
    let start = crate::Pose::new(pose.position - offset, pose.orientation);
    let end = crate::Pose::new(pose.position + offset, pose.orientation);
    let mut seed = singular;
    seed[4] = 0.1;
    let q_start = crate::kinematics::inverse_kinematics(model, &start, &seed)?;
    Ok((q_start, end))
}
