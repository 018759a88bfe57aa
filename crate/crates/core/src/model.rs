//! Robot parameter model and the `robot-v1` JSON parameter file format.
//!
//! Kinematics use modified (Craig) Denavit–Hartenberg parameters: the
//! transform from frame `i-1` to frame `i` is
//! `RotX(dh_alpha) · TransX(dh_a) · RotZ(q_i) · TransZ(dh_d)`, so the entries
//! of link `i` are `alpha_{i-1}`, `a_{i-1}` and `d_i`. Joint angles of zero
//! correspond to the datasheet zero pose. Frame 6 is the tool flange.

use nalgebra::{Matrix3, SymmetricEigen, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::DOF;

/// Joint angles (rad), velocities or accelerations for the six joints.
pub type JointVector = Vector6<f64>;

pub(crate) fn ensure_finite(q: &JointVector, what: &'static str) -> Result<()> {
    if q.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Tool flange pose in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    /// Euclidean position distance and rotation angle between two poses.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        (
            (self.position - other.position).norm(),
            rotation_angle(&self.orientation, &other.orientation),
        )
    }
}

/// Angle of the rotation taking `a` to `b`, in `[0, π]`.
///
/// The `atan2` form stays accurate for tiny angles, where `acos` of the
/// scalar part would turn rounding noise into ~1e-8 rad.
pub fn rotation_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let rel = a.inverse() * b;
    2.0 * rel.imag().norm().atan2(rel.scalar().abs())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRepr {
    position: [f64; 3],
    /// `[w, x, y, z]`
    orientation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let q = self.orientation.quaternion();
        PoseRepr {
            position: self.position.into(),
            orientation: [q.w, q.i, q.j, q.k],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        let [w, x, y, z] = repr.orientation;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(serde::de::Error::custom(format!(
                "orientation quaternion norm {} is not 1",
                q.norm()
            )));
        }
        Ok(Pose {
            position: Vector3::from(repr.position),
            orientation: UnitQuaternion::new_unchecked(q),
        })
    }
}

/// Geometry and rigid-body inertia of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub dh_a: f64,
    pub dh_d: f64,
    pub dh_alpha: f64,
    pub mass: f64,
    /// Centre of mass in the link frame, m.
    pub com: [f64; 3],
    /// Inertia about the centre of mass, link frame axes, kg·m².
    pub inertia: [[f64; 3]; 3],
}

impl LinkParams {
    /// A massless link with only kinematic parameters.
    pub fn kinematic(dh_a: f64, dh_d: f64, dh_alpha: f64) -> Self {
        Self {
            dh_a,
            dh_d,
            dh_alpha,
            mass: 0.0,
            com: [0.0; 3],
            inertia: [[0.0; 3]; 3],
        }
    }

    pub fn com_vector(&self) -> Vector3<f64> {
        Vector3::from(self.com)
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        let i = &self.inertia;
        Matrix3::new(
            i[0][0], i[0][1], i[0][2], i[1][0], i[1][1], i[1][2], i[2][0], i[2][1], i[2][2],
        )
    }
}

/// Joint-referred drive parameters (motor and gearbox lumped together).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorParams {
    /// Joint-side torque per ampere of motor current, N·m/A.
    pub kt_eff: f64,
    /// Winding resistance seen by the joint current, Ω.
    pub r_winding: f64,
    /// N·m·s/rad
    pub visc_friction: f64,
    /// N·m
    pub coul_friction: f64,
    /// K/W
    pub thermal_res: f64,
    /// s
    pub thermal_tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimits {
    pub q_min: f64,
    pub q_max: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl JointLimits {
    pub fn contains(&self, q: f64) -> bool {
        q >= self.q_min && q <= self.q_max
    }
}

/// Marker that (de)serializes as the literal schema tag `"robot-v1"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RobotSchemaV1;

const ROBOT_SCHEMA: &str = "robot-v1";

impl Serialize for RobotSchemaV1 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(ROBOT_SCHEMA)
    }
}

impl<'de> Deserialize<'de> for RobotSchemaV1 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let tag = String::deserialize(deserializer)?;
        if tag == ROBOT_SCHEMA {
            Ok(RobotSchemaV1)
        } else {
            Err(serde::de::Error::custom(format!(
                "unsupported schema {tag:?}, expected {ROBOT_SCHEMA:?}"
            )))
        }
    }
}

/// Convention tag stored in the file header; only modified DH is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DhConvention {
    #[default]
    #[serde(rename = "modified-dh")]
    ModifiedDh,
}

/// Kinematic, inertial, electrical and limit parameters of a 6-DOF arm.
///
/// Immutable after loading; every operation in this crate takes it by
/// shared reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModel {
    pub schema: RobotSchemaV1,
    pub convention: DhConvention,
    pub name: String,
    /// Free-form provenance note.
    pub description: String,
    /// m/s²
    pub gravity: [f64; 3],
    /// Controller idle power, W.
    pub p_baseline: f64,
    /// Ambient temperature used as the initial winding temperature, °C.
    pub ambient_temp: f64,
    pub links: [LinkParams; DOF],
    pub motors: [MotorParams; DOF],
    pub limits: [JointLimits; DOF],
}

pub const DEFAULT_GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];

const UR10E_JSON: &str = include_str!("../robots/ur10e-like.json");
const UR3E_JSON: &str = include_str!("../robots/ur3e-like.json");

impl RobotModel {
    /// Names accepted by [`RobotModel::builtin`].
    pub const BUILTINS: [&'static str; 2] = ["ur10e-like", "ur3e-like"];

    /// Parses and validates a `robot-v1` JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: RobotModel = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    /// Canonical serialization: pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("robot model serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// One of the parameter files shipped with the crate.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "ur10e-like" => Self::from_json(UR10E_JSON),
            "ur3e-like" => Self::from_json(UR3E_JSON),
            other => Err(Error::InvalidArgument(format!("unknown builtin robot {other:?}"))),
        }
    }

    /// The raw text of a shipped parameter file.
    pub fn builtin_source(name: &str) -> Option<&'static str> {
        match name {
            "ur10e-like" => Some(UR10E_JSON),
            "ur3e-like" => Some(UR3E_JSON),
            _ => None,
        }
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !(self.p_baseline.is_finite() && self.p_baseline >= 0.0) {
            return bad(format!("p_baseline must be >= 0, got {}", self.p_baseline));
        }
        if !self.gravity.iter().all(|g| g.is_finite()) || !self.ambient_temp.is_finite() {
            return bad("gravity and ambient_temp must be finite".into());
        }
        for (j, link) in self.links.iter().enumerate() {
            let finite = [link.dh_a, link.dh_d, link.dh_alpha, link.mass]
                .iter()
                .chain(link.com.iter())
                .chain(link.inertia.iter().flatten())
                .all(|v| v.is_finite());
            if !finite {
                return bad(format!("link {}: non-finite parameter", j + 1));
            }
            if link.mass < 0.0 {
                return bad(format!("link {}: negative mass", j + 1));
            }
            let inertia = link.inertia_matrix();
            if (inertia - inertia.transpose()).abs().max() > 1e-12 {
                return bad(format!("link {}: inertia is not symmetric", j + 1));
            }
            let eig = SymmetricEigen::new(inertia).eigenvalues;
            if eig.min() < -1e-12 {
                return bad(format!("link {}: inertia is not positive semi-definite", j + 1));
            }
        }
        for (j, m) in self.motors.iter().enumerate() {
            let ok = m.kt_eff > 0.0
                && m.r_winding >= 0.0
                && m.visc_friction >= 0.0
                && m.coul_friction >= 0.0
                && m.thermal_res > 0.0
                && m.thermal_tau > 0.0
                && [m.kt_eff, m.r_winding, m.visc_friction, m.coul_friction]
                    .iter()
                    .all(|v| v.is_finite());
            if !ok {
                return bad(format!("motor {}: parameters out of range", j + 1));
            }
        }
        for (j, l) in self.limits.iter().enumerate() {
            if !(l.q_min < l.q_max && l.v_max > 0.0 && l.a_max > 0.0) {
                return bad(format!("joint {}: limits out of range", j + 1));
            }
        }
        Ok(())
    }

    /// Returns `LimitViolation` for the first joint outside its position range.
    pub fn check_position_limits(&self, q: &JointVector) -> Result<()> {
        ensure_finite(q, "joint vector")?;
        for (j, l) in self.limits.iter().enumerate() {
            if !l.contains(q[j]) {
                return Err(Error::LimitViolation {
                    joint: j + 1,
                    value: q[j],
                    min: l.q_min,
                    max: l.q_max,
                });
            }
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        self.check_position_limits(q).is_ok()
    }

    /// A copy with all electrical losses, friction and the idle power removed.
    pub fn lossless(&self) -> Self {
        let mut m = self.clone();
        m.p_baseline = 0.0;
        for motor in &mut m.motors {
            motor.r_winding = 0.0;
            motor.visc_friction = 0.0;
            motor.coul_friction = 0.0;
        }
        m
    }
}

/// Point-mass payload attached to the tool flange.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    pub mass: f64,
    /// Offset from the flange origin in flange coordinates, m.
    pub com_offset: [f64; 3],
}

impl Payload {
    pub const NONE: Payload = Payload {
        mass: 0.0,
        com_offset: [0.0; 3],
    };

    pub fn new(mass: f64, com_offset: [f64; 3]) -> Result<Self> {
        let p = Payload { mass, com_offset };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass >= 0.0) || !self.com_offset.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "payload mass must be finite and >= 0, got {}",
                self.mass
            )));
        }
        Ok(())
    }
}

/// Link parameters with the payload lumped into the last link.
pub(crate) fn links_with_payload(model: &RobotModel, payload: &Payload) -> [LinkParams; DOF] {
    let mut links = model.links;
    if payload.mass <= 0.0 {
        return links;
    }
    let last = &mut links[DOF - 1];
    let m_link = last.mass;
    let m_total = m_link + payload.mass;
    let c_link = last.com_vector();
    let c_load = Vector3::from(payload.com_offset);
    let c = (c_link * m_link + c_load * payload.mass) / m_total;
    let shift =
        |m: f64, d: Vector3<f64>| -> Matrix3<f64> { (Matrix3::identity() * d.norm_squared() - d * d.transpose()) * m };
    let inertia = last.inertia_matrix() + shift(m_link, c_link - c) + shift(payload.mass, c_load - c);
    last.mass = m_total;
    last.com = c.into();
    for r in 0..3 {
        for k in 0..3 {
            last.inertia[r][k] = inertia[(r, k)];
        }
    }
    links
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_files_are_canonical() {
        for name in RobotModel::BUILTINS {
            let src = RobotModel::builtin_source(name).unwrap();
            let model = RobotModel::from_json(src).unwrap();
            assert_eq!(model.name, name);
            assert_eq!(model.to_json(), src, "{name} is not in canonical form");
            assert_eq!(RobotModel::from_json(&model.to_json()).unwrap(), model);
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let src = RobotModel::builtin_source("ur3e-like").unwrap();
        let tampered = src.replacen("\"name\"", "\"colour\": \"blue\",\n  \"name\"", 1);
        assert!(matches!(RobotModel::from_json(&tampered), Err(Error::Parse(_))));
    }

    #[test]
    fn wrong_schema_tag_is_rejected() {
        let src = RobotModel::builtin_source("ur3e-like").unwrap();
        let tampered = src.replacen("robot-v1", "robot-v2", 1);
        let err = RobotModel::from_json(&tampered).unwrap_err();
        assert!(err.to_string().contains("robot-v2"));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut m = RobotModel::builtin("ur3e-like").unwrap();
        m.motors[2].kt_eff = 0.0;
        assert!(matches!(m.validate(), Err(Error::InvalidModel(_))));

        let mut m = RobotModel::builtin("ur3e-like").unwrap();
        m.links[1].inertia[0][1] = 0.5;
        assert!(m.validate().is_err());

        let mut m = RobotModel::builtin("ur3e-like").unwrap();
        m.limits[0].q_min = m.limits[0].q_max;
        assert!(m.validate().is_err());

        let mut m = RobotModel::builtin("ur3e-like").unwrap();
        m.p_baseline = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn pose_rejects_non_unit_quaternion() {
        let bad = r#"{"position":[0,0,0],"orientation":[1.0,0.1,0,0]}"#;
        assert!(serde_json::from_str::<Pose>(bad).is_err());
        let good = r#"{"position":[0,0,0],"orientation":[1.0,0,0,0]}"#;
        assert!(serde_json::from_str::<Pose>(good).is_ok());
    }

    #[test]
    fn payload_lumping_preserves_mass_and_first_moment() {
        let m = RobotModel::builtin("ur10e-like").unwrap();
        let p = Payload::new(5.0, [0.0, 0.02, 0.1]).unwrap();
        let links = links_with_payload(&m, &p);
        let last = &links[5];
        assert!((last.mass - (m.links[5].mass + 5.0)).abs() < 1e-12);
        let moment = last.com_vector() * last.mass;
        let expected = m.links[5].com_vector() * m.links[5].mass + Vector3::new(0.0, 0.1, 0.5);
        assert!((moment - expected).norm() < 1e-12);
    }

    #[test]
    fn negative_payload_rejected() {
        assert!(Payload::new(-0.1, [0.0; 3]).is_err());
    }
}
