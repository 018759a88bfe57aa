//! Energy consumption simulation for lightweight 6-DOF serial manipulators.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`] holds the robot parameter file format and domain types,
//! * [`kinematics`] and [`dynamics`] implement the rigid-body model,
//! * [`power`] turns joint torques into electrical bus power and energy,
//! * [`motion`] plans joint- and Cartesian-linear moves and time-scales them,
//! * [`strategies`] implements the four energy-reduction strategies on top.
//!
//! All absolute watt figures produced with the shipped parameter files are
//! synthetic: the electrical parameters were fitted to a plausible idle power,
//! not measured.

pub mod dynamics;
pub mod error;
pub mod export;
pub mod fixtures;
pub mod kinematics;
pub mod model;
pub mod motion;
pub mod optim;
pub mod power;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{JointLimits, JointVector, LinkParams, MotorParams, Payload, Pose, RobotModel};
pub use motion::{MotionCommand, Trajectory, TrajectorySample};
pub use power::{EnergyReport, PowerSample, PowerTrace, RegenPolicy};

/// Number of joints of every model handled by this crate.
pub const DOF: usize = 6;
