use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid robot parameters: {0}")]
    InvalidModel(String),

    #[error("failed to parse robot parameter file: {0}")]
    Parse(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("inverse kinematics did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("configuration is near a singularity (manipulability {manipulability:.3e})")]
    NearSingularity { manipulability: f64 },

    #[error("joint {joint} value {value} outside limits [{min}, {max}]")]
    LimitViolation {
        joint: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("joint {joint} leaves its position limits at sample {sample}")]
    JointLimitOnPath { joint: usize, sample: usize },

    #[error("joint {joint} velocity {velocity:.4} rad/s exceeds limit {limit:.4} rad/s at sample {sample}")]
    JointVelocityExceeded {
        joint: usize,
        sample: usize,
        velocity: f64,
        limit: f64,
    },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("energy integration needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("no feasible candidate satisfies the TCP position tolerance")]
    NoFeasibleCandidate,

    #[error("neither command could be planned: joint move: {movej}; linear move: {movel}")]
    NoFeasiblePlan { movej: String, movel: String },

    #[error("no feasible scale factor in the requested range")]
    EmptyCurve,
}
