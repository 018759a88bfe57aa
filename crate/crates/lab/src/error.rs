use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("all {points} sweep points were infeasible")]
    AllInfeasible { points: usize },

    #[error("cannot report on an empty table")]
    EmptyTable,

    #[error(transparent)]
    Model(#[from] cobot_energy::Error),

    #[error(transparent)]
    Quiz(#[from] quiz_service::QuizError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit status: 2 for bad input, 3 when nothing was feasible,
    /// 1 for anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            LabError::AllInfeasible { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
