use thiserror::Error;

use crate::scene::Technique;

#[derive(Debug, Error)]
pub enum QuizError {
    #[error("scene {index} ({technique:?} on {robot}): no candidate met the energy gap after {attempts} attempts")]
    GenerationFailed {
        index: usize,
        technique: Technique,
        robot: String,
        attempts: usize,
    },

    #[error("invalid scenes file: {0}")]
    InvalidScenes(String),

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("unknown scene {0}")]
    UnknownScene(String),

    #[error("choice {choice} out of range for a scene with {options} options")]
    ChoiceOutOfRange { choice: usize, options: usize },

    #[error("scene {scene_id} already answered in session {session_id}")]
    DuplicateAnswer { session_id: String, scene_id: String },

    #[error("session log line {line}: {message}")]
    CorruptLog { line: usize, message: String },

    #[error(transparent)]
    Model(#[from] cobot_energy::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = QuizError> = std::result::Result<T, E>;
