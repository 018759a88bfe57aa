//! Training quiz on energy-efficient robot programming.
//!
//! [`generate`] turns strategy runs into ten multiple-choice scenes,
//! [`session`] keeps answers in a replayable log and [`api`] serves both
//! over HTTP.

pub mod api;
pub mod error;
pub mod generate;
pub mod scene;
pub mod session;

pub use api::{router, serve, AppState, ServeConfig};
pub use error::{QuizError, Result};
pub use generate::generate_scenes;
pub use scene::{ProgramOption, QuizScene, SceneFile, Technique};
pub use session::{QuizSession, SessionReport, SessionStore};

/// Version tag carried by the scenes file and every API response.
pub const SCHEMA_VERSION: u32 = 1;
