//! HTTP+JSON API and static hosting of the quiz front end.
//!
//! Nothing served before an answer exposes the correct option or any
//! option energy; those only appear in the answer response and in scene
//! views requested on behalf of a session that has answered the scene.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cobot_energy::{JointVector, MotionCommand};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::QuizError;
use crate::scene::{ArmFrame, QuizScene, SceneFile, Technique};
use crate::session::{Answer, SessionReport, SessionStore};
use crate::SCHEMA_VERSION;

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    })
}

#[derive(Clone)]
pub struct AppState {
    pub scenes: Arc<SceneFile>,
    pub store: Arc<Mutex<SessionStore>>,
    pub clock: Clock,
}

impl AppState {
    pub fn new(scenes: SceneFile, store: SessionStore, clock: Clock) -> Self {
        Self {
            scenes: Arc::new(scenes),
            store: Arc::new(Mutex::new(store)),
            clock,
        }
    }
}

/// Wraps every response body with the schema version.
#[derive(Debug, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

fn versioned<T: Serialize>(status: StatusCode, body: T) -> Response {
    (
        status,
        Json(Versioned {
            schema_version: SCHEMA_VERSION,
            body,
        }),
    )
        .into_response()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl From<QuizError> for ApiError {
    fn from(e: QuizError) -> Self {
        let (status, code) = match &e {
            QuizError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            QuizError::UnknownScene(_) => (StatusCode::NOT_FOUND, "unknown_scene"),
            QuizError::ChoiceOutOfRange { .. } => (StatusCode::BAD_REQUEST, "choice_out_of_range"),
            QuizError::DuplicateAnswer { .. } => (StatusCode::CONFLICT, "duplicate_answer"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!("{e}");
        }
        Self {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: ErrorBody,
        }
        versioned(
            self.status,
            Body {
                error: ErrorBody {
                    code: self.code.into(),
                    message: self.message,
                },
            },
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneSummary {
    pub id: String,
    pub index: usize,
    pub technique: Technique,
    pub robot_variant: String,
    pub title: String,
    pub prompt: String,
    pub payload_kg: f64,
    pub option_labels: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JointSampleView {
    pub t: f64,
    pub q: JointVector,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OptionView {
    pub label: String,
    pub description: String,
    pub commands: Vec<MotionCommand>,
    pub duration: f64,
    pub trajectory: Vec<JointSampleView>,
    pub path_polyline: Vec<[f64; 3]>,
    pub frames: Vec<ArmFrame>,
}

/// Verdict for one answered scene.
#[derive(Debug, Serialize, Deserialize)]
pub struct Outcome {
    pub scene_id: String,
    pub choice: usize,
    pub correct: bool,
    pub correct_index: usize,
    /// Grid energy of each option, J.
    pub energies: Vec<f64>,
    pub explanation: String,
}

impl Outcome {
    fn new(scene: &QuizScene, answer: &Answer) -> Self {
        Self {
            scene_id: scene.id.clone(),
            choice: answer.choice,
            correct: answer.correct,
            correct_index: scene.correct_index,
            energies: scene.energies(),
            explanation: scene.theory_text.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SceneView {
    pub id: String,
    pub index: usize,
    pub technique: Technique,
    pub robot_variant: String,
    pub title: String,
    pub prompt: String,
    pub payload_kg: f64,
    pub data_source: String,
    pub options: Vec<OptionView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
}

fn summary(index: usize, s: &QuizScene) -> SceneSummary {
    SceneSummary {
        id: s.id.clone(),
        index,
        technique: s.technique,
        robot_variant: s.robot_variant.clone(),
        title: s.title.clone(),
        prompt: s.prompt.clone(),
        payload_kg: s.payload.mass,
        option_labels: s.options.iter().map(|o| o.label.clone()).collect(),
    }
}

fn scene_view(index: usize, s: &QuizScene, outcome: Option<Outcome>) -> SceneView {
    SceneView {
        id: s.id.clone(),
        index,
        technique: s.technique,
        robot_variant: s.robot_variant.clone(),
        title: s.title.clone(),
        prompt: s.prompt.clone(),
        payload_kg: s.payload.mass,
        data_source: s.data_source.clone(),
        options: s
            .options
            .iter()
            .map(|o| OptionView {
                label: o.label.clone(),
                description: o.description.clone(),
                commands: o.commands.clone(),
                duration: o.trajectory.duration(),
                trajectory: o
                    .trajectory
                    .samples
                    .iter()
                    .map(|p| JointSampleView { t: p.t, q: p.q })
                    .collect(),
                path_polyline: o.path_polyline.clone(),
                frames: o.frames.clone(),
            })
            .collect(),
        outcome,
    }
}

async fn list_scenes(State(st): State<AppState>) -> Response {
    #[derive(Serialize)]
    struct Body {
        scenes: Vec<SceneSummary>,
    }
    let scenes = st
        .scenes
        .scenes
        .iter()
        .enumerate()
        .map(|(i, s)| summary(i, s))
        .collect();
    versioned(StatusCode::OK, Body { scenes })
}

#[derive(Debug, Deserialize)]
struct SceneQuery {
    session: Option<String>,
}

async fn get_scene(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<SceneQuery>,
) -> Result<Response, ApiError> {
    let (index, scene) = st
        .scenes
        .scenes
        .iter()
        .enumerate()
        .find(|(_, s)| s.id == id)
        .ok_or_else(|| QuizError::UnknownScene(id.clone()))?;
    let outcome = match query.session {
        Some(sid) => {
            let store = st.store.lock().expect("session store lock");
            let session = store.get(&sid).ok_or(QuizError::UnknownSession(sid))?;
            session.answer_for(&id).map(|a| Outcome::new(scene, a))
        }
        None => None,
    };
    Ok(versioned(StatusCode::OK, scene_view(index, scene, outcome)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub started_at: u64,
    pub scene_count: usize,
}

async fn create_session(State(st): State<AppState>) -> Result<Response, ApiError> {
    let now = (st.clock)();
    let mut store = st.store.lock().expect("session store lock");
    let session = store.create(now)?;
    Ok(versioned(
        StatusCode::CREATED,
        SessionCreated {
            session_id: session.id.clone(),
            started_at: session.started_at,
            scene_count: st.scenes.scenes.len(),
        },
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub scene_id: String,
    pub choice: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerResponse {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub report: SessionReport,
}

async fn answer(
    State(st): State<AppState>,
    Path(session_id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError {
        status: StatusCode::BAD_REQUEST,
        code: "bad_request",
        message: e.body_text(),
    })?;
    let now = (st.clock)();
    // The lock spans check and record, so concurrent answers to one scene
    // cannot both pass the duplicate check.
    let mut store = st.store.lock().expect("session store lock");
    let recorded = store.answer(&st.scenes, &session_id, &req.scene_id, req.choice, now)?;
    let scene = st.scenes.scene(&req.scene_id).expect("checked by the store");
    let report = store.get(&session_id).expect("checked by the store").report();
    Ok(versioned(
        StatusCode::OK,
        AnswerResponse {
            outcome: Outcome::new(scene, &recorded),
            report,
        },
    ))
}

async fn report(State(st): State<AppState>, Path(session_id): Path<String>) -> Result<Response, ApiError> {
    let store = st.store.lock().expect("session store lock");
    let session = store
        .get(&session_id)
        .ok_or_else(|| QuizError::UnknownSession(session_id.clone()))?;
    Ok(versioned(StatusCode::OK, session.report()))
}

async fn api_not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        code: "not_found",
        message: "no such endpoint".into(),
    }
}

/// The API under `/api`, plus the front-end assets in `assets` at `/`.
pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/scenes", get(list_scenes))
        .route("/scenes/{id}", get(get_scene))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/answers", post(answer))
        .route("/sessions/{id}/report", get(report))
        .fallback(api_not_found)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub scenes: PathBuf,
    pub sessions_log: PathBuf,
    pub assets: Option<PathBuf>,
    pub addr: SocketAddr,
}

/// Loads scenes, replays the session log and serves until Ctrl-C.
pub async fn serve(config: ServeConfig) -> crate::Result<()> {
    let scenes = SceneFile::load(&config.scenes)?;
    let store = SessionStore::open(&config.sessions_log, scenes.scenes.len())?;
    tracing::info!(
        scenes = scenes.scenes.len(),
        sessions = store.len(),
        log = %config.sessions_log.display(),
        "quiz state loaded"
    );
    let app = router(AppState::new(scenes, store, system_clock()), config.assets);
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
