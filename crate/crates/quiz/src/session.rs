//! Quiz sessions and their append-only JSON-lines log.
//!
//! Every state change is written to the log before it is applied in memory,
//! and the log is replayed on startup, so a restarted service reports the
//! same sessions.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{QuizError, Result};
use crate::scene::SceneFile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub scene_id: String,
    pub choice: usize,
    pub correct: bool,
    /// Unix time, ms.
    pub answered_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizSession {
    pub id: String,
    /// Unix time, ms.
    pub started_at: u64,
    pub answers: Vec<Answer>,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub answered: usize,
    pub correct: usize,
    /// Correct over answered; 0 before the first answer.
    pub success_rate: f64,
    /// From session start to the latest answer.
    pub elapsed_seconds: f64,
    pub finished: bool,
    pub answers: Vec<Answer>,
}

impl QuizSession {
    pub fn answer_for(&self, scene_id: &str) -> Option<&Answer> {
        self.answers.iter().find(|a| a.scene_id == scene_id)
    }

    pub fn report(&self) -> SessionReport {
        let answered = self.answers.len();
        let correct = self.answers.iter().filter(|a| a.correct).count();
        let last = self
            .answers
            .iter()
            .map(|a| a.answered_at)
            .max()
            .unwrap_or(self.started_at);
        SessionReport {
            session_id: self.id.clone(),
            answered,
            correct,
            success_rate: if answered == 0 {
                0.0
            } else {
                correct as f64 / answered as f64
            },
            elapsed_seconds: last.saturating_sub(self.started_at) as f64 / 1000.0,
            finished: self.finished,
            answers: self.answers.clone(),
        }
    }
}

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    SessionCreated { session_id: String, started_at: u64 },
    AnswerRecorded { session_id: String, answer: Answer },
}

/// In-memory sessions backed by an optional log file.
#[derive(Debug)]
pub struct SessionStore {
    sessions: HashMap<String, QuizSession>,
    scene_count: usize,
    log: Option<File>,
    log_path: Option<PathBuf>,
}

impl SessionStore {
    /// A store that forgets everything on drop.
    pub fn in_memory(scene_count: usize) -> Self {
        Self {
            sessions: HashMap::new(),
            scene_count,
            log: None,
            log_path: None,
        }
    }

    /// Opens (or creates) `path` and replays it. A torn final line left by
    /// a crash mid-write is dropped; any other unreadable line is an error.
    pub fn open(path: impl AsRef<Path>, scene_count: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut store = Self::in_memory(scene_count);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let torn_tail = !text.is_empty() && !text.ends_with('\n');
            let lines: Vec<&str> = text.lines().collect();
            for (i, line) in lines.iter().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<LogEvent>(line) {
                    Ok(event) => store.apply(event).map_err(|e| QuizError::CorruptLog {
                        line: i + 1,
                        message: e.to_string(),
                    })?,
                    Err(_) if torn_tail && i + 1 == lines.len() => {
                        tracing::warn!(line = i + 1, "dropping torn final session log line");
                    }
                    Err(e) => {
                        return Err(QuizError::CorruptLog {
                            line: i + 1,
                            message: e.to_string(),
                        })
                    }
                }
            }
            if torn_tail {
                let keep = text.rfind('\n').map_or(0, |p| p + 1);
                std::fs::write(path, &text[..keep])?;
            }
        }
        store.log = Some(OpenOptions::new().create(true).append(true).open(path)?);
        store.log_path = Some(path.to_path_buf());
        Ok(store)
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log_path.as_deref()
    }

    pub fn get(&self, id: &str) -> Option<&QuizSession> {
        self.sessions.get(id)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    fn apply(&mut self, event: LogEvent) -> Result<()> {
        match event {
            LogEvent::SessionCreated { session_id, started_at } => {
                self.sessions.insert(
                    session_id.clone(),
                    QuizSession {
                        id: session_id,
                        started_at,
                        answers: Vec::new(),
                        finished: false,
                    },
                );
            }
            LogEvent::AnswerRecorded { session_id, answer } => {
                let scene_count = self.scene_count;
                let session = self
                    .sessions
                    .get_mut(&session_id)
                    .ok_or_else(|| QuizError::UnknownSession(session_id.clone()))?;
                if session.answer_for(&answer.scene_id).is_some() {
                    return Err(QuizError::DuplicateAnswer {
                        session_id,
                        scene_id: answer.scene_id,
                    });
                }
                session.answers.push(answer);
                session.finished = session.answers.len() >= scene_count;
            }
        }
        Ok(())
    }

    fn record(&mut self, event: LogEvent) -> Result<()> {
        if let Some(log) = &mut self.log {
            let mut line = serde_json::to_string(&event)?;
            line.push('\n');
            log.write_all(line.as_bytes())?;
            log.sync_data()?;
        }
        self.apply(event)
    }

    pub fn create(&mut self, now_ms: u64) -> Result<&QuizSession> {
        let id = format!("{:032x}", rand::random::<u128>());
        self.record(LogEvent::SessionCreated {
            session_id: id.clone(),
            started_at: now_ms,
        })?;
        Ok(&self.sessions[&id])
    }

    /// Checks and records one answer. Nothing changes when a check fails.
    pub fn answer(
        &mut self,
        scenes: &SceneFile,
        session_id: &str,
        scene_id: &str,
        choice: usize,
        now_ms: u64,
    ) -> Result<Answer> {
        let session = self
            .sessions
            .get(session_id)
            .ok_or_else(|| QuizError::UnknownSession(session_id.into()))?;
        let scene = scenes
            .scene(scene_id)
            .ok_or_else(|| QuizError::UnknownScene(scene_id.into()))?;
        if choice >= scene.options.len() {
            return Err(QuizError::ChoiceOutOfRange {
                choice,
                options: scene.options.len(),
            });
        }
        if session.answer_for(scene_id).is_some() {
            return Err(QuizError::DuplicateAnswer {
                session_id: session_id.into(),
                scene_id: scene_id.into(),
            });
        }
        let answer = Answer {
            scene_id: scene_id.into(),
            choice,
            correct: choice == scene.correct_index,
            answered_at: now_ms,
        };
        self.record(LogEvent::AnswerRecorded {
            session_id: session_id.into(),
            answer: answer.clone(),
        })?;
        Ok(answer)
    }
}
