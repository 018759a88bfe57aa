//! Experiment harness: assessment sweeps, reports, strategy runs and the
//! quiz scene pipeline, exposed through the `lab` binary.

pub mod assess;
pub mod error;
pub mod optimize;
pub mod report;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use cobot_energy::RobotModel;
use quiz_service::{generate_scenes, ServeConfig};
use tracing::info;

pub use assess::{run_assessment, AssessmentConfig, AssessmentRow, AssessmentTable};
pub use error::{LabError, Result};
pub use optimize::{run_optimize, OptimizeOutput, OptimizeRequest, Strategy};
pub use report::{emit_report, group_stats, Report};

pub const SCHEMA_VERSION: u32 = 1;

/// Loads a robot parameter file, or a built-in model when `spec` names one
/// and is not an existing path.
pub fn load_robot(spec: &Path) -> Result<RobotModel> {
    if !spec.exists() {
        if let Some(name) = spec.to_str().filter(|n| RobotModel::BUILTINS.contains(n)) {
            return Ok(RobotModel::builtin(name)?);
        }
        return Err(LabError::Config(format!("robot file {} not found", spec.display())));
    }
    Ok(RobotModel::load(spec)?)
}

#[derive(Debug, Parser)]
#[command(name = "lab", version, about = "Robot energy assessment and optimisation lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an assessment sweep and write the table, traces and report.
    Assess {
        /// Assessment config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit the report of an existing assessment table.
    Report {
        /// `assessment.csv` written by `assess`.
        table: PathBuf,
        /// Output directory; defaults to the table's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one energy-saving strategy on its fixture program.
    Optimize {
        #[arg(value_enum)]
        strategy: Strategy,
        /// Robot parameter file or built-in model name.
        #[arg(long, default_value = "ur10e-like")]
        robot: PathBuf,
        /// Payload mass, kg.
        #[arg(long)]
        payload: Option<f64>,
        #[arg(long, default_value_t = cobot_energy::strategies::DEFAULT_SEED)]
        seed: u64,
        /// Standby: maximum tool displacement from the start pose, m.
        #[arg(long)]
        tcp_tolerance: Option<f64>,
        /// Saturation: lowest admissible bus power, W.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        floor: f64,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quiz scene files.
    Scenes {
        #[command(subcommand)]
        action: ScenesCommand,
    },
    /// Serve the quiz API and static front end.
    Serve {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Session log; defaults to `sessions.jsonl` beside the scene file.
        #[arg(long)]
        sessions: Option<PathBuf>,
        /// Directory served at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenesCommand {
    /// Generate a scene file.
    Generate {
        /// Robot parameter file or built-in name; repeat for several.
        #[arg(long = "robot")]
        robots: Vec<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Assess { config, out } => {
            let config = AssessmentConfig::load(&config)?;
            let out = out
                .or_else(|| config.output_dir.clone())
                .ok_or_else(|| LabError::Config("no output directory: pass --out or set output_dir".into()))?;
            let table = run_assessment(&config, &out)?;
            info!(
                rows = table.rows.len(),
                infeasible = table.infeasible.len(),
                out = %out.display(),
                "assessment written"
            );
            emit_report(&table.rows, &out)?;
        }
        Command::Report { table, out } => {
            let rows = assess::read_rows(&table)?;
            let out = out.unwrap_or_else(|| table.parent().unwrap_or(Path::new(".")).to_path_buf());
            emit_report(&rows, &out)?;
        }
        Command::Optimize {
            strategy,
            robot,
            payload,
            seed,
            tcp_tolerance,
            floor,
            out,
        } => {
            let model = load_robot(&robot)?;
            let req = OptimizeRequest {
                strategy,
                payload,
                seed,
                tcp_tolerance,
                floor,
            };
            let text = serde_json::to_string_pretty(&run_optimize(&model, &req)?)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => match writeln!(std::io::stdout().lock(), "{text}") {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    other => other?,
                },
            }
        }
        Command::Scenes {
            action: ScenesCommand::Generate { robots, seed, out },
        } => {
            let models = if robots.is_empty() {
                RobotModel::BUILTINS
                    .iter()
                    .map(|n| RobotModel::builtin(n))
                    .collect::<cobot_energy::Result<Vec<_>>>()?
            } else {
                robots.iter().map(|r| load_robot(r)).collect::<Result<Vec<_>>>()?
            };
            let file = generate_scenes(&models, seed)?;
            file.save(&out)?;
            info!(scenes = file.scenes.len(), out = %out.display(), "scene file written");
        }
        Command::Serve {
            scenes,
            port,
            host,
            sessions,
            assets,
        } => {
            let sessions_log =
                sessions.unwrap_or_else(|| scenes.parent().unwrap_or(Path::new(".")).join("sessions.jsonl"));
            let config = ServeConfig {
                scenes,
                sessions_log,
                assets,
                addr: SocketAddr::new(host, port),
            };
            tokio::runtime::Runtime::new()?.block_on(quiz_service::serve(config))?;
        }
    }
    Ok(())
}
