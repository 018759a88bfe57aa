//! Builds the ten quiz scenes from strategy runs on the simulator.
//!
//! Every scene is drawn from a seeded generator; a candidate is kept only
//! when its best option beats the runner-up by [`MIN_ENERGY_GAP`], so the
//! correct answer does not hinge on integration error.

use cobot_energy::fixtures;
use cobot_energy::kinematics::{forward_kinematics, inverse_kinematics};
use cobot_energy::motion::{plan_movej_sampled, plan_movel_sampled, time_scale};
use cobot_energy::strategies::{
    optimal_motion_time, optimal_standby_with, saturate_power, StandbyConstraint, StandbyOptions,
};
use cobot_energy::{JointVector, MotionCommand, Payload, Pose, RobotModel, Trajectory, DOF};
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tracing::debug;

use crate::error::{QuizError, Result};
use crate::scene::{argmin_with_gap, ProgramOption, QuizScene, SceneFile, Technique, DATA_SOURCE};
use crate::SCHEMA_VERSION;

pub const SCENE_COUNT: usize = 10;
/// Required relative margin of the best option over the second best.
pub const MIN_ENERGY_GAP: f64 = 0.05;
pub const MAX_ATTEMPTS: usize = 100;
/// Sample period of all stored scene trajectories, s.
pub const SCENE_DT: f64 = 0.02;
/// How long a standby pose is held, s.
pub const HOLD_DURATION: f64 = 4.0;
/// Upper end of the characteristic curve searched in motion-time scenes.
pub const K_MAX: f64 = 4.0;

/// Technique and robot slot (index into the model list) of each scene.
/// Motion-time and saturation scenes stay on the first model: on the small
/// arm the idle draw outweighs both the inertial copper losses (the
/// optimum sits at full speed) and anything it regenerates.
const PLAN: [(Technique, usize); SCENE_COUNT] = [
    (Technique::Standby, 0),
    (Technique::CommandChoice, 1),
    (Technique::MotionTime, 0),
    (Technique::Saturation, 0),
    (Technique::Standby, 1),
    (Technique::CommandChoice, 0),
    (Technique::MotionTime, 0),
    (Technique::Saturation, 0),
    (Technique::CommandChoice, 1),
    (Technique::Standby, 0),
];

const STANDBY_THEORY: &str = "A robot that waits still is not idle: every joint motor carries a current \
proportional to the gravity torque it must hold, and that current heats the windings. Poses in which \
the links hang close to the vertical through their joints need little holding torque, so parking the \
arm there between tasks lowers the standby draw towards the controller's own idle power.";

const COMMAND_THEORY: &str = "A joint move interpolates every joint at once and reaches the goal along a \
smooth joint-space path. A linear move keeps the tool on a straight Cartesian line, which forces the \
inverse kinematics to swing some joints faster and further than needed. For the same endpoints and \
a fast setting, the joint move usually needs less torque and finishes sooner.";

const MOTION_TIME_THEORY: &str = "Moving fast costs acceleration torque, and copper losses grow with the \
square of torque. Moving slowly keeps the controller and the gravity-holding currents running for \
longer. Between the two there is an execution time with the lowest total energy, found on the \
energy-versus-duration curve of the motion.";

const SATURATION_THEORY: &str = "When a loaded arm brakes or lowers a payload, the drives act as \
generators. Energy the bus cannot reuse is burnt in a brake resistor. Retiming only the regenerating \
stretches, so the bus power never drops below zero, keeps that energy in the motion: the programme \
takes a little longer but draws less from the grid over the same time window.";

/// Largest payload drawn for a robot, kg.
fn payload_cap(model: &RobotModel) -> f64 {
    if model.name.contains("ur3") {
        3.0
    } else {
        10.0
    }
}

fn random_payload(model: &RobotModel, rng: &mut ChaCha8Rng, min_fraction: f64) -> Payload {
    let cap = payload_cap(model);
    let half_kg = rng.random_range(min_fraction * cap..=cap);
    fixtures::payload((half_kg * 2.0).round() / 2.0)
}

fn jitter(model: &RobotModel, rng: &mut ChaCha8Rng, center: &JointVector, spread: &[f64; DOF]) -> JointVector {
    JointVector::from_fn(|j, _| {
        let lim = &model.limits[j];
        (center[j] + rng.random_range(-spread[j]..=spread[j])).clamp(lim.q_min, lim.q_max)
    })
}

fn movej(target: &JointVector, v: f64, a: f64) -> MotionCommand {
    MotionCommand::MoveJoint {
        target: (*target).into(),
        v_limit: v,
        a_limit: a,
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Appends rest samples at the final pose until `traj` has `len` samples.
fn hold_until(traj: &Trajectory, len: usize) -> Trajectory {
    let mut out = traj.clone();
    let q = traj.end().q;
    while out.samples.len() < len {
        let t = out.samples.len() as f64 * out.dt;
        out.samples.push(cobot_energy::TrajectorySample::rest(t, q));
    }
    out
}

struct Candidate {
    payload: Payload,
    title: String,
    prompt: String,
    options: Vec<ProgramOption>,
}

fn standby(model: &RobotModel, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    let payload = random_payload(model, rng, 0.0);
    let spread = [0.8, 0.8, 0.8, 0.8, 0.4, 0.4];
    let current = jitter(model, rng, &fixtures::ur_work_pose(), &spread);
    let other = jitter(model, rng, &fixtures::standby_reference_pose(), &spread);
    let opts = StandbyOptions {
        seed: rng.random(),
        ..StandbyOptions::default()
    };
    let best = optimal_standby_with(model, &payload, &current, StandbyConstraint::Free, &opts)?;
    let n = (HOLD_DURATION / SCENE_DT).round() as usize + 1;
    let mut options = Vec::new();
    for q in [current, other, best.q_star] {
        options.push(ProgramOption::simulate(
            model,
            &payload,
            "",
            format!("Move to this pose and hold it for {HOLD_DURATION} s."),
            vec![movej(&q, 1.0, 2.0)],
            Trajectory::hold(q, n, SCENE_DT),
        )?);
    }
    Ok(Candidate {
        payload,
        title: "Where should the arm wait?".into(),
        prompt: format!(
            "The arm holds a {} kg payload for {HOLD_DURATION} s between tasks. Which waiting pose draws the least energy?",
            payload.mass
        ),
        options,
    })
}

fn command_choice(model: &RobotModel, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    let payload = random_payload(model, rng, 0.0);
    let spread = [0.8, 0.4, 0.4, 0.6, 0.6, 1.0];
    let a = jitter(model, rng, &fixtures::ur_work_pose(), &spread);
    let b = jitter(model, rng, &fixtures::ur_work_pose(), &spread);
    let speeds = fixtures::high_speed();
    let target = forward_kinematics(model, &b);
    let joint = plan_movej_sampled(model, &a, &b, speeds.v_joint, speeds.a_joint, SCENE_DT)?;
    let linear = plan_movel_sampled(model, &a, &target, speeds.v_linear, speeds.a_linear, SCENE_DT)?;
    let options = vec![
        ProgramOption::simulate(
            model,
            &payload,
            "MoveJ",
            "Straight line in joint space.",
            vec![movej(&b, speeds.v_joint, speeds.a_joint)],
            joint,
        )?,
        ProgramOption::simulate(
            model,
            &payload,
            "MoveL",
            "Straight line of the tool in Cartesian space.",
            vec![MotionCommand::MoveLinear {
                target,
                v_limit: speeds.v_linear,
                a_limit: speeds.a_linear,
            }],
            linear,
        )?,
    ];
    Ok(Candidate {
        payload,
        title: "Joint move or linear move?".into(),
        prompt: format!(
            "Both programmes take the tool between the same two poses at the fast setting with a {} kg payload. Which uses less energy?",
            payload.mass
        ),
        options,
    })
}

fn motion_time(model: &RobotModel, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    let payload = random_payload(model, rng, 0.5);
    let spread = [1.0, 0.6, 0.6, 0.8, 0.8, 1.0];
    let a = jitter(model, rng, &fixtures::ur_work_pose(), &spread);
    let b = jitter(model, rng, &fixtures::ur_work_pose(), &spread);
    let (v, acc) = (fixtures::high_speed().v_joint, rng.random_range(10.0..30.0));
    let base = plan_movej_sampled(model, &a, &b, v, acc, SCENE_DT)?;
    let best = optimal_motion_time(model, &base, &payload, 1.0, K_MAX)?;
    let k_slow = (best.k_star * rng.random_range(1.8..3.0)).min(K_MAX);
    let mut options = Vec::new();
    for k in [1.0, best.k_star, k_slow] {
        let traj = time_scale(model, &base, k)?;
        let duration = round2(traj.duration());
        options.push(ProgramOption::simulate(
            model,
            &payload,
            format!("{duration:.2} s"),
            format!("Run the move in {duration:.2} s."),
            vec![movej(&b, v / k, acc / (k * k))],
            traj,
        )?);
    }
    Ok(Candidate {
        payload,
        title: "How fast should the move run?".into(),
        prompt: format!(
            "The same joint move with a {} kg payload, executed at three speeds. Which duration uses the least energy?",
            payload.mass
        ),
        options,
    })
}

fn saturation(model: &RobotModel, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    let payload = random_payload(model, rng, 0.4);
    let start = jitter(
        model,
        rng,
        &fixtures::descent_start(),
        &[0.6, 0.15, 0.15, 0.15, 0.1, 0.3],
    );
    let pose = forward_kinematics(model, &start);
    let drop = rng.random_range(0.25..0.5);
    let goal = inverse_kinematics(
        model,
        &Pose::new(pose.position - Vector3::z() * drop, pose.orientation),
        &start,
    )?;
    let speeds = fixtures::high_speed();
    let base = plan_movej_sampled(model, &start, &goal, speeds.v_joint, speeds.a_joint, SCENE_DT)?;
    let sat = saturate_power(model, &base, &payload, 0.0)?;
    let len = sat.traj_out.samples.len().max(base.samples.len());
    let options = vec![
        ProgramOption::simulate(
            model,
            &payload,
            "As programmed",
            "Run the descent as programmed, then wait.",
            vec![movej(&goal, speeds.v_joint, speeds.a_joint)],
            hold_until(&base, len),
        )?,
        ProgramOption::simulate(
            model,
            &payload,
            "Power-saturated",
            "Slow down only where the drives would regenerate.",
            vec![movej(&goal, speeds.v_joint, speeds.a_joint)],
            hold_until(&sat.traj_out, len),
        )?,
    ];
    Ok(Candidate {
        payload,
        title: "Burn it or keep it?".into(),
        prompt: format!(
            "The arm lowers a {} kg payload by {:.0} mm. Both programmes are compared over the same time window. Which draws less energy from the grid?",
            payload.mass,
            drop * 1000.0
        ),
        options,
    })
}

fn theory(technique: Technique) -> &'static str {
    match technique {
        Technique::Standby => STANDBY_THEORY,
        Technique::CommandChoice => COMMAND_THEORY,
        Technique::MotionTime => MOTION_TIME_THEORY,
        Technique::Saturation => SATURATION_THEORY,
    }
}

fn candidate(technique: Technique, model: &RobotModel, rng: &mut ChaCha8Rng) -> Result<Candidate> {
    match technique {
        Technique::Standby => standby(model, rng),
        Technique::CommandChoice => command_choice(model, rng),
        Technique::MotionTime => motion_time(model, rng),
        Technique::Saturation => saturation(model, rng),
    }
}

/// Generates the scene set for `models` (the first two are used; a single
/// model serves every scene). The output depends only on the models and
/// `seed`.
pub fn generate_scenes(models: &[RobotModel], seed: u64) -> Result<SceneFile> {
    if models.is_empty() {
        return Err(QuizError::InvalidScenes("no robot models given".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(SCENE_COUNT);
    for (index, &(technique, slot)) in PLAN.iter().enumerate() {
        let model = &models[slot.min(models.len() - 1)];
        let mut found = None;
        for attempt in 0..MAX_ATTEMPTS {
            let mut c = match candidate(technique, model, &mut rng) {
                Ok(c) => c,
                Err(e) => {
                    debug!(index, attempt, "candidate rejected: {e}");
                    continue;
                }
            };
            c.options.shuffle(&mut rng);
            let Some((best, gap)) = argmin_with_gap(&c.options.iter().map(|o| o.e_grid).collect::<Vec<_>>()) else {
                continue;
            };
            if gap >= MIN_ENERGY_GAP && c.options.iter().all(|o| o.e_grid.is_finite()) {
                debug!(index, attempt, gap, "scene accepted");
                found = Some((c, best));
                break;
            }
            debug!(index, attempt, gap, "energy gap too small");
        }
        let Some((c, correct_index)) = found else {
            return Err(QuizError::GenerationFailed {
                index,
                technique,
                robot: model.name.clone(),
                attempts: MAX_ATTEMPTS,
            });
        };
        let mut options = c.options;
        for (i, o) in options.iter_mut().enumerate() {
            let letter = char::from(b'A' + i as u8);
            o.label = if o.label.is_empty() {
                format!("Pose {letter}")
            } else {
                format!("{letter}: {}", o.label)
            };
        }
        scenes.push(QuizScene {
            id: format!("scene-{:02}", index + 1),
            technique,
            robot_variant: model.name.clone(),
            payload: c.payload,
            title: c.title,
            prompt: c.prompt,
            data_source: DATA_SOURCE.into(),
            options,
            correct_index,
            theory_text: theory(technique).into(),
        });
    }
    let used: Vec<RobotModel> = models.iter().take(2).cloned().collect();
    let file = SceneFile {
        schema_version: SCHEMA_VERSION,
        seed,
        robots: used,
        scenes,
    };
    file.validate()?;
    Ok(file)
}
