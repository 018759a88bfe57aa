mod oracles;

use cobot_energy::fixtures;
use cobot_energy::kinematics::forward_kinematics;
use cobot_energy::motion::{
    plan_movej, plan_movej_sampled, plan_movel, time_scale, validate_limits, LimitQuantity, TrapezoidProfile,
};
use cobot_energy::{Error, JointVector, Pose, RobotModel, Trajectory, TrajectorySample};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ur10e() -> RobotModel {
    RobotModel::builtin("ur10e-like").unwrap()
}

fn single_joint(dq: f64) -> (RobotModel, JointVector) {
    let model = fixtures::pendulum(1.0, 1.0);
    let mut q1 = JointVector::zeros();
    q1[0] = dq;
    (model, q1)
}

fn peak(traj: &Trajectory, f: impl Fn(&TrajectorySample) -> f64) -> f64 {
    traj.samples.iter().map(f).fold(0.0, f64::max)
}

#[test]
fn trapezoid_two_second_move() {
    let (model, q1) = single_joint(1.0);
    let traj = plan_movej_sampled(&model, &JointVector::zeros(), &q1, 1.0, 1.0, 0.001).unwrap();
    assert!((traj.duration() - 2.0).abs() <= 1e-12);
    let mid = &traj.samples[1000];
    assert!((mid.qd[0] - 1.0).abs() <= 1e-12);
    assert!((mid.q[0] - 0.5).abs() <= 1e-12);
    assert_eq!(traj.end().q[0], 1.0);
}

#[test]
fn triangular_one_second_move() {
    let (model, q1) = single_joint(0.25);
    let traj = plan_movej_sampled(&model, &JointVector::zeros(), &q1, 1.0, 1.0, 0.001).unwrap();
    assert!((traj.duration() - 1.0).abs() <= 1e-12);
    assert!((peak(&traj, |s| s.qd[0]) - 0.5).abs() <= 1e-12);
    assert!((traj.samples[500].q[0] - 0.125).abs() <= 1e-12);
}

#[test]
fn null_moves_hold() {
    let model = ur10e();
    let q = fixtures::ur_work_pose();
    let j = plan_movej(&model, &q, &q, 1.0, 1.0).unwrap();
    let l = plan_movel(&model, &q, &forward_kinematics(&model, &q), 0.2, 1.0).unwrap();
    for traj in [j, l] {
        assert_eq!(traj.samples.len(), 2);
        assert!(traj.samples.iter().all(|s| s.q == q && s.qd == JointVector::zeros()));
    }
}

#[test]
fn movel_replays_straight_line() {
    let model = ur10e();
    let q0 = fixtures::ur_work_pose();
    let start = forward_kinematics(&model, &q0);
    let dp = Vector3::new(0.6, -0.5, 0.55).normalize() * 0.1;
    let target = Pose::new(start.position + dp, start.orientation);
    let traj = plan_movel(&model, &q0, &target, 0.25, 1.2).unwrap();
    let mut worst: f64 = 0.0;
    for s in &traj.samples {
        let p = forward_kinematics(&model, &s.q).position;
        let along = (p - start.position).dot(&dp) / dp.norm_squared();
        let on_line = start.position + dp * along.clamp(0.0, 1.0);
        worst = worst.max((p - on_line).norm());
    }
    assert!(worst <= 1e-4, "off-line by {worst:e} m");
    let end = forward_kinematics(&model, &traj.end().q);
    assert!((end.position - target.position).norm() < 1e-9);
    assert!(validate_limits(&model, &traj).is_empty());
}

#[test]
fn movel_through_wrist_singularity_is_refused() {
    let model = ur10e();
    let (q0, target) = fixtures::wrist_singular_line(&model).unwrap();
    let err = plan_movel(&model, &q0, &target, 0.25, 1.0).unwrap_err();
    assert!(matches!(err, Error::NearSingularity { .. }), "{err:?}");
}

#[test]
fn time_scale_identities() {
    let model = ur10e();
    let (a, b) = fixtures::command_pair();
    let traj = plan_movej(&model, &a, &b, 1.0, 4.0).unwrap();
    assert_eq!(time_scale(&model, &traj, 1.0).unwrap(), traj);

    let slow = time_scale(&model, &traj, 2.0).unwrap();
    assert!((slow.duration() - 2.0 * traj.duration()).abs() < 1e-12);
    for j in 0..6 {
        let v0 = peak(&traj, |s| s.qd[j].abs());
        let a0 = peak(&traj, |s| s.qdd[j].abs());
        assert!((peak(&slow, |s| s.qd[j].abs()) - 0.5 * v0).abs() < 1e-12);
        assert!((peak(&slow, |s| s.qdd[j].abs()) - 0.25 * a0).abs() < 1e-12);
    }
    assert!(validate_limits(&model, &time_scale(&model, &traj, 10.0).unwrap()).is_empty());
}

#[test]
fn speeding_up_a_saturated_move_is_refused() {
    let model = ur10e();
    let q0 = fixtures::ur_work_pose();
    let mut q1 = q0;
    q1[0] += 2.0;
    let traj = plan_movej(&model, &q0, &q1, model.limits[0].v_max, 1.0).unwrap();
    match time_scale(&model, &traj, 0.5) {
        Err(Error::LimitViolation { joint, max, .. }) => {
            assert_eq!(joint, 1);
            assert_eq!(max, model.limits[0].v_max);
        }
        other => panic!("expected a limit violation, got {other:?}"),
    }
}

#[test]
fn constructed_velocity_violation() {
    let model = ur10e();
    let v_max = model.limits[2].v_max;
    let mut traj = Trajectory::hold(fixtures::ur_work_pose(), 3, 0.002);
    traj.samples[1].qd[2] = 2.0 * v_max;
    let found = validate_limits(&model, &traj);
    assert_eq!(found.len(), 1);
    let v = found[0];
    assert_eq!((v.joint, v.sample, v.quantity), (3, 1, LimitQuantity::Velocity));
    assert!((v.margin - v_max).abs() < 1e-12);
}

#[test]
fn profile_eval_agrees_with_samples_inside_phases() {
    let p = TrapezoidProfile::new(1.3, 0.9, 2.0, 0.002).unwrap();
    let [_, t1, t2, _] = p.phase_times();
    for i in 1..p.steps() {
        let t = i as f64 * p.dt;
        if (t - t1).abs() < 1e-9 || (t - t2).abs() < 1e-9 {
            continue;
        }
        let (s, sd, sdd) = p.sample(i);
        let (es, esd, esdd) = p.eval(t);
        assert!((s - es).abs() < 1e-12 && (sd - esd).abs() < 1e-12 && (sdd - esdd).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn movej_is_a_monotone_straight_line(seed in any::<u64>(), v in 0.2..4.0f64, a in 0.5..40.0f64) {
        let model = ur10e();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q0 = oracles::random_config(&model, &mut rng, 0.6);
        let q1 = oracles::random_config(&model, &mut rng, 0.6);
        let traj = plan_movej(&model, &q0, &q1, v, a).unwrap();
        let delta = q1 - q0;
        let j = delta.iamax();
        let mut last = 0.0;
        for s in &traj.samples {
            let frac = (s.q[j] - q0[j]) / delta[j];
            prop_assert!(frac >= last - 1e-12 && frac <= 1.0 + 1e-12);
            prop_assert!((s.q - (q0 + delta * frac)).amax() < 1e-9);
            last = frac;
        }
        prop_assert_eq!(traj.end().q, q1);
        prop_assert_eq!(traj.start().q, q0);
        prop_assert!(validate_limits(&model, &traj).is_empty());
        for s in &traj.samples {
            prop_assert!(s.qd.amax() <= v + 1e-9);
            prop_assert!(s.qdd.amax() <= a + 1e-9);
        }
    }

    #[test]
    fn time_scaling_composes(seed in any::<u64>(), k1 in 1.0..3.0f64, k2 in 1.0..3.0f64) {
        let model = ur10e();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q0 = oracles::random_config(&model, &mut rng, 0.6);
        let q1 = oracles::random_config(&model, &mut rng, 0.6);
        let traj = plan_movej(&model, &q0, &q1, 1.0, 3.0).unwrap();
        let twice = time_scale(&model, &time_scale(&model, &traj, k1).unwrap(), k2).unwrap();
        let once = time_scale(&model, &traj, k1 * k2).unwrap();
        prop_assert!((twice.dt - once.dt).abs() < 1e-15);
        for (x, y) in twice.samples.iter().zip(&once.samples) {
            prop_assert_eq!(x.q, y.q);
            prop_assert!((x.qd - y.qd).amax() < 1e-12 && (x.qdd - y.qdd).amax() < 1e-12);
            prop_assert!((x.t - y.t).abs() < 1e-9);
        }
    }

    #[test]
    fn trapezoid_respects_limits_and_distance(d in 1e-3..10.0f64, v in 0.05..5.0f64, a in 0.1..50.0f64) {
        let p = TrapezoidProfile::new(d, v, a, 0.002).unwrap();
        prop_assert!(p.velocity <= v * (1.0 + 1e-12));
        prop_assert!(p.acceleration <= a * (1.0 + 1e-12));
        let (s_end, sd_end, _) = p.sample(p.steps());
        prop_assert!((s_end - d).abs() < 1e-12 * d.max(1.0));
        prop_assert_eq!(sd_end, 0.0);
        let (s_mid, _, _) = p.eval(0.5 * p.duration());
        prop_assert!((s_mid - 0.5 * d).abs() < 1e-9 * d.max(1.0));
    }
}
