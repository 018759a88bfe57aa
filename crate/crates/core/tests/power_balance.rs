mod oracles;

use cobot_energy::motion::{movej_profile, plan_movej_sampled};
use cobot_energy::power::{compute_power_trace, integrate_energy};
use cobot_energy::{fixtures, JointVector, Payload, RegenPolicy, RobotModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_move(model: &RobotModel, rng: &mut ChaCha8Rng) -> (JointVector, JointVector, f64, f64) {
    let q0 = oracles::random_config(model, rng, 0.5);
    let q1 = oracles::random_config(model, rng, 0.5);
    (q0, q1, rng.random_range(0.5..3.0), rng.random_range(1.0..15.0))
}

#[test]
fn continuous_work_equals_energy_change() {
    let model = RobotModel::builtin("ur10e-like").unwrap().lossless();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let (q0, q1, v, a) = random_move(&model, &mut rng);
        let payload = fixtures::payload(rng.random_range(0.0..8.0));
        let profile = movej_profile(&model, &q0, &q1, v, a, 0.002).unwrap().unwrap();
        let balance = oracles::work_balance(&model, &profile, &q0, &q1, &payload);
        let err = balance.relative_error();
        assert!(
            err < 1e-6,
            "case {case}: work {} vs ΔE {} (rel {err:e})",
            balance.work,
            balance.delta_energy
        );
    }
}

#[test]
fn sampled_trace_balances_at_fine_step() {
    let model = RobotModel::builtin("ur10e-like").unwrap().lossless();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let (q0, q1, v, a) = random_move(&model, &mut rng);
        let traj = plan_movej_sampled(&model, &q0, &q1, v, a, 0.0005).unwrap();
        let trace = compute_power_trace(&model, &traj, &Payload::NONE, RegenPolicy::DissipateAll).unwrap();
        let report = integrate_energy(&trace).unwrap();
        let profile = movej_profile(&model, &q0, &q1, v, a, 0.0005).unwrap().unwrap();
        let exact = oracles::work_balance(&model, &profile, &q0, &q1, &Payload::NONE);
        let err = (report.e_mech - exact.delta_energy).abs() / exact.gross_work;
        assert!(
            err < 1e-6,
            "sampled e_mech {} vs ΔE {}",
            report.e_mech,
            exact.delta_energy
        );
    }
}

#[test]
fn lossless_bus_power_is_mechanical_power() {
    let model = RobotModel::builtin("ur3e-like").unwrap().lossless();
    let (a, b) = fixtures::command_pair();
    let traj = plan_movej_sampled(&model, &a, &b, 1.0, 4.0, 0.002).unwrap();
    let trace = compute_power_trace(&model, &traj, &Payload::NONE, RegenPolicy::DissipateAll).unwrap();
    for s in &trace.samples {
        assert!((s.p_bus - s.p_mech).abs() < 1e-9 * s.p_mech.abs().max(1.0));
        assert_eq!(s.p_copper, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn policy_split_conserves_bus_power(seed in any::<u64>(), floor in -500.0..0.0f64) {
        let model = RobotModel::builtin("ur10e-like").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q0, q1, _, _) = random_move(&model, &mut rng);
        let traj = plan_movej_sampled(&model, &q0, &q1, 3.0, 25.0, 0.004).unwrap();
        for policy in [RegenPolicy::DissipateAll, RegenPolicy::ReuseUpTo { p_floor: floor }] {
            let trace = compute_power_trace(&model, &traj, &fixtures::payload(5.0), policy).unwrap();
            for s in &trace.samples {
                prop_assert!(s.p_grid >= 0.0 && s.p_dissipated >= 0.0);
                prop_assert!((s.p_grid - s.p_dissipated - s.p_reused - s.p_bus).abs() < 1e-9 * s.p_bus.abs().max(1.0));
                prop_assert!((s.p_bus - s.p_joint.iter().sum::<f64>() - model.p_baseline).abs() < 1e-9 * s.p_bus.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_energy_covers_idle_draw(seed in any::<u64>()) {
        let model = RobotModel::builtin("ur10e-like").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q0, q1, v, a) = random_move(&model, &mut rng);
        let traj = plan_movej_sampled(&model, &q0, &q1, v, a, 0.004).unwrap();
        let trace = compute_power_trace(&model, &traj, &Payload::NONE, RegenPolicy::DissipateAll).unwrap();
        let r = integrate_energy(&trace).unwrap();
        // Grid energy is the positive part of the bus energy, which can only
        // exceed its net value.
        let net = r.e_mech + r.e_copper + r.e_friction + r.e_baseline;
        prop_assert!(r.e_grid + 1e-9 >= net);
        prop_assert!((r.e_grid - r.e_dissipated - net).abs() < 1e-6 * r.e_grid);
    }
}
