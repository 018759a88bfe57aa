use cobot_energy::fixtures::{self, DESCENT_PAYLOAD};
use cobot_energy::power::standby_power;
use cobot_energy::RobotModel;
use lab_cli::{run_optimize, LabError, OptimizeRequest, Strategy};

fn ur10e() -> RobotModel {
    RobotModel::builtin("ur10e-like").unwrap()
}

#[test]
fn defaults_follow_the_fixture_programs() {
    assert_eq!(Strategy::Standby.default_payload(), 0.0);
    assert_eq!(Strategy::Command.default_payload(), 0.0);
    assert_eq!(Strategy::Time.default_payload(), DESCENT_PAYLOAD);
    assert_eq!(Strategy::Saturate.default_payload(), DESCENT_PAYLOAD);
}

#[test]
fn standby_reports_a_recomputable_optimum() {
    let model = ur10e();
    let out = run_optimize(&model, &OptimizeRequest::new(Strategy::Standby)).unwrap();
    let q: Vec<f64> = serde_json::from_value(out.result["q_star"].clone()).unwrap();
    let q = cobot_energy::JointVector::from_iterator(q);
    let p = standby_power(&model, &q, &fixtures::payload(0.0)).unwrap();
    let reported = out.result["power_star"].as_f64().unwrap();
    assert!((p - reported).abs() <= 1e-9 * p);
    assert!(reported <= out.result["baseline_power"].as_f64().unwrap());

    let mut req = OptimizeRequest::new(Strategy::Standby);
    req.tcp_tolerance = Some(0.0);
    assert!(matches!(run_optimize(&model, &req), Err(LabError::Config(_))));
}

#[test]
fn command_recommends_the_joint_move_at_high_speed() {
    let out = run_optimize(&ur10e(), &OptimizeRequest::new(Strategy::Command)).unwrap();
    assert_eq!(out.result["recommended"], "MoveJoint");
    assert!(out.result["saving_fraction"].as_f64().unwrap() > 0.0);
}

#[test]
fn time_finds_an_interior_optimum_with_its_curve() {
    let out = run_optimize(&ur10e(), &OptimizeRequest::new(Strategy::Time)).unwrap();
    let k = out.result["k_star"].as_f64().unwrap();
    assert!(k > 1.0 && k < 6.0, "{k}");
    let points = out.curve["points"].as_array().unwrap();
    assert!(points.len() >= 3);
    let e_star = out.result["e_star"].as_f64().unwrap();
    assert!(points.iter().all(|p| p["e_grid"].as_f64().unwrap() >= e_star - 1e-9));
}

#[test]
fn saturate_removes_dissipation_and_returns_both_curves() {
    let out = run_optimize(&ur10e(), &OptimizeRequest::new(Strategy::Saturate)).unwrap();
    assert!(out.result["e_dissipated_before"].as_f64().unwrap() > 0.0);
    assert_eq!(out.result["e_dissipated_after"].as_f64().unwrap(), 0.0);
    assert!(out.result["e_grid_after"].as_f64().unwrap() < out.result["e_grid_before"].as_f64().unwrap());
    let after = out.curve["after"].as_array().unwrap();
    assert!(after.iter().all(|s| s[1].as_f64().unwrap() >= 0.0));
    assert!(!out.curve["before"].as_array().unwrap().is_empty());
}

#[test]
fn negative_payloads_are_rejected() {
    let mut req = OptimizeRequest::new(Strategy::Command);
    req.payload = Some(-2.0);
    let err = run_optimize(&ur10e(), &req).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
