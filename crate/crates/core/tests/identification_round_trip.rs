mod common;

use std::time::Instant;

use common::*;
use feedsim::identification::{add_noise, at_period, identify_axis, Stage};
use feedsim::params::DEFAULT_PLANT_STEP;

fn rel(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

#[test]
fn full_chain_recovers_the_x_axis() {
    let t0 = Instant::now();
    let traces = round_trip_traces();
    let (q, reports) =
        identify_axis(&traces, &wrong_start(), Stage::All, DEFAULT_PLANT_STEP).unwrap();
    let truth = axis("X");
    let f = (q.friction, truth.friction);
    for (name, got, want) in [
        ("a", f.0.a, f.1.a),
        ("b", f.0.b, f.1.b),
        ("c", f.0.c, f.1.c),
        ("d", f.0.d, f.1.d),
    ] {
        assert!(rel(got, want) <= 5e-3, "{name}: {got} vs {want}");
    }
    assert!(rel(q.j_eq, 0.028) <= 0.02, "J = {}", q.j_eq);
    assert!(rel(q.vffw, 1.0) <= 1e-3, "VFFW = {}", q.vffw);
    assert!(rel(q.tffw, 0.002034) <= 1e-3, "TFFW = {}", q.tffw);
    for (name, d) in [("alpha", q.alpha), ("beta", q.beta), ("gamma", q.gamma)] {
        assert!((d - 9e-3).abs() <= 25e-6, "{name} = {d}");
    }
    let stages: Vec<&str> = reports.iter().map(|r| r.stage.as_str()).collect();
    assert_eq!(stages, ["friction", "inertia", "feedforward", "delays"]);
    assert!(t0.elapsed().as_secs() < 120);
}

#[test]
fn single_stages_leave_other_parameters_alone() {
    let traces = round_trip_traces();
    let start = wrong_start();
    let (q, reports) =
        identify_axis(&traces, &start, Stage::Feedforward, DEFAULT_PLANT_STEP).unwrap();
    assert_eq!(reports.len(), 1);
    assert!(rel(q.vffw, 1.0) <= 1e-3);
    assert_eq!(q.j_eq, start.j_eq);
    assert_eq!(q.friction, start.friction);
    assert_eq!((q.alpha, q.beta, q.gamma), (0.0, 0.0, 0.0));
}

#[test]
fn static_stage_without_rest_trace_is_an_error() {
    let traces = round_trip_traces();
    assert!(identify_axis(&traces, &axis("X"), Stage::Static, DEFAULT_PLANT_STEP).is_err());
}

#[test]
fn inertia_from_position_rate_traces_is_flagged() {
    let traces: Vec<_> = round_trip_traces()
        .iter()
        .map(|t| at_period(t, TSP).unwrap())
        .collect();
    let (_, reports) =
        identify_axis(&traces, &axis("X"), Stage::Inertia, DEFAULT_PLANT_STEP).unwrap();
    assert!(!reports[0].diagnostics.is_empty());
}

#[test]
fn friction_survives_current_noise() {
    let traces: Vec<_> = round_trip_traces()
        .iter()
        .enumerate()
        .map(|(k, t)| add_noise(t, "smc", 0.01, k as u64).unwrap())
        .collect();
    let (q, _) =
        identify_axis(&traces, &wrong_start(), Stage::Friction, DEFAULT_PLANT_STEP).unwrap();
    let truth = axis("X").friction;
    for v in [1.0, 5.0, 10.0, 18.0] {
        let (got, want) = (q.friction.kinetic_current(v), truth.kinetic_current(v));
        assert!((got - want).abs() < 5e-3, "{v} m/min: {got} vs {want}");
    }
}
