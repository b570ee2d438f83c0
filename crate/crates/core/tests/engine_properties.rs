mod common;

use std::time::Instant;

use common::*;
use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{
    compare, run, tuning_grid, tuning_sweep, ControllerSpec, PathSource, Scenario, SweepMetric,
};
use feedsim::gpc::GpcTuning;
use feedsim::trajectory::{Geometry, Psec};

fn x_segment(v_m_per_min: f64, flags: FeedforwardFlags) -> Scenario {
    let v = m_per_min(v_m_per_min);
    // 1.5 s at cruise speed
    scenario(
        &["X"],
        Geometry::Segment {
            start: vec![0.0],
            end: vec![v * 1.5],
            feed: v,
        },
        feed(v, 1.0, 10.0),
    )
    .with_controller(ControllerSpec::Cascade(flags))
}

/// Position error in the middle of the cruise phase.
fn cruise_error(s: &Scenario) -> f64 {
    let t0 = Instant::now();
    let r = run(s).unwrap();
    assert!(t0.elapsed().as_secs_f64() < 10.0);
    assert!(r.motion_end + 0.5 <= 5.0 + 1e-9);
    let (a, b) = (r.accel_intervals[0].1, r.accel_intervals[1].0);
    let x = &r.axes[0];
    let k = (((a + b) / 2.0 + x.reference_delay) / x.trace.dt()).round() as usize;
    x.trace.channel("pos_err").unwrap().data[k]
}

#[test]
fn following_error_without_feedforward_is_v_over_kp() {
    let kp = axis("X").k_p;
    for v in [2.0, 6.0, 10.0] {
        let e = cruise_error(&x_segment(v, FeedforwardFlags::OFF));
        let expected = m_per_min(v) / kp;
        assert!(
            (e - expected).abs() <= 0.01 * expected,
            "{v} m/min: {e} vs {expected}"
        );
    }
}

#[test]
fn following_error_with_matched_feedforward_is_small() {
    for v in [2.0, 6.0, 10.0] {
        let e = cruise_error(&x_segment(v, FeedforwardFlags::BOTH));
        assert!(e.abs() < 5e-6, "{v} m/min: {e}");
    }
}

#[test]
fn peak_error_lies_in_acceleration_phases() {
    // with feedforward on; without it the error is a flat V/Kp plateau over the cruise
    for (name, s) in cases() {
        let r = run(&s).unwrap();
        let (k, inside) = peak_in_transient(&r);
        assert!(inside, "{name}: peak at {} s", r.axes[0].trace.time(k));
        assert!(!r.saturated(), "{name}");
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let s = circle150();
    let a = run(&s).unwrap();
    let b = run(&s).unwrap();
    for (x, y) in a.axes.iter().zip(&b.axes) {
        assert_eq!(x.trace, y.trace);
    }
    assert_eq!(a.metrics, b.metrics);
}

fn single_axis(s: &Scenario, psec: &Psec, axis: &str) -> Scenario {
    let k = psec.axes.iter().position(|a| a == axis).unwrap();
    let mut one = s.clone();
    one.source = PathSource::Sampled(Psec {
        axes: vec![axis.to_string()],
        traces: vec![psec.traces[k].clone()],
        accel_intervals: psec.accel_intervals.clone(),
        motion_end: psec.motion_end,
    });
    one
}

#[test]
fn multi_axis_run_equals_single_axis_runs() {
    for s in [
        circle150(),
        circle150().with_controller(ControllerSpec::Rst(GpcTuning::default())),
    ] {
        let psec = s.psec().unwrap();
        let multi = run(&s).unwrap();
        for name in ["X", "Y"] {
            let one = run(&single_axis(&s, &psec, name)).unwrap();
            assert_eq!(one.axes[0].trace, multi.axis(name).unwrap().trace, "{name}");
        }
    }
}

#[test]
fn rst_beats_cascade_on_the_circle() {
    let s = circle150();
    let c = compare(
        &s,
        ControllerSpec::Cascade(FeedforwardFlags::BOTH),
        ControllerSpec::Rst(GpcTuning::default()),
    )
    .unwrap();
    assert!(c.ratio <= 0.10, "ratio {}", c.ratio);
    assert!(!c.cascade.saturated() && !c.rst.saturated());
    // both runs saw the same setpoints
    for (a, b) in c.cascade.axes.iter().zip(&c.rst.axes) {
        assert_eq!(a.trace.channel("psec"), b.trace.channel("psec"));
    }
}

fn corner(angle_deg: f64, v_m_per_min: f64) -> Scenario {
    let v = m_per_min(v_m_per_min);
    scenario(
        &["X", "Y"],
        Geometry::Corner {
            angle: angle_deg.to_radians(),
            leg: 0.05,
            feed: v,
        },
        feed(v, 1.0, 10.0),
    )
}

#[test]
fn corner_deviation_grows_with_feed() {
    for angle in [45.0, 90.0] {
        let devs: Vec<f64> = [1.25, 2.5, 5.0, 10.0]
            .iter()
            .map(|v| {
                run(&corner(angle, *v))
                    .unwrap()
                    .metrics
                    .corner_deviation
                    .unwrap()
            })
            .collect();
        assert!(
            devs.windows(2).all(|w| w[1] >= w[0]),
            "{angle} deg: {devs:?}"
        );
    }
}

#[test]
fn corner_report_covers_both_controllers() {
    let c = compare(
        &corner(90.0, 10.0),
        ControllerSpec::Cascade(FeedforwardFlags::BOTH),
        ControllerSpec::Rst(GpcTuning::default()),
    )
    .unwrap();
    assert!(c.cascade.metrics.corner_deviation.unwrap() > 0.0);
    assert!(c.rst.metrics.corner_deviation.unwrap() > 0.0);
}

#[test]
fn singleton_sweep_equals_direct_run() {
    let s = circle150();
    let t = GpcTuning::default();
    let rows = tuning_sweep(&s, &[t], SweepMetric::MaxTracking).unwrap();
    let direct = run(&s.clone().with_controller(ControllerSpec::Rst(t))).unwrap();
    let cell = rows[0].outcome.as_ref().unwrap();
    assert_eq!(cell.metrics, direct.metrics);
    assert_eq!(cell.metric, direct.metrics.tracking.max);
}

fn circle_grid() -> Vec<GpcTuning> {
    tuning_grid(&[1], &[5, 10, 15, 20], &[1, 2, 3], &[0.1, 1.0, 10.0, 100.0])
}

#[test]
fn sweep_ranking_ignores_grid_order() {
    let s = circle150();
    let grid = circle_grid();
    let mut reversed = grid.clone();
    reversed.reverse();
    let a = tuning_sweep(&s, &grid, SweepMetric::MaxTracking).unwrap();
    let b = tuning_sweep(&s, &reversed, SweepMetric::MaxTracking).unwrap();
    assert_eq!(a, b);
}

#[test]
fn default_tuning_is_in_the_top_decile_on_the_circle() {
    let s = circle150();
    let grid = circle_grid();
    assert!(grid.contains(&GpcTuning::default()));
    let rows = tuning_sweep(&s, &grid, SweepMetric::MaxTracking).unwrap();
    let rank = rows
        .iter()
        .position(|r| r.tuning == GpcTuning::default())
        .unwrap();
    let decile = (rows.len() as f64 / 10.0).ceil() as usize;
    assert!(
        rank < decile,
        "default ranked {} of {}",
        rank + 1,
        rows.len()
    );
}

#[test]
fn sweep_records_failed_cells_and_continues() {
    let s = circle150();
    let bad = GpcTuning {
        n1: 3,
        n2: 2,
        nu: 1,
        lambda: 1.0,
    };
    let rows = tuning_sweep(&s, &[bad, GpcTuning::default()], SweepMetric::MaxTracking).unwrap();
    assert!(rows[0].outcome.is_ok());
    assert!(rows[1].outcome.is_err());
}
