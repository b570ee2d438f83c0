//! Simulates X-axis runs with the bundled parameters, then recovers friction,
//! inertia, feedforward gains and adjustment delays from the traces alone.

use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{run, ControllerSpec, Scenario};
use feedsim::identification::{identify_axis, Stage};
use feedsim::io::bundled_profile;
use feedsim::params::DEFAULT_PLANT_STEP;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};
use feedsim::{FrictionParams, Trace};

fn record(g: Geometry, flags: FeedforwardFlags, full_rate: bool) -> Trace {
    let path = PathSpec {
        axes: vec!["X".into()],
        geometry: g,
    };
    let feed = FeedProfile {
        max_feed: 0.3,
        max_accel: 1.0,
        max_jerk: 10.0,
    };
    let mut s = Scenario::new("x", bundled_profile().clone(), path, feed)
        .with_controller(ControllerSpec::Cascade(flags));
    s.options.full_rate = full_rate;
    run(&s).unwrap().axes.remove(0).trace
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = 10.0 / 60.0;
    let seg = Geometry::Segment {
        start: vec![0.0],
        end: vec![0.3],
        feed: v,
    };
    // constant-speed legs for the friction law
    let mut points = vec![vec![0.0]];
    let mut feeds = vec![];
    for s in [
        0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 18.0,
    ] {
        let s = s / 60.0;
        points.push(vec![s * 0.8 + s * s + 0.005]);
        points.push(vec![0.0]);
        feeds.extend([s, s]);
    }
    let traces = vec![
        record(seg.clone(), FeedforwardFlags::OFF, true),
        record(seg.clone(), FeedforwardFlags::VELOCITY, true),
        record(seg, FeedforwardFlags::BOTH, true),
        record(
            Geometry::TwoSpeed {
                start: vec![0.0],
                mid: vec![0.2],
                end: vec![0.3],
                v1: v,
                v2: 4.0 / 60.0,
            },
            FeedforwardFlags::BOTH,
            true,
        ),
        record(
            Geometry::BackAndForth {
                start: vec![0.0],
                end: vec![0.3],
                feed: v,
            },
            FeedforwardFlags::BOTH,
            true,
        ),
        record(
            Geometry::Polyline { points, feeds },
            FeedforwardFlags::BOTH,
            false,
        ),
    ];

    let truth = bundled_profile().axis("X").unwrap();
    let mut start = truth.clone();
    start.friction = FrictionParams::frictionless();
    start.j_eq = 0.05;
    start.vffw = 0.5;
    start.tffw = 0.0;
    start.alpha = 0.0;
    start.beta = 0.0;
    start.gamma = 0.0;

    let (q, reports) = identify_axis(&traces, &start, Stage::All, DEFAULT_PLANT_STEP)?;
    for r in &reports {
        println!(
            "{:>12}: rms {:.3e}, R2 {:.5}",
            r.stage, r.stats.rms, r.stats.r_squared
        );
    }
    let f = (&q.friction, &truth.friction);
    println!("friction a {:.4} / {:.4}", f.0.a, f.1.a);
    println!("friction b {:.5} / {:.5}", f.0.b, f.1.b);
    println!("friction c {:.4} / {:.4}", f.0.c, f.1.c);
    println!("friction d {:.4} / {:.4}", f.0.d, f.1.d);
    println!("J_eq {:.5} / {:.5} kg m2", q.j_eq, truth.j_eq);
    println!(
        "VFFW {:.4} / {:.4}, TFFW {:.6} / {:.6}",
        q.vffw, truth.vffw, q.tffw, truth.tffw
    );
    println!(
        "delays alpha {:.3} beta {:.3} gamma {:.3} ms (truth {:.3} {:.3} {:.3})",
        q.alpha * 1e3,
        q.beta * 1e3,
        q.gamma * 1e3,
        truth.alpha * 1e3,
        truth.beta * 1e3,
        truth.gamma * 1e3
    );
    Ok(())
}
