//! C axis: 0 to 130 deg at 18 rpm, then on to 210 deg at 6 rpm.

use std::f64::consts::PI;

use feedsim::engine::{run, Scenario};
use feedsim::io::bundled_profile;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rpm = |v: f64| v * 2.0 * PI / 60.0;
    let deg = PI / 180.0;
    let path = PathSpec {
        axes: vec!["C".into()],
        geometry: Geometry::TwoSpeed {
            start: vec![0.0],
            mid: vec![130.0 * deg],
            end: vec![210.0 * deg],
            v1: rpm(18.0),
            v2: rpm(6.0),
        },
    };
    let feed = FeedProfile {
        max_feed: rpm(18.0),
        max_accel: 10.0,
        max_jerk: 100.0,
    };
    let r = run(&Scenario::new(
        "case2",
        bundled_profile().clone(),
        path,
        feed,
    ))?;
    let c = &r.axes[0];
    println!("motion ends at {:.3} s", r.motion_end);
    for (a, b) in &r.accel_intervals {
        println!("accelerating {a:.3} .. {b:.3} s");
    }
    println!(
        "max tracking error {:.5} deg at {:.3} s, saturated: {}",
        r.metrics.tracking.max / deg,
        c.trace.time(r.metrics.tracking.argmax),
        r.saturated()
    );
    Ok(())
}
