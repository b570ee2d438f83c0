//! Deviation at a 90 deg and a 45 deg corner as the feed rises.

use feedsim::engine::{run, Scenario};
use feedsim::io::bundled_profile;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for angle in [90.0f64, 45.0] {
        for feed in [1.25, 2.5, 5.0, 10.0] {
            let v = feed / 60.0;
            let path = PathSpec {
                axes: vec!["X".into(), "Y".into()],
                geometry: Geometry::Corner {
                    angle: angle.to_radians(),
                    leg: 0.05,
                    feed: v,
                },
            };
            let limits = FeedProfile {
                max_feed: v,
                max_accel: 1.0,
                max_jerk: 10.0,
            };
            let r = run(&Scenario::new(
                "corner",
                bundled_profile().clone(),
                path,
                limits,
            ))?;
            println!(
                "{angle:4} deg at {feed:5.2} m/min: corner deviation {:8.3} um",
                r.metrics.corner_deviation.unwrap_or(f64::NAN) * 1e6
            );
        }
    }
    Ok(())
}
