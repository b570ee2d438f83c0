//! Ranks RST tunings on the 150 mm circle by max tracking error.

use feedsim::engine::{tuning_grid, tuning_sweep, Scenario, SweepMetric};
use feedsim::io::bundled_profile;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = 15.0 / 60.0;
    let path = PathSpec {
        axes: vec!["X".into(), "Y".into()],
        geometry: Geometry::Circle {
            center: [0.0, 0.0],
            radius: 0.15,
            feed: v,
        },
    };
    let feed = FeedProfile {
        max_feed: v,
        max_accel: 1.0,
        max_jerk: 10.0,
    };
    let s = Scenario::new("circle150", bundled_profile().clone(), path, feed);
    let grid = tuning_grid(&[1], &[5, 10, 15, 20], &[1, 2, 3], &[0.1, 1.0, 10.0, 100.0]);
    let rows = tuning_sweep(&s, &grid, SweepMetric::MaxTracking)?;
    println!(
        "{:>4} {:>3} {:>3} {:>3} {:>8} {:>12}",
        "rank", "n1", "n2", "nu", "lambda", "max [um]"
    );
    for (k, r) in rows.iter().enumerate().take(10) {
        let t = r.tuning;
        match &r.outcome {
            Ok(c) => println!(
                "{:4} {:3} {:3} {:3} {:8} {:12.3}",
                k + 1,
                t.n1,
                t.n2,
                t.nu,
                t.lambda,
                c.metric * 1e6
            ),
            Err(e) => println!("{:4} {t:?} failed: {e}", k + 1),
        }
    }
    Ok(())
}
