//! X axis, 0 to 300 mm at 10 m/min, with each feedforward setting.
//!
//! Without feedforward the cruise error settles at V/Kp; with both terms it
//! only appears while the axis accelerates.

use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{run, ControllerSpec, Scenario};
use feedsim::io::bundled_profile;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = 10.0 / 60.0;
    let path = PathSpec {
        axes: vec!["X".into()],
        geometry: Geometry::Segment {
            start: vec![0.0],
            end: vec![0.3],
            feed: v,
        },
    };
    let feed = FeedProfile {
        max_feed: v,
        max_accel: 1.0,
        max_jerk: 10.0,
    };
    let kp = bundled_profile().axis("X").unwrap().k_p;
    println!("V/Kp = {:.3} mm", v / kp * 1e3);
    for (label, flags) in [
        ("off", FeedforwardFlags::OFF),
        ("velocity", FeedforwardFlags::VELOCITY),
        ("both", FeedforwardFlags::BOTH),
    ] {
        let s = Scenario::new("case1", bundled_profile().clone(), path.clone(), feed)
            .with_controller(ControllerSpec::Cascade(flags));
        let r = run(&s)?;
        let m = &r.metrics;
        println!(
            "{label:>8}: max {:.4} mm at {:.3} s, steady max {:.4} mm, transient max {:.4} mm",
            m.tracking.max * 1e3,
            r.axes[0].trace.time(m.tracking.argmax),
            m.steady.max * 1e3,
            m.transient.max * 1e3
        );
    }
    Ok(())
}
