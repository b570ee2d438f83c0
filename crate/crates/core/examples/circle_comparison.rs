//! Cascade against RST on a 150 mm circle at 15 m/min.

use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{compare, ControllerSpec, Scenario};
use feedsim::gpc::GpcTuning;
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
    let c = compare(
        &s,
        ControllerSpec::Cascade(FeedforwardFlags::BOTH),
        ControllerSpec::Rst(GpcTuning::default()),
    )?;
    for (name, r) in [("cascade", &c.cascade), ("rst", &c.rst)] {
        println!(
            "{name:>8}: max tracking {:7.2} um, rms {:7.2} um, max radial {:7.2} um",
            r.metrics.tracking.max * 1e6,
            r.metrics.tracking.rms * 1e6,
            r.metrics.max_radial.unwrap_or(f64::NAN) * 1e6
        );
    }
    println!("tracking ratio rst/cascade = {:.4}", c.ratio);
    if let Some(q) = c.radial_ratio {
        println!("radial ratio rst/cascade = {q:.4}");
    }
    Ok(())
}
