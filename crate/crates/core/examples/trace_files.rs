//! Writes a run to CSV in display units and reads it back.

use feedsim::engine::{run, Scenario};
use feedsim::io::report::display_trace;
use feedsim::io::{bundled_profile, read_trace, write_trace};
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = 6.0 / 60.0;
    let path = PathSpec {
        axes: vec!["X".into()],
        geometry: Geometry::BackAndForth {
            start: vec![0.0],
            end: vec![0.1],
            feed: v,
        },
    };
    let feed = FeedProfile {
        max_feed: v,
        max_accel: 1.0,
        max_jerk: 10.0,
    };
    let r = run(&Scenario::new("x", bundled_profile().clone(), path, feed))?;
    let shown = display_trace(&r.combined_trace()?)?;

    let file = std::env::temp_dir().join("feedsim_trace_example.csv");
    write_trace(&shown, &file)?;
    let back = read_trace(&file)?;
    println!(
        "{} rows, dt {} s, written to {}",
        back.len(),
        back.dt(),
        file.display()
    );
    for c in back.channels() {
        let max = c.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!("{:>10} [{:?}] max |value| {max:.6}", c.name, c.unit);
    }
    // the file holds display units; `si` converts back
    let sp = back.si("sp.X")?;
    println!(
        "largest sp.X in SI: {:.6} m",
        sp.iter().cloned().fold(0.0, f64::max)
    );
    Ok(())
}
