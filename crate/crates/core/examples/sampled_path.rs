//! Runs a 3-D spline sampled at 1 kHz through X, Y and Z. The path is
//! resampled to the position cycle before the run.

use std::path::Path;

use feedsim::engine::run;
use feedsim::io::bundled_profile;
use feedsim::io::scenario_file::load_scenario;
use feedsim::trajectory::ingest_sampled;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let axes: Vec<String> = ["X", "Y", "Z"].iter().map(|a| a.to_string()).collect();
    let t_sp = bundled_profile().axis("X").unwrap().t_sp;
    let r = ingest_sampled(&dir.join("spline3d.csv"), &axes, t_sp)?;
    println!(
        "{} samples at {} ms, largest resampling displacement {:.3} um",
        r.psec.traces[0].len(),
        t_sp * 1e3,
        r.max_displacement * 1e6
    );

    let s = load_scenario(&dir.join("spline3d.scenario"))?.scenario;
    let out = run(&s)?;
    for (axis, e) in &out.metrics.per_axis {
        println!(
            "{axis}: max {:.3} um, rms {:.3} um",
            e.max * 1e6,
            e.rms * 1e6
        );
    }
    println!(
        "overall max tracking error {:.3} um",
        out.metrics.tracking.max * 1e6
    );
    Ok(())
}
