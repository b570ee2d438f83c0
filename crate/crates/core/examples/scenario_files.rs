//! Loads every bundled scenario file and runs it with its own controller.

use std::path::Path;

use feedsim::engine::run;
use feedsim::io::scenario_file::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scenario"))
        .collect();
    files.sort();
    for f in files {
        let s = load_scenario(&f)?.scenario;
        let r = run(&s)?;
        println!(
            "{:<12} axes {:<8} max tracking {:10.3} um, saturated {}",
            s.name,
            s.axes().join(","),
            r.metrics.tracking.max * 1e6,
            r.saturated()
        );
    }
    Ok(())
}
