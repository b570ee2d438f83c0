//! Scenario files (TOML, display units).
//!
//! ```toml
//! format_version = 1
//! name = "case1_x"
//! profile = "mikron_ucp710"   # bundled name, or a path relative to this file
//! duration = 3.0              # s, optional
//!
//! [path]
//! axes = ["X"]
//! kind = "segment"            # segment | two_speed | back_and_forth | circle | corner | polyline | sampled
//! start = [0.0]               # mm (deg for rotary axes)
//! end = [300.0]
//! feed = 10.0                 # m/min (rpm for rotary axes)
//!
//! [feed_profile]
//! max_accel = 1.0             # m/s² (rad/s² for rotary axes)
//! max_jerk = 10.0             # m/s³ (rad/s³), may be `inf`
//!
//! [controller]                # applies to every axis
//! kind = "cascade"            # cascade | rst | rst_file
//! feedforward = "both"        # off | velocity | both
//!
//! [controllers.Y]             # optional per-axis override
//! kind = "rst"
//! n1 = 1
//! n2 = 10
//! nu = 3
//! lambda = 10.0
//!
//! [compare]                   # optional, used by `compare`
//! feedforward = "both"
//! n1 = 1
//!
//! [run]
//! plant_step = 25.0           # µs
//! full_rate = false
//! ```
//!
//! A `sampled` path names a trace CSV (`file = "path.csv"`) holding
//! `psec.<axis>` or `sp.<axis>` channels; it is resampled at t_sp.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::profile::{load_profile, BUNDLED_NAME};
use super::rst_file::read_rst;
use super::{read_file, FormatError};
use crate::cascade::FeedforwardFlags;
use crate::engine::{ControllerSpec, PathSource, RunOptions, Scenario};
use crate::error::Error;
use crate::gpc::GpcTuning;
use crate::params::DEFAULT_PLANT_STEP;
use crate::trajectory::{ingest_sampled, FeedProfile, Geometry, PathSpec};

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRecord {
    format_version: u32,
    name: String,
    #[serde(default = "bundled")]
    profile: String,
    duration: Option<f64>,
    path: toml::Table,
    feed_profile: Option<FeedRecord>,
    #[serde(default)]
    controller: Option<ControllerRecord>,
    #[serde(default)]
    controllers: BTreeMap<String, ControllerRecord>,
    compare: Option<CompareRecord>,
    #[serde(default)]
    run: RunRecord,
}

fn bundled() -> String {
    BUNDLED_NAME.into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedRecord {
    max_feed: Option<f64>,
    max_accel: f64,
    max_jerk: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerRecord {
    kind: String,
    feedforward: Option<String>,
    n1: Option<usize>,
    n2: Option<usize>,
    nu: Option<usize>,
    lambda: Option<f64>,
    file: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRecord {
    feedforward: Option<String>,
    n1: Option<usize>,
    n2: Option<usize>,
    nu: Option<usize>,
    lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRecord {
    /// µs.
    plant_step: Option<f64>,
    #[serde(default)]
    full_rate: bool,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum GeometryRecord {
    Segment {
        start: Vec<f64>,
        end: Vec<f64>,
        feed: f64,
    },
    TwoSpeed {
        start: Vec<f64>,
        mid: Vec<f64>,
        end: Vec<f64>,
        v1: f64,
        v2: f64,
    },
    BackAndForth {
        start: Vec<f64>,
        end: Vec<f64>,
        feed: f64,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        feed: f64,
    },
    Corner {
        /// Degrees.
        angle: f64,
        leg: f64,
        feed: f64,
    },
    Polyline {
        points: Vec<Vec<f64>>,
        feeds: Vec<f64>,
    },
    Sampled {
        file: String,
    },
}

/// A scenario as loaded from a file, plus the comparison pair.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    /// Cascade and RST controllers for `compare`.
    pub compare: (ControllerSpec, ControllerSpec),
    /// Whether the file set the plant step (the CLI flag overrides otherwise).
    pub plant_step_set: bool,
}

fn flags(s: Option<&str>, origin: &str) -> Result<FeedforwardFlags, FormatError> {
    match s.unwrap_or("both") {
        "off" => Ok(FeedforwardFlags::OFF),
        "velocity" => Ok(FeedforwardFlags::VELOCITY),
        "both" => Ok(FeedforwardFlags::BOTH),
        other => Err(FormatError::new(
            origin,
            None,
            format!("feedforward must be off, velocity or both, not `{other}`"),
        )),
    }
}

fn tuning(
    n1: Option<usize>,
    n2: Option<usize>,
    nu: Option<usize>,
    lambda: Option<f64>,
) -> GpcTuning {
    let d = GpcTuning::default();
    GpcTuning {
        n1: n1.unwrap_or(d.n1),
        n2: n2.unwrap_or(d.n2),
        nu: nu.unwrap_or(d.nu),
        lambda: lambda.unwrap_or(d.lambda),
    }
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn controller(r: &ControllerRecord, origin: &str, base: &Path) -> Result<ControllerSpec, Error> {
    match r.kind.as_str() {
        "cascade" => Ok(ControllerSpec::Cascade(flags(
            r.feedforward.as_deref(),
            origin,
        )?)),
        "rst" => Ok(ControllerSpec::Rst(tuning(r.n1, r.n2, r.nu, r.lambda))),
        "rst_file" => {
            let file = r.file.as_deref().ok_or_else(|| {
                FormatError::new(origin, None, "controller kind rst_file needs `file`")
            })?;
            Ok(ControllerSpec::RstPolynomials(
                read_rst(&resolve(base, file))?.rst,
            ))
        }
        other => Err(FormatError::new(
            origin,
            None,
            format!("controller kind must be cascade, rst or rst_file, not `{other}`"),
        )
        .into()),
    }
}

/// Parses scenario text; relative file references resolve against `base`.
pub fn parse_scenario(text: &str, origin: &str, base: &Path) -> Result<ScenarioFile, Error> {
    let rec: ScenarioRecord =
        toml::from_str(text).map_err(|e| FormatError::from_toml(origin, text, &e))?;
    let bad = |m: String| Error::Format(FormatError::new(origin, None, m));
    if rec.format_version != SCENARIO_FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format_version {} (expected {SCENARIO_FORMAT_VERSION})",
            rec.format_version
        )));
    }
    let profile_ref = if rec.profile == BUNDLED_NAME {
        rec.profile.clone()
    } else {
        resolve(base, &rec.profile).display().to_string()
    };
    let profile = load_profile(&profile_ref)?;

    let mut path_table = rec.path.clone();
    let axes: Vec<String> = path_table
        .remove("axes")
        .ok_or_else(|| bad("[path] needs `axes`".into()))?
        .try_into()
        .map_err(|e: toml::de::Error| bad(format!("[path] axes: {}", e.message())))?;
    if axes.is_empty() {
        return Err(bad("[path] axes is empty".into()));
    }
    let first = profile.axis(&axes[0]).ok_or_else(|| {
        bad(format!(
            "axis {} is not in profile {}",
            axes[0], profile.machine
        ))
    })?;
    let (kind, t_sp) = (first.kind, first.t_sp);
    let geom: GeometryRecord = toml::Value::Table(path_table)
        .try_into()
        .map_err(|e: toml::de::Error| bad(format!("[path]: {}", e.message())))?;
    let pos = kind.position_to_si();
    let vel = kind.velocity_to_si();
    let scale = |v: &[f64]| v.iter().map(|x| x * pos).collect::<Vec<f64>>();

    let mut plant_step_set = false;
    let options = RunOptions {
        plant_step: match rec.run.plant_step {
            Some(us) => {
                plant_step_set = true;
                us * 1e-6
            }
            None => DEFAULT_PLANT_STEP,
        },
        full_rate: rec.run.full_rate,
        setpoint_offset: 0,
    };

    let source = match geom {
        GeometryRecord::Sampled { file } => {
            let r = ingest_sampled(&resolve(base, &file), &axes, t_sp)?;
            PathSource::Sampled(r.psec)
        }
        g => {
            let geometry = match g {
                GeometryRecord::Segment { start, end, feed } => Geometry::Segment {
                    start: scale(&start),
                    end: scale(&end),
                    feed: feed * vel,
                },
                GeometryRecord::TwoSpeed {
                    start,
                    mid,
                    end,
                    v1,
                    v2,
                } => Geometry::TwoSpeed {
                    start: scale(&start),
                    mid: scale(&mid),
                    end: scale(&end),
                    v1: v1 * vel,
                    v2: v2 * vel,
                },
                GeometryRecord::BackAndForth { start, end, feed } => Geometry::BackAndForth {
                    start: scale(&start),
                    end: scale(&end),
                    feed: feed * vel,
                },
                GeometryRecord::Circle {
                    center,
                    radius,
                    feed,
                } => Geometry::Circle {
                    center: [center[0] * pos, center[1] * pos],
                    radius: radius * pos,
                    feed: feed * vel,
                },
                GeometryRecord::Corner { angle, leg, feed } => Geometry::Corner {
                    angle: angle.to_radians(),
                    leg: leg * pos,
                    feed: feed * vel,
                },
                GeometryRecord::Polyline { points, feeds } => Geometry::Polyline {
                    points: points.iter().map(|p| scale(p)).collect(),
                    feeds: feeds.iter().map(|f| f * vel).collect(),
                },
                GeometryRecord::Sampled { .. } => unreachable!(),
            };
            let fp = rec
                .feed_profile
                .as_ref()
                .ok_or_else(|| bad("generated paths need a [feed_profile] section".into()))?;
            let max_feed = match fp.max_feed {
                Some(f) => f * vel,
                None => geometry.max_feed(),
            };
            PathSource::Generated {
                path: PathSpec {
                    axes: axes.clone(),
                    geometry,
                },
                feed: FeedProfile {
                    max_feed,
                    max_accel: fp.max_accel,
                    max_jerk: fp.max_jerk,
                },
            }
        }
    };

    let default_controller = match &rec.controller {
        Some(c) => controller(c, origin, base)?,
        None => ControllerSpec::default(),
    };
    let mut controllers = BTreeMap::new();
    for (axis, c) in &rec.controllers {
        controllers.insert(axis.clone(), controller(c, origin, base)?);
    }
    let cmp = rec.compare.clone().unwrap_or_default();
    let compare = (
        ControllerSpec::Cascade(flags(cmp.feedforward.as_deref(), origin)?),
        ControllerSpec::Rst(tuning(cmp.n1, cmp.n2, cmp.nu, cmp.lambda)),
    );
    Ok(ScenarioFile {
        scenario: Scenario {
            name: rec.name,
            profile,
            source,
            default_controller,
            controllers,
            duration: rec.duration,
            options,
        },
        compare,
        plant_step_set,
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, Error> {
    let text = read_file(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, &path.display().to_string(), base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE1: &str = r#"
format_version = 1
name = "case1_x"
[path]
axes = ["X"]
kind = "segment"
start = [0.0]
end = [300.0]
feed = 10.0
[feed_profile]
max_accel = 1.0
max_jerk = 10.0
"#;

    #[test]
    fn display_units_are_converted() {
        let f = parse_scenario(CASE1, "mem", Path::new(".")).unwrap();
        let PathSource::Generated { path, feed } = &f.scenario.source else {
            panic!()
        };
        match &path.geometry {
            Geometry::Segment { end, feed: v, .. } => {
                assert!((end[0] - 0.3).abs() < 1e-15);
                assert!((v - 10.0 / 60.0).abs() < 1e-15);
            }
            g => panic!("{g:?}"),
        }
        assert!((feed.max_feed - 10.0 / 60.0).abs() < 1e-15);
        assert_eq!(
            f.scenario.default_controller,
            ControllerSpec::Cascade(FeedforwardFlags::BOTH)
        );
        assert_eq!(f.scenario.options.plant_step, DEFAULT_PLANT_STEP);
        assert!(!f.plant_step_set);
    }

    #[test]
    fn rotary_corner_and_overrides() {
        let text = r#"
format_version = 1
name = "ac"
duration = 5.0
[path]
axes = ["A", "C"]
kind = "corner"
angle = 90.0
leg = 20.0
feed = 5.0
[feed_profile]
max_accel = 10.0
max_jerk = inf
[controllers.C]
kind = "rst"
lambda = 2.0
[run]
plant_step = 25.0
"#;
        let f = parse_scenario(text, "mem", Path::new(".")).unwrap();
        let PathSource::Generated { path, .. } = &f.scenario.source else {
            panic!()
        };
        match &path.geometry {
            Geometry::Corner { angle, leg, feed } => {
                assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
                assert!((leg - 20f64.to_radians()).abs() < 1e-15);
                assert!((feed - 5.0 * 2.0 * std::f64::consts::PI / 60.0).abs() < 1e-15);
            }
            g => panic!("{g:?}"),
        }
        match f.scenario.controller_for("C") {
            ControllerSpec::Rst(t) => assert_eq!((t.n2, t.lambda), (GpcTuning::default().n2, 2.0)),
            c => panic!("{c:?}"),
        }
        assert!(f.plant_step_set);
        assert_eq!(f.scenario.duration, Some(5.0));
    }

    #[test]
    fn schema_errors_are_format_errors() {
        let e = parse_scenario(
            &CASE1.replace("feed = 10.0", "feed = 10.0\nbogus = 1"),
            "f",
            Path::new("."),
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 4, "{e}");
        let e = parse_scenario(
            &CASE1.replace("format_version = 1", "format_version = 9"),
            "f",
            Path::new("."),
        )
        .unwrap_err();
        assert!(e.to_string().contains("format_version"));
        let e = parse_scenario(
            &CASE1.replace("name = \"case1_x\"", "name = 3"),
            "f",
            Path::new("."),
        )
        .unwrap_err();
        assert!(
            matches!(e, Error::Format(FormatError { line: Some(3), .. })),
            "{e:?}"
        );
        let e = parse_scenario(&CASE1.replace("\"X\"", "\"Q\""), "f", Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("not in profile"));
    }
}
