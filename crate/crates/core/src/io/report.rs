//! Structured summaries: run metrics, controller comparisons, tuning sweeps
//! and identification reports. Errors are reported in the axis display
//! position unit (mm or deg).

use std::fmt::Write as _;

use toml::{Table, Value};

use crate::engine::{Comparison, ErrorStats, RunMetrics, RunResult, SweepMetric, SweepRow};
use crate::identification::IdentReport;
use crate::trace::{Trace, TraceError};
use crate::units::{AxisKind, Dimension, Unit};

pub const REPORT_FORMAT_VERSION: u32 = 1;

fn f(v: f64) -> Value {
    Value::Float(v)
}

fn stats_table(s: &ErrorStats, scale: f64, dt: f64) -> Table {
    let mut t = Table::new();
    t.insert("max".into(), f(s.max * scale));
    t.insert("mean".into(), f(s.mean * scale));
    t.insert("rms".into(), f(s.rms * scale));
    t.insert("time_of_max".into(), f(s.argmax as f64 * dt));
    t.insert("samples".into(), Value::Integer(s.count as i64));
    t
}

fn kind_of(run: &RunResult) -> AxisKind {
    let unit = run.axes[0].trace.channel("sp").map(|c| c.unit);
    if unit.is_some_and(|u| u.is_angular()) {
        AxisKind::Rotary
    } else {
        AxisKind::Linear
    }
}

fn metrics_table(run: &RunResult, m: &RunMetrics) -> Table {
    let kind = kind_of(run);
    let unit = kind.position_unit();
    let scale = 1.0 / unit.to_si();
    let dt = run.axes[0].trace.dt();
    let mut t = Table::new();
    t.insert("unit".into(), Value::String(unit.symbol().into()));
    t.insert(
        "tracking".into(),
        Value::Table(stats_table(&m.tracking, scale, dt)),
    );
    t.insert(
        "steady".into(),
        Value::Table(stats_table(&m.steady, scale, dt)),
    );
    t.insert(
        "transient".into(),
        Value::Table(stats_table(&m.transient, scale, dt)),
    );
    if let Some(r) = m.max_radial {
        t.insert("max_radial".into(), f(r * scale));
    }
    if let Some(c) = m.corner_deviation {
        t.insert("corner_deviation".into(), f(c * scale));
    }
    let mut axes = Table::new();
    for (name, s) in &m.per_axis {
        let mut a = stats_table(s, scale, dt);
        if let Some(r) = run.axis(name) {
            a.insert("controller".into(), Value::String(r.controller.clone()));
            a.insert("reference_delay".into(), f(r.reference_delay));
            a.insert(
                "velocity_saturated".into(),
                Value::Boolean(r.velocity_saturated),
            );
            a.insert(
                "current_saturated".into(),
                Value::Boolean(r.current_saturated),
            );
        }
        axes.insert(name.clone(), Value::Table(a));
    }
    t.insert("axes".into(), Value::Table(axes));
    t
}

/// Metrics summary of one run.
pub fn metrics_to_string(run: &RunResult) -> String {
    let mut t = Table::new();
    t.insert(
        "format_version".into(),
        Value::Integer(REPORT_FORMAT_VERSION as i64),
    );
    t.insert("scenario".into(), Value::String(run.scenario.clone()));
    t.insert("motion_end".into(), f(run.motion_end));
    t.insert("saturated".into(), Value::Boolean(run.saturated()));
    t.insert(
        "warnings".into(),
        Value::Array(run.warnings().into_iter().map(Value::String).collect()),
    );
    t.extend(metrics_table(run, &run.metrics));
    toml::to_string(&t).expect("metrics serialize")
}

/// Cascade against RST on the same setpoints.
pub fn comparison_to_string(c: &Comparison) -> String {
    let mut t = Table::new();
    t.insert(
        "format_version".into(),
        Value::Integer(REPORT_FORMAT_VERSION as i64),
    );
    t.insert("scenario".into(), Value::String(c.cascade.scenario.clone()));
    t.insert("ratio".into(), f(c.ratio));
    if let Some(r) = c.radial_ratio {
        t.insert("radial_ratio".into(), f(r));
    }
    for (key, run) in [("cascade", &c.cascade), ("rst", &c.rst)] {
        let mut m = metrics_table(run, &run.metrics);
        m.insert("saturated".into(), Value::Boolean(run.saturated()));
        t.insert(key.into(), Value::Table(m));
    }
    toml::to_string(&t).expect("comparison serializes")
}

/// Ranked sweep table as CSV, best first. Errors in display units.
pub fn sweep_to_csv(rows: &[SweepRow], metric: SweepMetric, kind: AxisKind) -> String {
    let scale = 1.0 / kind.position_unit().to_si();
    let unit = kind.position_unit();
    let mut out = format!(
        "# format_version={REPORT_FORMAT_VERSION} metric={}\n",
        metric.name()
    );
    writeln!(
        out,
        "rank,n1,n2,nu,lambda,metric({unit}),max({unit}),rms({unit}),max_radial({unit}),status"
    )
    .unwrap();
    for (k, row) in rows.iter().enumerate() {
        let t = &row.tuning;
        write!(out, "{},{},{},{},{}", k + 1, t.n1, t.n2, t.nu, t.lambda).unwrap();
        match &row.outcome {
            Ok(cell) => {
                let radial = cell
                    .metrics
                    .max_radial
                    .map_or(String::new(), |r| format!("{:.6e}", r * scale));
                writeln!(
                    out,
                    ",{:.6e},{:.6e},{:.6e},{radial},ok",
                    cell.metric * scale,
                    cell.metrics.tracking.max * scale,
                    cell.metrics.tracking.rms * scale
                )
                .unwrap();
            }
            Err(e) => {
                writeln!(out, ",,,,,\"{}\"", e.replace('"', "'")).unwrap();
            }
        }
    }
    out
}

/// Identification reports of one axis.
pub fn ident_to_string(axis: &str, reports: &[IdentReport]) -> String {
    let mut t = Table::new();
    t.insert(
        "format_version".into(),
        Value::Integer(REPORT_FORMAT_VERSION as i64),
    );
    t.insert("axis".into(), Value::String(axis.into()));
    let stages = reports
        .iter()
        .map(|r| {
            let mut s = Table::new();
            s.insert("name".into(), Value::String(r.stage.clone()));
            s.insert("rms".into(), f(r.stats.rms));
            s.insert("r_squared".into(), f(r.stats.r_squared));
            s.insert("samples".into(), Value::Integer(r.stats.samples as i64));
            s.insert(
                "diagnostics".into(),
                Value::Array(r.diagnostics.iter().cloned().map(Value::String).collect()),
            );
            let mut v = Table::new();
            for (k, x) in &r.values {
                v.insert(k.clone(), f(*x));
            }
            s.insert("values".into(), Value::Table(v));
            Value::Table(s)
        })
        .collect();
    t.insert("stage".into(), Value::Array(stages));
    toml::to_string(&t).expect("report serializes")
}

/// Copy of a run trace with positions in mm (deg), velocities in m/min (rpm).
pub fn display_trace(trace: &Trace) -> Result<Trace, TraceError> {
    let mut out = trace.clone();
    for c in trace.channels() {
        let target = match (c.unit.dimension(), c.unit.is_angular()) {
            (Dimension::Position, false) => Unit::Millimeter,
            (Dimension::Position, true) => Unit::Degree,
            (Dimension::Velocity, false) => Unit::MeterPerMinute,
            (Dimension::Velocity, true) => Unit::Rpm,
            _ => continue,
        };
        out = out.convert(&c.name, target)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identification::FitStats;

    #[test]
    fn ident_report_lists_stages_in_order() {
        let r = IdentReport {
            stage: "friction".into(),
            values: vec![("a".into(), 1.5), ("b".into(), 0.02)],
            stats: FitStats {
                rms: 1e-4,
                r_squared: 0.999,
                samples: 25,
            },
            diagnostics: vec!["note".into()],
        };
        let text = ident_to_string("X", &[r]);
        let back: Table = text.parse().unwrap();
        let stage = &back["stage"].as_array().unwrap()[0];
        assert_eq!(stage["name"].as_str(), Some("friction"));
        assert_eq!(stage["values"]["b"].as_float(), Some(0.02));
        let keys: Vec<&String> = stage["values"].as_table().unwrap().keys().collect();
        assert_eq!(keys, ["a", "b"]);
    }

    #[test]
    fn display_trace_converts_units() {
        let t = Trace::new(0.006, 0.0)
            .unwrap()
            .with("sp", Unit::Meter, vec![0.001])
            .unwrap()
            .with(
                "sv",
                Unit::RadianPerSecond,
                vec![2.0 * std::f64::consts::PI / 60.0],
            )
            .unwrap()
            .with("smc", Unit::Ampere, vec![3.0])
            .unwrap();
        let d = display_trace(&t).unwrap();
        assert_eq!(d.channel("sp").unwrap().unit, Unit::Millimeter);
        assert!((d.channel("sp").unwrap().data[0] - 1.0).abs() < 1e-12);
        assert!((d.channel("sv").unwrap().data[0] - 1.0).abs() < 1e-12);
        assert_eq!(d.channel("smc").unwrap().data[0], 3.0);
    }
}
