//! Trace CSV files.
//!
//! ```text
//! # format_version=1 dt=0.006 t0=0
//! t(s),psec.X(mm),sp.X(mm)
//! 0.00000000000e0,0.00000000000e0,0.00000000000e0
//! ```
//!
//! Values are printed with 12 significant digits. The metadata line is
//! optional on input; without it `dt` is derived from the time column.

use std::fmt::Write as _;
use std::path::Path;

use super::{read_file, write_file, FormatError, IoError};
use crate::trace::Trace;
use crate::units::Unit;

pub const TRACE_FORMAT_VERSION: u32 = 1;

/// Maximum deviation of a time stamp from the uniform grid, s.
pub const TIME_GRID_TOL: f64 = 1e-9;

fn fmt_value(out: &mut String, v: f64) {
    write!(out, "{v:.11e}").unwrap();
}

pub fn trace_to_string(trace: &Trace) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "# format_version={TRACE_FORMAT_VERSION} dt={:e} t0={:e}",
        trace.dt(),
        trace.t0()
    )
    .unwrap();
    out.push_str("t(s)");
    for c in trace.channels() {
        write!(out, ",{}({})", c.name, c.unit).unwrap();
    }
    out.push('\n');
    for k in 0..trace.len() {
        fmt_value(&mut out, trace.time(k));
        for c in trace.channels() {
            out.push(',');
            fmt_value(&mut out, c.data[k]);
        }
        out.push('\n');
    }
    out
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), IoError> {
    write_file(path, &trace_to_string(trace))
}

pub fn read_trace(path: &Path) -> Result<Trace, IoError> {
    let text = read_file(path)?;
    Ok(trace_from_str(&text, &path.display().to_string())?)
}

fn parse_column(col: &str) -> Option<(&str, &str)> {
    let col = col.trim();
    let open = col.find('(')?;
    if !col.ends_with(')') {
        return None;
    }
    Some((col[..open].trim(), &col[open + 1..col.len() - 1]))
}

/// Parses trace CSV text; `origin` names the source in error messages.
pub fn trace_from_str(text: &str, origin: &str) -> Result<Trace, FormatError> {
    let err = |line: usize, msg: String| FormatError::new(origin, Some(line), msg);

    let mut meta_dt = None;
    let mut meta_t0 = None;
    let mut header: Option<(usize, Vec<(String, Unit)>)> = None;
    let mut times = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if header.is_none() {
                for kv in comment.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else {
                        continue;
                    };
                    let parse = |v: &str| {
                        v.parse::<f64>()
                            .map_err(|_| err(line_no, format!("bad metadata value `{kv}`")))
                    };
                    match k {
                        "format_version" => {
                            if v != TRACE_FORMAT_VERSION.to_string() {
                                return Err(err(
                                    line_no,
                                    format!("unsupported format_version {v}"),
                                ));
                            }
                        }
                        "dt" => meta_dt = Some(parse(v)?),
                        "t0" => meta_t0 = Some(parse(v)?),
                        _ => {}
                    }
                }
            }
            continue;
        }
        match &header {
            None => {
                let mut cols = line.split(',');
                let first = cols.next().unwrap_or("");
                if parse_column(first) != Some(("t", "s")) {
                    return Err(err(
                        line_no,
                        format!("first column must be `t(s)`, found `{first}`"),
                    ));
                }
                let mut chans = Vec::new();
                for col in cols {
                    let (name, unit) = parse_column(col).ok_or_else(|| {
                        err(line_no, format!("column `{col}` must look like name(unit)"))
                    })?;
                    let unit: Unit = unit.parse().map_err(|m| err(line_no, m))?;
                    chans.push((name.to_string(), unit));
                }
                columns = vec![Vec::new(); chans.len()];
                header = Some((line_no, chans));
            }
            Some((_, chans)) => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != chans.len() + 1 {
                    return Err(err(
                        line_no,
                        format!(
                            "row has {} fields, header has {}",
                            fields.len(),
                            chans.len() + 1
                        ),
                    ));
                }
                let mut values = fields.iter().map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| err(line_no, format!("cannot parse number `{}`", f.trim())))
                });
                let t = values.next().unwrap()?;
                if let Some(&prev) = times.last() {
                    if !(t > prev) {
                        return Err(err(line_no, format!("time {t} is not strictly increasing")));
                    }
                }
                times.push(t);
                for (col, v) in columns.iter_mut().zip(values) {
                    col.push(v?);
                }
            }
        }
    }

    let (header_line, chans) =
        header.ok_or_else(|| FormatError::new(origin, None, "missing header row"))?;
    let first_data_line = header_line + 1;
    let t0 = meta_t0.or(times.first().copied()).unwrap_or(0.0);
    let dt = match meta_dt {
        Some(dt) => dt,
        None if times.len() >= 2 => (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64,
        None => {
            return Err(FormatError::new(
                origin,
                None,
                "cannot infer dt from fewer than two rows",
            ))
        }
    };
    // Comment lines between rows are not expected; report positions by row.
    let data_lines: Vec<usize> = text
        .lines()
        .enumerate()
        .skip(first_data_line - 1)
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, _)| i + 1)
        .collect();
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > TIME_GRID_TOL {
            let line = data_lines.get(k).copied().unwrap_or(first_data_line + k);
            return Err(err(
                line,
                format!("non-uniform sampling: t = {t} but the grid gives {expected} (dt = {dt})"),
            ));
        }
    }

    let mut trace = Trace::new(dt, t0).map_err(|e| err(header_line, e.to_string()))?;
    for ((name, unit), data) in chans.into_iter().zip(columns) {
        trace
            .push(&name, unit, data)
            .map_err(|e| err(header_line, e.to_string()))?;
    }
    Ok(trace)
}
