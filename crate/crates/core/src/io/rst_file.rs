//! RST controller exports (TOML).
//!
//! ```toml
//! format_version = 1
//! axis = "X"
//! t_sp = 6.0          # ms
//! r = [..]            # coefficients of z⁻¹ powers
//! s = [..]            # monic
//! t = [..]            # t[j] weights the reference j periods ahead
//!
//! [tuning]
//! n1 = 1
//! n2 = 10
//! nu = 3
//! lambda = 10.0
//!
//! [model]             # CARIMA model the controller was synthesized on
//! a = [..]
//! b = [..]
//! tau = 3.7           # ms, fitted velocity-loop lag
//! fit_rms = 0.047
//!
//! [diagnostics]
//! condition = 1.2e3
//! phase_margin = 56.0 # deg
//! gain_margin = 3.4
//! crossover = 90.0    # rad/s
//! ```
//!
//! Only `format_version`, `t_sp`, `r`, `s` and `t` are required on input.
//! Coefficients are written in shortest round-trip form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, FormatError, IoError};
use crate::gpc::{GpcTuning, Margins, RstPolynomials};

pub const RST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelInfo {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// s.
    pub tau: f64,
    pub fit_rms: f64,
}

/// An RST controller with the information needed to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct RstExport {
    pub axis: Option<String>,
    pub rst: RstPolynomials,
    pub tuning: Option<GpcTuning>,
    pub model: Option<ModelInfo>,
    pub condition: Option<f64>,
    pub margins: Option<Margins>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TuningRecord {
    n1: usize,
    n2: usize,
    nu: usize,
    lambda: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    a: Vec<f64>,
    b: Vec<f64>,
    tau: f64,
    fit_rms: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagnosticsRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gain_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    crossover: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RstRecord {
    format_version: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<String>,
    t_sp: f64,
    r: Vec<f64>,
    s: Vec<f64>,
    t: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuning: Option<TuningRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsRecord>,
}

/// Seconds to milliseconds, rounded to 1e-12 ms so files re-serialize identically.
fn ms(x: f64) -> f64 {
    (x * 1e15).round() / 1e12
}

pub fn rst_to_string(e: &RstExport) -> String {
    let diagnostics = DiagnosticsRecord {
        condition: e.condition,
        phase_margin: e.margins.and_then(|m| m.phase_margin),
        gain_margin: e.margins.and_then(|m| m.gain_margin),
        crossover: e.margins.and_then(|m| m.crossover),
    };
    let any_diag = diagnostics.condition.is_some() || e.margins.is_some();
    let rec = RstRecord {
        format_version: RST_FORMAT_VERSION,
        axis: e.axis.clone(),
        t_sp: ms(e.rst.t_sp),
        r: e.rst.r.clone(),
        s: e.rst.s.clone(),
        t: e.rst.t.clone(),
        tuning: e.tuning.map(|t| TuningRecord {
            n1: t.n1,
            n2: t.n2,
            nu: t.nu,
            lambda: t.lambda,
        }),
        model: e.model.as_ref().map(|m| ModelRecord {
            a: m.a.clone(),
            b: m.b.clone(),
            tau: ms(m.tau),
            fit_rms: m.fit_rms,
        }),
        diagnostics: any_diag.then_some(diagnostics),
    };
    toml::to_string(&rec).expect("RST record serializes")
}

/// Parses an RST export and checks `S(1) = 0`, `T(1) = R(1)`.
pub fn rst_from_str(text: &str, origin: &str) -> Result<RstExport, FormatError> {
    let rec: RstRecord =
        toml::from_str(text).map_err(|e| FormatError::from_toml(origin, text, &e))?;
    if rec.format_version != RST_FORMAT_VERSION {
        return Err(FormatError::new(
            origin,
            None,
            format!(
                "unsupported format_version {} (expected {RST_FORMAT_VERSION})",
                rec.format_version
            ),
        ));
    }
    if !(rec.t_sp > 0.0) || rec.r.is_empty() || rec.t.is_empty() {
        return Err(FormatError::new(
            origin,
            None,
            "t_sp must be positive and r, t non-empty",
        ));
    }
    let rst = RstPolynomials {
        r: rec.r,
        s: rec.s,
        t: rec.t,
        t_sp: rec.t_sp / 1e3,
    };
    rst.check_invariants(1e-9)
        .map_err(|m| FormatError::new(origin, None, format!("not a valid RST controller: {m}")))?;
    let diag = rec.diagnostics.unwrap_or_default();
    let margins =
        (diag.phase_margin.is_some() || diag.gain_margin.is_some() || diag.crossover.is_some())
            .then_some(Margins {
                gain_margin: diag.gain_margin,
                phase_margin: diag.phase_margin,
                crossover: diag.crossover,
            });
    Ok(RstExport {
        axis: rec.axis,
        rst,
        tuning: rec.tuning.map(|t| GpcTuning {
            n1: t.n1,
            n2: t.n2,
            nu: t.nu,
            lambda: t.lambda,
        }),
        model: rec.model.map(|m| ModelInfo {
            a: m.a,
            b: m.b,
            tau: m.tau / 1e3,
            fit_rms: m.fit_rms,
        }),
        condition: diag.condition,
        margins,
    })
}

pub fn write_rst(e: &RstExport, path: &Path) -> Result<(), IoError> {
    write_file(path, &rst_to_string(e))
}

pub fn read_rst(path: &Path) -> Result<RstExport, IoError> {
    let text = read_file(path)?;
    Ok(rst_from_str(&text, &path.display().to_string())?)
}
