//! Parameter identification from recorded traces: friction law, equivalent
//! inertia, static loads, feedforward constants and the adjustment delays.
//!
//! Every fit returns an [`IdentReport`] with the fitted values, residual
//! statistics and any diagnostics raised on the way.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::cascade::{euler_d1, euler_d2, FeedforwardFlags, Schedule};
use crate::engine::{simulate_axis, ControllerSpec, EngineError, RunOptions};
use crate::params::{AxisParameters, FrictionParams, StaticLoadLaw};
use crate::trace::{split_channel_name, Channel, Trace, TraceError};

/// Minimum number of distinct |v| values for a friction fit.
pub const MIN_FRICTION_SPEEDS: usize = 8;

/// Below this R² the feedforward terms are flagged as not constant.
pub const FFW_CONSTANCY_R2: f64 = 0.99;

/// Periods whose |dΩ/dt| reaches this fraction of the trace peak count as accelerating.
pub const ACCEL_FRACTION: f64 = 0.5;

/// Smallest motor acceleration treated as motion, rad/s².
pub const MIN_MOTOR_ACCEL: f64 = 1.0;

/// Velocity above which a rest trace is rejected (SI).
pub const REST_VELOCITY_TOL: f64 = 1e-6;

/// Positions closer than this (SI) belong to the same rest position.
pub const REST_POSITION_TOL: f64 = 1e-6;

/// Relative acceleration below which a sample counts as constant velocity.
pub const STEADY_ACCEL_FRACTION: f64 = 1e-3;

/// Time skipped at the start of each constant-velocity stretch, s.
pub const STEADY_SETTLE: f64 = 0.3;

/// Upper end of the delay search as a multiple of t_sp.
pub const MAX_DELAY_PERIODS: usize = 4;

#[derive(Debug, Error)]
pub enum IdentError {
    #[error("insufficient velocity span: {got} distinct |v| values, at least {need} needed")]
    InsufficientSpan { got: usize, need: usize },
    #[error("friction fit diverged; best residual RMS {best_rms} A")]
    Diverged { best_rms: f64 },
    #[error("no accelerating interval found")]
    NoAcceleration,
    #[error("motion detected at sample {sample} (velocity {velocity})")]
    Motion { sample: usize, velocity: f64 },
    #[error("degenerate regressor: {0}")]
    DegenerateRegressor(String),
    #[error("delay runs out of order: {0}")]
    RunOrder(String),
    #[error("misaligned traces: {0}")]
    Misaligned(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("simulation during delay search: {0}")]
    Simulation(Box<EngineError>),
}

/// Residual statistics of one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStats {
    pub rms: f64,
    /// Coefficient of determination, clamped to [0, 1].
    pub r_squared: f64,
    pub samples: usize,
}

impl FitStats {
    /// Stats from residuals; `total` is the sum of squares R² is measured against.
    fn new(rss: f64, total: f64, samples: usize) -> Self {
        let r2 = if total > 0.0 {
            1.0 - rss / total
        } else if rss <= f64::EPSILON {
            1.0
        } else {
            0.0
        };
        FitStats {
            rms: (rss / samples.max(1) as f64).sqrt(),
            r_squared: r2.clamp(0.0, 1.0),
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentReport {
    pub stage: String,
    pub values: Vec<(String, f64)>,
    pub stats: FitStats,
    pub diagnostics: Vec<String>,
}

impl IdentReport {
    fn new(stage: &str, values: &[(&str, f64)], stats: FitStats, diagnostics: Vec<String>) -> Self {
        IdentReport {
            stage: stage.into(),
            values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            stats,
            diagnostics,
        }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// The single channel of `trace` whose base name is `base`.
fn base_channel<'a>(trace: &'a Trace, base: &str) -> Result<&'a Channel, IdentError> {
    let mut it = trace
        .channels()
        .iter()
        .filter(|c| split_channel_name(&c.name).0 == base);
    let c = it.next().ok_or_else(|| TraceError::Missing(base.into()))?;
    if it.next().is_some() {
        return Err(IdentError::MissingInput(format!(
            "several `{base}` channels; pass a single-axis trace"
        )));
    }
    Ok(c)
}

fn base_si(trace: &Trace, base: &str) -> Result<Vec<f64>, IdentError> {
    let c = base_channel(trace, base)?;
    let f = c.unit.to_si();
    Ok(c.data.iter().map(|v| v * f).collect())
}

// ---------------------------------------------------------------- friction

/// Least-squares amplitudes of `a·e^{bv} + c·e^{dv}` for fixed rates, and the RSS.
fn amplitudes(pts: &[(f64, f64)], b: f64, d: f64) -> ([f64; 2], f64) {
    let (mut s11, mut s12, mut s22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(v, i) in pts {
        let (p, q) = ((b * v).exp(), (d * v).exp());
        s11 += p * p;
        s12 += p * q;
        s22 += q * q;
        y1 += p * i;
        y2 += q * i;
    }
    let det = s11 * s22 - s12 * s12;
    if !(det.abs() > 1e-12 * s11 * s22) {
        return ([f64::NAN; 2], f64::INFINITY);
    }
    let a = (s22 * y1 - s12 * y2) / det;
    let c = (s11 * y2 - s12 * y1) / det;
    let rss = pts
        .iter()
        .map(|&(v, i)| (i - a * (b * v).exp() - c * (d * v).exp()).powi(2))
        .sum();
    ([a, c], rss)
}

/// Least-squares amplitude of `a·e^{bv}` and the RSS.
fn amplitude_single(pts: &[(f64, f64)], b: f64) -> (f64, f64) {
    let (mut s, mut y) = (0.0, 0.0);
    for &(v, i) in pts {
        let p = (b * v).exp();
        s += p * p;
        y += p * i;
    }
    let a = y / s;
    let rss = pts
        .iter()
        .map(|&(v, i)| (i - a * (b * v).exp()).powi(2))
        .sum();
    (a, rss)
}

/// Derivative-free minimization of `f` over two variables from `x0`.
fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    x0: [f64; 2],
    step: [f64; 2],
    tol: f64,
) -> ([f64; 2], f64) {
    let mut pts = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut val = pts.map(&f);
    let lerp =
        |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..5000 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| val[i].total_cmp(&val[j]));
        pts = idx.map(|i| pts[i]);
        val = idx.map(|i| val[i]);
        let size = (0..2)
            .map(|k| {
                (pts[1][k] - pts[0][k])
                    .abs()
                    .max((pts[2][k] - pts[0][k]).abs())
                    / step[k]
            })
            .fold(0.0, f64::max);
        if size < tol {
            break;
        }
        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflect = lerp(centroid, pts[2], -1.0);
        let fr = f(reflect);
        if fr < val[0] {
            let expand = lerp(centroid, pts[2], -2.0);
            let fe = f(expand);
            (pts[2], val[2]) = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < val[1] {
            (pts[2], val[2]) = (reflect, fr);
        } else {
            let contract = if fr < val[2] {
                lerp(centroid, reflect, 0.5)
            } else {
                lerp(centroid, pts[2], 0.5)
            };
            let fc = f(contract);
            if fc < val[2].min(fr) {
                (pts[2], val[2]) = (contract, fc);
            } else {
                for k in 1..3 {
                    pts[k] = lerp(pts[0], pts[k], 0.5);
                    val[k] = f(pts[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| val[i].total_cmp(&val[j])).unwrap();
    (pts[best], val[best])
}

/// Fits the double-exponential friction law to constant-velocity points.
///
/// `points` are (velocity in the friction unit, current in A). Negative
/// velocities are folded onto the positive branch by odd symmetry; zero
/// velocities are dropped. `i0` is set to `a + c`.
pub fn fit_friction(points: &[(f64, f64)]) -> Result<(FrictionParams, IdentReport), IdentError> {
    let mut diagnostics = Vec::new();
    let mut folded: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    let mut dropped = 0;
    for &(v, i) in points {
        if v == 0.0 || !v.is_finite() || !i.is_finite() {
            dropped += 1;
            continue;
        }
        folded.push((v.abs(), i * v.signum()));
    }
    if dropped > 0 {
        diagnostics.push(format!(
            "dropped {dropped} points at zero or non-finite velocity"
        ));
    }
    let mut speeds: Vec<f64> = folded.iter().map(|p| p.0).collect();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    if speeds.len() < MIN_FRICTION_SPEEDS {
        return Err(IdentError::InsufficientSpan {
            got: speeds.len(),
            need: MIN_FRICTION_SPEEDS,
        });
    }
    let v_max = *speeds.last().unwrap();
    let n = folded.len();
    let mean = folded.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let tss: f64 = folded.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let scale = 1.0 / v_max;
    let rates: Vec<f64> = (0..=120).map(|k| (-8.0 + 0.1 * k as f64) * scale).collect();

    // Single exponential: coarse grid, then golden section around the best.
    let (mut b_lo, mut b_hi) = (rates[0], rates[rates.len() - 1]);
    let best_k = (0..rates.len())
        .min_by(|&i, &j| {
            amplitude_single(&folded, rates[i])
                .1
                .total_cmp(&amplitude_single(&folded, rates[j]).1)
        })
        .unwrap();
    if best_k > 0 {
        b_lo = rates[best_k - 1];
    }
    if best_k + 1 < rates.len() {
        b_hi = rates[best_k + 1];
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let m1 = b_hi - g * (b_hi - b_lo);
        let m2 = b_lo + g * (b_hi - b_lo);
        if amplitude_single(&folded, m1).1 <= amplitude_single(&folded, m2).1 {
            b_hi = m2;
        } else {
            b_lo = m1;
        }
    }
    let b_single = 0.5 * (b_lo + b_hi);
    let (a_single, rss_single) = amplitude_single(&folded, b_single);

    // Double exponential: grid over d < b, then local refinement.
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for (ib, &b) in rates.iter().enumerate() {
        for &d in &rates[..ib] {
            let (_, rss) = amplitudes(&folded, b, d);
            if rss < best.0 {
                best = (rss, [b, d]);
            }
        }
    }
    let objective = |x: [f64; 2]| {
        if x[1] >= x[0] {
            return f64::INFINITY;
        }
        amplitudes(&folded, x[0], x[1]).1
    };
    let (mut x, mut rss_double) = (best.1, best.0);
    if best.0.is_finite() {
        for _ in 0..4 {
            let (nx, nr) = nelder_mead(&objective, x, [0.05 * scale, 0.05 * scale], 1e-10);
            let done = nr >= rss_double * (1.0 - 1e-12);
            if nr <= rss_double {
                (x, rss_double) = (nx, nr);
            }
            if done {
                break;
            }
        }
    }
    let ([a, c], _) = amplitudes(&folded, x[0], x[1]);

    let negligible = 1e-12 * folded.iter().map(|p| p.1 * p.1).sum::<f64>();
    let use_single = !rss_double.is_finite()
        || !a.is_finite()
        || !c.is_finite()
        || rss_double >= rss_single * (1.0 - 1e-6) - negligible;
    let params = if use_single {
        if !rss_single.is_finite() || !a_single.is_finite() {
            return Err(IdentError::Diverged {
                best_rms: (rss_single.min(rss_double) / n as f64).sqrt(),
            });
        }
        diagnostics.push(
            "the second exponential is not identifiable from these points; fell back to a single exponential (c = 0, d = 0)"
                .into(),
        );
        FrictionParams {
            a: a_single,
            b: b_single,
            c: 0.0,
            d: 0.0,
            i0: a_single,
            v_fit_max: v_max,
        }
    } else {
        FrictionParams {
            a,
            b: x[0],
            c,
            d: x[1],
            i0: a + c,
            v_fit_max: v_max,
        }
    };
    let rss = if use_single { rss_single } else { rss_double };
    let stats = FitStats::new(rss, tss, n);
    Ok((
        params,
        IdentReport::new(
            "friction",
            &[
                ("a", params.a),
                ("b", params.b),
                ("c", params.c),
                ("d", params.d),
                ("i0", params.i0),
                ("v_fit_max", params.v_fit_max),
            ],
            stats,
            diagnostics,
        ),
    ))
}

/// Contiguous index ranges where `keep` holds.
fn runs(n: usize, keep: impl Fn(usize) -> bool) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for k in 0..=n {
        match (start, k < n && keep(k)) {
            (None, true) => start = Some(k),
            (Some(s), false) => {
                out.push(s..k);
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Extracts (velocity, friction current) points from the constant-velocity
/// stretches of a trace with `sv` and `smc` channels.
///
/// Samples still accelerating are dropped, as is the first
/// [`STEADY_SETTLE`] of each stretch. The static load is subtracted.
pub fn friction_points(
    trace: &Trace,
    p: &AxisParameters,
) -> Result<(Vec<(f64, f64)>, Vec<String>), IdentError> {
    let v = base_si(trace, "sv")?;
    let i = base_si(trace, "smc")?;
    let pos = base_si(trace, "sp").ok();
    let dt = trace.dt();
    let acc = euler_d1(&v, dt);
    let peak = acc.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let v_peak = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let tol = (STEADY_ACCEL_FRACTION * peak).max(1e-9);
    let moving = 1e-6 * v_peak.max(1e-12);
    let settle = (STEADY_SETTLE / dt).ceil() as usize;
    let min_len = settle + (0.1 / dt).ceil() as usize;

    let mut diagnostics = Vec::new();
    let stretches = runs(v.len(), |k| acc[k].abs() <= tol && v[k].abs() > moving);
    let mut points = Vec::new();
    let mut short = 0;
    let mut dropped_samples = 0;
    for r in stretches {
        if r.len() < min_len.max(3) {
            short += 1;
            dropped_samples += r.len();
            continue;
        }
        let kept = r.start + settle..r.end;
        dropped_samples += settle;
        let n = kept.len() as f64;
        let v_mean = kept.clone().map(|k| v[k]).sum::<f64>() / n;
        let i_mean = kept
            .clone()
            .map(|k| {
                let load = pos
                    .as_ref()
                    .map_or(p.static_load, |x| p.static_torque_at(x[k]));
                i[k] - load / p.k_t
            })
            .sum::<f64>()
            / n;
        points.push((p.friction_velocity(v_mean), i_mean));
    }
    if short > 0 {
        diagnostics.push(format!(
            "{short} constant-velocity stretches too short to settle were ignored"
        ));
    }
    let accelerating = acc.iter().filter(|a| a.abs() > tol).count();
    diagnostics.push(format!(
        "dropped {accelerating} accelerating samples and {dropped_samples} settling samples"
    ));
    Ok((points, diagnostics))
}

// ----------------------------------------------------------------- inertia

/// Equivalent inertia from the accelerating stretches of one or more traces
/// with `sv` and `smc` channels.
///
/// `J = (K_t·i − C_r) / (dΩ/dt)` is evaluated once per position period: dΩ
/// is the backward difference over the period and the net torque its
/// trapezoidal mean over the same period, so current ripple at the position
/// cycle cancels when the trace is recorded faster than t_sp. Estimates are
/// averaged per accelerating interval, then across intervals. `p` supplies
/// K_t, t_sp, the transmission, the friction law and the static load.
pub fn estimate_inertia(
    traces: &[&Trace],
    p: &AxisParameters,
) -> Result<(f64, IdentReport), IdentError> {
    let mut interval_means = Vec::new();
    let mut per_window: Vec<(f64, f64)> = Vec::new();
    let mut diagnostics = Vec::new();
    for tr in traces {
        let v = base_si(tr, "sv")?;
        let i = base_si(tr, "smc")?;
        let pos = base_si(tr, "sp").ok();
        let dt = tr.dt();
        let ratio = p.t_sp / dt;
        let w = if ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-6 {
            ratio.round() as usize
        } else {
            diagnostics.push(format!(
                "trace sampled at {dt} s is not a divisor of t_sp; using single samples"
            ));
            1
        };
        if w == 1 && v.len() > 1 {
            diagnostics.push(
                "trace sampled at t_sp: current ripple within the position cycle is not averaged"
                    .into(),
            );
        }
        let omega: Vec<f64> = v.iter().map(|v| v / p.transmission).collect();
        let net: Vec<f64> = (0..v.len())
            .map(|k| {
                let load = pos
                    .as_ref()
                    .map_or(p.static_load, |x| p.static_torque_at(x[k]));
                let fric = p.k_t * p.friction.kinetic_current(p.friction_velocity(v[k]));
                p.k_t * i[k] - fric - load
            })
            .collect();
        let span = w as f64 * dt;
        let windows: Vec<(f64, f64)> = (1..=(v.len().saturating_sub(1)) / w)
            .map(|n| {
                let e = n * w;
                let acc = (omega[e] - omega[e - w]) / span;
                let torque = (e - w + 1..=e)
                    .map(|j| 0.5 * (net[j] + net[j - 1]))
                    .sum::<f64>()
                    / w as f64;
                (acc, torque)
            })
            .collect();
        let peak = windows.iter().fold(0.0f64, |m, (a, _)| m.max(a.abs()));
        if peak < MIN_MOTOR_ACCEL {
            continue;
        }
        let thr = ACCEL_FRACTION * peak;
        for r in runs(windows.len(), |k| windows[k].0.abs() >= thr) {
            if r.len() < 3 {
                continue;
            }
            let js: Vec<f64> = windows[r].iter().map(|(a, t)| t / a).collect();
            interval_means.push(js.iter().sum::<f64>() / js.len() as f64);
        }
        per_window.extend(windows.iter().filter(|(a, _)| a.abs() >= thr));
    }
    if interval_means.is_empty() {
        return Err(IdentError::NoAcceleration);
    }
    let j = interval_means.iter().sum::<f64>() / interval_means.len() as f64;
    let rss: f64 = per_window.iter().map(|(a, t)| (t - j * a).powi(2)).sum();
    let total: f64 = per_window.iter().map(|(_, t)| t * t).sum();
    let spread = interval_means
        .iter()
        .fold(0.0f64, |m, x| m.max((x - j).abs()))
        / j.abs();
    diagnostics.push(format!(
        "largest interval deviation from the mean: {:.3}%",
        100.0 * spread
    ));
    Ok((
        j,
        IdentReport::new(
            "inertia",
            &[("j_eq", j), ("intervals", interval_means.len() as f64)],
            FitStats::new(rss, total, per_window.len()),
            diagnostics,
        ),
    ))
}

// ------------------------------------------------------------- static load

/// Resistant torque measured at rest.
#[derive(Debug, Clone, PartialEq)]
pub enum StaticLoad {
    Constant(f64),
    /// Torque per rest position, linearly interpolated.
    Table(StaticLoadLaw),
}

/// Static resistant torque from samples at rest (`sp`, `smc`, optional `sv`).
pub fn estimate_static_load(
    trace: &Trace,
    k_t: f64,
) -> Result<(StaticLoad, IdentReport), IdentError> {
    let pos = base_si(trace, "sp")?;
    let i = base_si(trace, "smc")?;
    if let Ok(v) = base_si(trace, "sv") {
        if let Some(k) = v.iter().position(|v| v.abs() > REST_VELOCITY_TOL) {
            return Err(IdentError::Motion {
                sample: k,
                velocity: v[k],
            });
        }
    }
    if pos.is_empty() {
        return Err(IdentError::MissingInput("empty rest trace".into()));
    }
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for k in 1..=pos.len() {
        if k == pos.len() || (pos[k] - pos[start]).abs() > REST_POSITION_TOL {
            groups.push(start..k);
            start = k;
        }
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 3) {
        return Err(IdentError::Motion {
            sample: g.start,
            velocity: f64::NAN,
        });
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let (mut rss, mut total) = (0.0, 0.0);
    for g in &groups {
        let n = g.len() as f64;
        let x = g.clone().map(|k| pos[k]).sum::<f64>() / n;
        let i_mean = g.clone().map(|k| i[k]).sum::<f64>() / n;
        rss += g.clone().map(|k| (i[k] - i_mean).powi(2)).sum::<f64>();
        total += g.clone().map(|k| i[k] * i[k]).sum::<f64>();
        match points
            .iter_mut()
            .find(|p| (p.0 - x).abs() <= REST_POSITION_TOL)
        {
            Some(p) => p.1 = 0.5 * (p.1 + k_t * i_mean),
            None => points.push((x, k_t * i_mean)),
        }
    }
    let stats = FitStats::new(rss, total, pos.len());
    if points.len() == 1 {
        let t = points[0].1;
        return Ok((
            StaticLoad::Constant(t),
            IdentReport::new("static", &[("static_load", t)], stats, vec![]),
        ));
    }
    let law = StaticLoadLaw::new(points.clone()).expect("distinct finite rest positions");
    let values: Vec<(String, f64)> = law
        .points()
        .iter()
        .enumerate()
        .flat_map(|(k, (x, t))| [(format!("position_{k}"), *x), (format!("torque_{k}"), *t)])
        .collect();
    let mut report = IdentReport::new(
        "static",
        &[],
        stats,
        vec![format!("{} rest positions", points.len())],
    );
    report.values = values;
    Ok((StaticLoad::Table(law), report))
}

// ------------------------------------------------------------- feedforward

/// Slope and R² of `y = k·x` without intercept.
fn slope_through_origin(x: &[f64], y: &[f64], what: &str) -> Result<(f64, FitStats), IdentError> {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(IdentError::DegenerateRegressor(format!(
            "{what}: setpoint derivative is identically zero"
        )));
    }
    let k = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - k * a).powi(2)).sum();
    let total: f64 = y.iter().map(|v| v * v).sum();
    Ok((k, FitStats::new(rss, total, x.len())))
}

fn check_aligned(a: &Trace, b: &Trace, what: &str) -> Result<(), IdentError> {
    if a.len() != b.len() || (a.dt() - b.dt()).abs() > 1e-12 || (a.t0() - b.t0()).abs() > 1e-9 {
        return Err(IdentError::Misaligned(format!(
            "{what}: {} samples every {} s from {} vs {} every {} s from {}",
            a.len(),
            a.dt(),
            a.t0(),
            b.len(),
            b.dt(),
            b.t0()
        )));
    }
    Ok(())
}

/// Feedforward constants by regression without intercept: VFFW from `vffws`
/// against the first Euler derivative of `psec`, TFFW from `tffws` (N·m)
/// against the second derivative mapped to the motor shaft.
///
/// The traces must be sampled at t_sp and aligned; one trace holding all
/// three channels may be passed three times.
pub fn fit_feedforward(
    psec: &Trace,
    vffws: &Trace,
    tffws: &Trace,
    transmission: f64,
) -> Result<(f64, f64, IdentReport), IdentError> {
    check_aligned(psec, vffws, "vffws")?;
    check_aligned(psec, tffws, "tffws")?;
    let x = base_si(psec, "psec")?;
    let tsp = psec.dt();
    let d1 = euler_d1(&x, tsp);
    let d2: Vec<f64> = euler_d2(&x, tsp).iter().map(|a| a / transmission).collect();
    let (vffw, sv) = slope_through_origin(&d1, &base_si(vffws, "vffws")?, "velocity feedforward")?;
    let (tffw, st) = slope_through_origin(&d2, &base_si(tffws, "tffws")?, "torque feedforward")?;
    let mut diagnostics = Vec::new();
    for (name, s) in [("VFFW", sv), ("TFFW", st)] {
        if s.r_squared < FFW_CONSTANCY_R2 {
            diagnostics.push(format!(
                "{name} does not look constant: R² = {:.4} < {FFW_CONSTANCY_R2}",
                s.r_squared
            ));
        }
    }
    let stats = FitStats {
        rms: sv.rms.max(st.rms),
        r_squared: sv.r_squared.min(st.r_squared),
        samples: sv.samples,
    };
    Ok((
        vffw,
        tffw,
        IdentReport::new(
            "feedforward",
            &[
                ("vffw", vffw),
                ("tffw", tffw),
                ("r2_vffw", sv.r_squared),
                ("r2_tffw", st.r_squared),
            ],
            stats,
            diagnostics,
        ),
    ))
}

// ------------------------------------------------------------------ delays

/// Three recordings of the same path: feedforwards off, velocity only, both.
/// Each needs `psec`, `sp`, `vffws` and `tffws`, sampled at t_sp.
#[derive(Debug, Clone)]
pub struct DelayRuns {
    pub off: Trace,
    pub velocity: Trace,
    pub both: Trace,
}

/// Adjustment delays, s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delays {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn active(trace: &Trace, base: &str) -> Result<bool, IdentError> {
    Ok(base_channel(trace, base)?.data.iter().any(|v| *v != 0.0))
}

fn check_run_order(runs: &DelayRuns) -> Result<(), IdentError> {
    let expect = [
        ("first", &runs.off, false, false),
        ("second", &runs.velocity, true, false),
        ("third", &runs.both, true, true),
    ];
    for (which, tr, v, t) in expect {
        let (av, at) = (active(tr, "vffws")?, active(tr, "tffws")?);
        if (av, at) != (v, t) {
            let on_off = |b: bool| if b { "on" } else { "off" };
            return Err(IdentError::RunOrder(format!(
                "the {which} run should have velocity feedforward {} and torque feedforward {}, \
                 but its traces show {} and {}",
                on_off(v),
                on_off(t),
                on_off(av),
                on_off(at)
            )));
        }
    }
    Ok(())
}

/// One stage: the delay (in plant steps) minimizing Σ(SP_sim − SP_measured)².
struct DelayStage<'a> {
    base: AxisParameters,
    flags: FeedforwardFlags,
    psec: Vec<f64>,
    measured: Vec<f64>,
    opts: RunOptions,
    set: &'a (dyn Fn(&mut AxisParameters, f64) + Sync),
}

impl DelayStage<'_> {
    fn cost(&self, steps: usize) -> Result<f64, IdentError> {
        let mut p = self.base.clone();
        (self.set)(&mut p, steps as f64 * self.opts.plant_step);
        let periods = self.psec.len() - 1;
        let r = simulate_axis(
            &p,
            &ControllerSpec::Cascade(self.flags),
            &self.psec,
            periods,
            &self.opts,
        )
        .map_err(|e| IdentError::Simulation(Box::new(e)))?;
        let sp = &r.trace.require("sp")?.data;
        Ok(sp
            .iter()
            .zip(&self.measured)
            .map(|(a, b)| (a - b).powi(2))
            .sum())
    }

    /// Coarse grid, then golden section on integers around the best cell.
    fn search(
        &self,
        max_steps: usize,
        coarse: usize,
    ) -> Result<(usize, f64, Vec<String>), IdentError> {
        let grid: Vec<usize> = (0..=max_steps).step_by(coarse).collect();
        let costs: Vec<f64> = grid
            .par_iter()
            .map(|&s| self.cost(s))
            .collect::<Result<_, _>>()?;
        let kmin = (0..grid.len())
            .min_by(|&i, &j| costs[i].total_cmp(&costs[j]))
            .unwrap();
        let cmin = costs[kmin];
        let mut diagnostics = Vec::new();
        let flat: Vec<usize> = grid
            .iter()
            .zip(&costs)
            .filter(|(_, c)| **c <= cmin * (1.0 + 1e-9) + 1e-30)
            .map(|(s, _)| *s)
            .collect();
        if flat.len() > 1 {
            diagnostics.push(format!(
                "objective is flat; candidate delays (plant steps): {flat:?}"
            ));
        }

        let mut cache = std::collections::BTreeMap::new();
        for (s, c) in grid.iter().zip(&costs) {
            cache.insert(*s, *c);
        }
        let mut eval = |s: usize| -> Result<f64, IdentError> {
            if let Some(c) = cache.get(&s) {
                return Ok(*c);
            }
            let c = self.cost(s)?;
            cache.insert(s, c);
            Ok(c)
        };
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (
            grid[kmin].saturating_sub(coarse),
            (grid[kmin] + coarse).min(max_steps),
        );
        while hi - lo > 3 {
            let m1 = hi - ((hi - lo) as f64 * g).round() as usize;
            let m2 = lo + ((hi - lo) as f64 * g).round() as usize;
            let (m1, m2) = (m1.min(m2), m1.max(m2).max(m1.min(m2) + 1));
            if eval(m1)? <= eval(m2)? {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let mut best = (lo, eval(lo)?);
        for s in lo + 1..=hi {
            let c = eval(s)?;
            if c < best.1 {
                best = (s, c);
            }
        }
        // Walk downhill in case the bracket missed the discrete minimum.
        loop {
            let mut moved = false;
            for s in [
                best.0.checked_sub(1),
                Some(best.0 + 1).filter(|&s| s <= max_steps),
            ]
            .into_iter()
            .flatten()
            {
                let c = eval(s)?;
                if c < best.1 {
                    best = (s, c);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        Ok((best.0, best.1, diagnostics))
    }
}

/// Staged least-squares calibration of α, β and γ.
///
/// α comes from the run without feedforward, β from the velocity-feedforward
/// run with α fixed, γ from the run with both feedforwards with α and β
/// fixed. Each stage simulates the axis over a grid of delays at plant-step
/// resolution and refines by golden section. `p` must already carry the
/// identified plant and feedforward constants.
pub fn calibrate_delays(
    runs: &DelayRuns,
    p: &AxisParameters,
    plant_step: f64,
) -> Result<(Delays, IdentReport), IdentError> {
    check_run_order(runs)?;
    check_aligned(&runs.off, &runs.velocity, "velocity run")?;
    check_aligned(&runs.off, &runs.both, "both-feedforward run")?;
    if (runs.off.dt() - p.t_sp).abs() > 1e-12 {
        return Err(IdentError::Misaligned(format!(
            "delay runs are sampled every {} s, the axis t_sp is {} s",
            runs.off.dt(),
            p.t_sp
        )));
    }
    let sched =
        Schedule::new(p, plant_step).map_err(|e| IdentError::MissingInput(e.to_string()))?;
    let max_steps = MAX_DELAY_PERIODS * sched.position;
    let coarse = (sched.position / 6).max(1);
    let opts = RunOptions {
        plant_step,
        full_rate: false,
        setpoint_offset: 0,
    };

    let set_alpha = |q: &mut AxisParameters, d: f64| q.alpha = d;
    let set_beta = |q: &mut AxisParameters, d: f64| q.beta = d;
    let set_gamma = |q: &mut AxisParameters, d: f64| q.gamma = d;
    let stages: [(
        &str,
        &Trace,
        FeedforwardFlags,
        &(dyn Fn(&mut AxisParameters, f64) + Sync),
    ); 3] = [
        ("alpha", &runs.off, FeedforwardFlags::OFF, &set_alpha),
        (
            "beta",
            &runs.velocity,
            FeedforwardFlags::VELOCITY,
            &set_beta,
        ),
        ("gamma", &runs.both, FeedforwardFlags::BOTH, &set_gamma),
    ];

    let mut current = p.clone();
    let mut diagnostics = Vec::new();
    let mut values = Vec::new();
    let (mut rss, mut total, mut samples) = (0.0, 0.0, 0);
    for (name, tr, flags, set) in stages {
        let measured = base_si(tr, "sp")?;
        let stage = DelayStage {
            base: current.clone(),
            flags,
            psec: base_si(tr, "psec")?,
            measured: measured.clone(),
            opts,
            set,
        };
        let (steps, cost, diag) = stage.search(max_steps, coarse)?;
        let delay = steps as f64 * plant_step;
        set(&mut current, delay);
        diagnostics.extend(diag.into_iter().map(|d| format!("{name}: {d}")));
        values.push((name.to_string(), delay));
        values.push((format!("{name}_rss"), cost));
        let mean = measured.iter().sum::<f64>() / measured.len() as f64;
        rss += cost;
        total += measured.iter().map(|m| (m - mean).powi(2)).sum::<f64>();
        samples += measured.len();
    }
    let delays = Delays {
        alpha: current.alpha,
        beta: current.beta,
        gamma: current.gamma,
    };
    let report = IdentReport {
        stage: "delays".into(),
        values,
        stats: FitStats::new(rss, total, samples),
        diagnostics,
    };
    Ok((delays, report))
}

// -------------------------------------------------------------- utilities

/// Copy of `trace` with zero-mean Gaussian noise of standard deviation
/// `sigma` (in the channel's unit) added to `channel`.
pub fn add_noise(trace: &Trace, channel: &str, sigma: f64, seed: u64) -> Result<Trace, IdentError> {
    let c = trace.require(channel)?;
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| IdentError::MissingInput(format!("noise level: {e}")))?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Trace::new(trace.dt(), trace.t0())?;
    for ch in trace.channels() {
        let data = if ch.name == c.name {
            ch.data
                .iter()
                .map(|v| v + normal.sample(&mut rng))
                .collect()
        } else {
            ch.data.clone()
        };
        out.push(&ch.name, ch.unit, data)?;
    }
    Ok(out)
}

/// Every `n`-th sample of a trace recorded at plant rate, so that the result
/// is sampled at `period`.
pub fn at_period(trace: &Trace, period: f64) -> Result<Trace, IdentError> {
    let ratio = period / trace.dt();
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-6 {
        return Err(IdentError::Misaligned(format!(
            "cannot resample {} s data to {} s",
            trace.dt(),
            period
        )));
    }
    let n = n as usize;
    let mut out = Trace::new(period, trace.t0())?;
    for c in trace.channels() {
        out.push(&c.name, c.unit, c.data.iter().step_by(n).copied().collect())?;
    }
    Ok(out)
}

// ------------------------------------------------------------------- chain

/// Which stages of [`identify_axis`] to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Friction,
    Inertia,
    Static,
    Feedforward,
    Delays,
    All,
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "friction" => Stage::Friction,
            "inertia" => Stage::Inertia,
            "static" => Stage::Static,
            "ffw" => Stage::Feedforward,
            "delays" => Stage::Delays,
            "all" => Stage::All,
            _ => {
                return Err(format!(
                    "unknown stage `{s}` (friction, inertia, static, ffw, delays, all)"
                ))
            }
        })
    }
}

fn moves(trace: &Trace) -> Result<bool, IdentError> {
    Ok(base_si(trace, "sv")?
        .iter()
        .any(|v| v.abs() > REST_VELOCITY_TOL))
}

/// Sorts recordings into delay-run roles by which feedforward channels are
/// active. Runs must share the same setpoint stream.
fn delay_runs(traces: &[Trace], t_sp: f64) -> Result<DelayRuns, IdentError> {
    let mut off = Vec::new();
    let mut vel = Vec::new();
    let mut both = Vec::new();
    for tr in traces {
        if (tr.dt() - t_sp).abs() > 1e-12 || base_channel(tr, "psec").is_err() || !moves(tr)? {
            continue;
        }
        match (active(tr, "vffws")?, active(tr, "tffws")?) {
            (false, false) => off.push(tr),
            (true, false) => vel.push(tr),
            (true, true) => both.push(tr),
            _ => {}
        }
    }
    let same = |a: &Trace, b: &Trace| -> bool {
        match (base_channel(a, "psec"), base_channel(b, "psec")) {
            (Ok(x), Ok(y)) => x.data == y.data,
            _ => false,
        }
    };
    for o in &off {
        if let (Some(v), Some(b)) = (
            vel.iter().find(|v| same(o, v)),
            both.iter().find(|b| same(o, b)),
        ) {
            return Ok(DelayRuns {
                off: (*o).clone(),
                velocity: (*v).clone(),
                both: (*b).clone(),
            });
        }
    }
    Err(IdentError::MissingInput(
        "delay calibration needs three runs of one path: no feedforward, velocity feedforward, both".into(),
    ))
}

/// Runs the identification chain for one axis in the order friction, static
/// load, inertia, feedforward, delays, each stage using the values found by
/// the previous ones. `p` supplies the quantities not identified here
/// (loop gains, cycle times, motor constants) and the starting values.
///
/// Traces may be recorded at plant rate or at t_sp; roles are inferred from
/// their content.
pub fn identify_axis(
    traces: &[Trace],
    p: &AxisParameters,
    stage: Stage,
    plant_step: f64,
) -> Result<(AxisParameters, Vec<IdentReport>), IdentError> {
    let mut q = p.clone();
    let mut reports = Vec::new();
    let wants = |s: Stage| stage == s || stage == Stage::All;
    let at_tsp: Vec<Trace> = traces
        .iter()
        .map(|t| {
            if (t.dt() - p.t_sp).abs() > 1e-12 {
                at_period(t, p.t_sp)
            } else {
                Ok(t.clone())
            }
        })
        .collect::<Result<_, _>>()?;

    if wants(Stage::Friction) {
        let mut points = Vec::new();
        let mut diag = Vec::new();
        for t in &at_tsp {
            let (pts, d) = friction_points(t, p)?;
            points.extend(pts);
            diag.extend(d);
        }
        let (f, mut r) = fit_friction(&points)?;
        r.diagnostics.splice(0..0, diag);
        q.friction = f;
        reports.push(r);
    }
    if wants(Stage::Static) {
        let mut rest = Vec::new();
        for t in traces {
            if !moves(t)? {
                rest.push(t);
            }
        }
        match rest.first() {
            Some(t) => {
                let (load, r) = estimate_static_load(t, q.k_t)?;
                match load {
                    StaticLoad::Constant(c) => q.static_load = c,
                    StaticLoad::Table(law) => {
                        q.static_load = 0.0;
                        q.static_load_law = Some(law);
                    }
                }
                reports.push(r);
            }
            None if stage == Stage::Static => {
                return Err(IdentError::MissingInput("no trace at rest".into()));
            }
            None => {}
        }
    }
    if wants(Stage::Inertia) {
        // Traces recorded faster than t_sp average the current ripple; prefer them.
        let fast: Vec<&Trace> = traces
            .iter()
            .filter(|t| t.dt() < p.t_sp * (1.0 - 1e-9))
            .collect();
        let refs: Vec<&Trace> = if fast.is_empty() {
            traces.iter().collect()
        } else {
            fast
        };
        let (j, r) = estimate_inertia(&refs, &q)?;
        q.j_eq = j;
        reports.push(r);
    }
    if wants(Stage::Feedforward) {
        let mut found = None;
        for t in &at_tsp {
            if base_channel(t, "psec").is_ok() && active(t, "vffws")? && active(t, "tffws")? {
                found = Some(t);
                break;
            }
        }
        let t = found.ok_or_else(|| {
            IdentError::MissingInput("no run with both feedforwards active".into())
        })?;
        let (v, tf, r) = fit_feedforward(t, t, t, q.transmission)?;
        q.vffw = v;
        q.tffw = tf;
        reports.push(r);
    }
    if wants(Stage::Delays) {
        let runs = delay_runs(&at_tsp, p.t_sp)?;
        let (d, r) = calibrate_delays(&runs, &q, plant_step)?;
        q.alpha = d.alpha;
        q.beta = d.beta;
        q.gamma = d.gamma;
        reports.push(r);
    }
    Ok((q, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::bundled_profile;
    use crate::units::Unit;

    fn x_axis() -> AxisParameters {
        bundled_profile().axis("X").unwrap().clone()
    }

    fn law_points(f: &FrictionParams, n: usize) -> Vec<(f64, f64)> {
        (1..=n)
            .map(|k| {
                let v = 20.0 * k as f64 / n as f64;
                (v, f.kinetic_current(v))
            })
            .collect()
    }

    #[test]
    fn friction_round_trip_on_table_law() {
        let truth = x_axis().friction;
        let (f, r) = fit_friction(&law_points(&truth, 25)).unwrap();
        for (got, want) in [
            (f.a, truth.a),
            (f.b, truth.b),
            (f.c, truth.c),
            (f.d, truth.d),
        ] {
            assert!(((got - want) / want).abs() < 5e-3, "{got} vs {want}");
        }
        assert!(r.stats.r_squared > 0.999);
        assert!((f.i0 - (f.a + f.c)).abs() < 1e-15);
    }

    #[test]
    fn friction_fit_folds_negative_half() {
        let truth = x_axis().friction;
        let pts = law_points(&truth, 16);
        let flipped: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(k, &(v, i))| if k % 2 == 0 { (-v, -i) } else { (v, i) })
            .collect();
        let (a, _) = fit_friction(&pts).unwrap();
        let (b, _) = fit_friction(&flipped).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn coulomb_data_falls_back_to_single_exponential() {
        let pts: Vec<_> = (1..=10).map(|k| (k as f64, 1.2)).collect();
        let (f, r) = fit_friction(&pts).unwrap();
        assert!((f.a - 1.2).abs() < 1e-9);
        assert!(f.b.abs() < 1e-6);
        assert_eq!((f.c, f.d), (0.0, 0.0));
        assert!(r
            .diagnostics
            .iter()
            .any(|d| d.contains("single exponential")));
    }

    #[test]
    fn friction_needs_eight_speeds() {
        let pts: Vec<_> = (1..=7)
            .flat_map(|k| [(k as f64, 1.0), (-(k as f64), -1.0)])
            .collect();
        assert!(matches!(
            fit_friction(&pts),
            Err(IdentError::InsufficientSpan { got: 7, need: 8 })
        ));
    }

    fn motion_trace(v: Vec<f64>, i: Vec<f64>, dt: f64) -> Trace {
        Trace::new(dt, 0.0)
            .unwrap()
            .with("sv", Unit::MeterPerSecond, v)
            .unwrap()
            .with("smc", Unit::Ampere, i)
            .unwrap()
    }

    #[test]
    fn inertia_by_direct_substitution() {
        // K_t = 1, i = 2 A, C_r = 0.5 N·m, dΩ/dt = 50 rad/s² gives 0.03 kg·m².
        let mut p = x_axis();
        p.t_sp = 0.001;
        p.k_t = 1.0;
        p.transmission = 1.0;
        p.friction = FrictionParams {
            a: 0.5,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            i0: 0.5,
            v_fit_max: 1e9,
        };
        let dt = 0.001;
        let v: Vec<f64> = (0..200).map(|k| 1.0 + 50.0 * dt * k as f64).collect();
        let (j, r) = estimate_inertia(&[&motion_trace(v, vec![2.0; 200], dt)], &p).unwrap();
        assert!((j - 0.03).abs() < 1e-12, "{j}");
        assert!(r.stats.r_squared > 0.999_999);
    }

    #[test]
    fn constant_velocity_has_no_accelerating_interval() {
        let t = motion_trace(vec![0.1; 100], vec![1.5; 100], 0.006);
        assert!(matches!(
            estimate_inertia(&[&t], &x_axis()),
            Err(IdentError::NoAcceleration)
        ));
    }

    fn rest_trace(pos: Vec<f64>, i: Vec<f64>) -> Trace {
        let n = pos.len();
        Trace::new(0.006, 0.0)
            .unwrap()
            .with("sp", Unit::Meter, pos)
            .unwrap()
            .with("sv", Unit::MeterPerSecond, vec![0.0; n])
            .unwrap()
            .with("smc", Unit::Ampere, i)
            .unwrap()
    }

    #[test]
    fn static_load_constant_and_table() {
        let (l, _) = estimate_static_load(&rest_trace(vec![0.1; 10], vec![0.0; 10]), 1.3).unwrap();
        assert_eq!(l, StaticLoad::Constant(0.0));
        let (l, _) = estimate_static_load(&rest_trace(vec![0.1; 10], vec![2.0; 10]), 1.3).unwrap();
        match l {
            StaticLoad::Constant(t) => assert!((t - 2.6).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let pos = [vec![0.0; 5], vec![1.0; 5]].concat();
        let cur = [vec![1.0; 5], vec![3.0; 5]].concat();
        let (l, r) = estimate_static_load(&rest_trace(pos, cur), 2.0).unwrap();
        let StaticLoad::Table(law) = l else { panic!() };
        assert_eq!(law.points(), &[(0.0, 2.0), (1.0, 6.0)]);
        assert!((law.torque_at(0.25) - 3.0).abs() < 1e-12);
        assert_eq!(r.stats.samples, 10);
    }

    #[test]
    fn static_load_rejects_motion() {
        let mut t = rest_trace(vec![0.0; 6], vec![0.0; 6]);
        t = Trace::new(0.006, 0.0)
            .unwrap()
            .with("sp", Unit::Meter, t.require("sp").unwrap().data.clone())
            .unwrap()
            .with(
                "sv",
                Unit::MeterPerSecond,
                vec![0.0, 0.0, 0.01, 0.0, 0.0, 0.0],
            )
            .unwrap()
            .with("smc", Unit::Ampere, vec![0.0; 6])
            .unwrap();
        assert!(matches!(
            estimate_static_load(&t, 1.0),
            Err(IdentError::Motion { sample: 2, .. })
        ));
    }

    fn ffw_trace(vffw: f64, tffw: f64, transmission: f64) -> Trace {
        let tsp = 0.006;
        let x: Vec<f64> = (0..300)
            .map(|k| 0.05 * (1.0 - (k as f64 * 0.02).cos()))
            .collect();
        let v: Vec<f64> = euler_d1(&x, tsp).iter().map(|d| vffw * d).collect();
        let a: Vec<f64> = euler_d2(&x, tsp)
            .iter()
            .map(|d| tffw * d / transmission)
            .collect();
        Trace::new(tsp, 0.0)
            .unwrap()
            .with("psec", Unit::Meter, x)
            .unwrap()
            .with("vffws", Unit::MeterPerSecond, v)
            .unwrap()
            .with("tffws", Unit::NewtonMeter, a)
            .unwrap()
    }

    #[test]
    fn feedforward_constants_recovered() {
        let tr = 1.5915494309189535e-3;
        let t = ffw_trace(1.0, 0.002034, tr);
        let (v, a, r) = fit_feedforward(&t, &t, &t, tr).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!((a - 0.002034).abs() < 1e-15);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn constant_setpoint_is_degenerate() {
        let t = Trace::new(0.006, 0.0)
            .unwrap()
            .with("psec", Unit::Meter, vec![0.1; 50])
            .unwrap()
            .with("vffws", Unit::MeterPerSecond, vec![0.0; 50])
            .unwrap()
            .with("tffws", Unit::NewtonMeter, vec![0.0; 50])
            .unwrap();
        assert!(matches!(
            fit_feedforward(&t, &t, &t, 1.0),
            Err(IdentError::DegenerateRegressor(_))
        ));
    }

    #[test]
    fn noisy_vffw_slope_is_unbiased() {
        let t = ffw_trace(1.0, 0.002034, 1.0);
        let x = euler_d1(&t.require("psec").unwrap().data, 0.006);
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let sigma = 1e-3;
        let se = sigma / sxx.sqrt();
        let trials = 200;
        let slopes: Vec<f64> = (0..trials)
            .map(|s| {
                let noisy = add_noise(&t, "vffws", sigma, s).unwrap();
                fit_feedforward(&noisy, &noisy, &noisy, 1.0).unwrap().0
            })
            .collect();
        let mean = slopes.iter().sum::<f64>() / trials as f64;
        assert!(
            (mean - 1.0).abs() < 3.0 * se / (trials as f64).sqrt(),
            "{mean}"
        );
        let var = slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        assert!((var.sqrt() / se - 1.0).abs() < 0.2);
    }

    #[test]
    fn noise_is_seeded() {
        let t = ffw_trace(1.0, 0.0, 1.0);
        assert_eq!(
            add_noise(&t, "vffws", 0.1, 7).unwrap(),
            add_noise(&t, "vffws", 0.1, 7).unwrap()
        );
        assert_ne!(
            add_noise(&t, "vffws", 0.1, 7).unwrap(),
            add_noise(&t, "vffws", 0.1, 8).unwrap()
        );
    }

    #[test]
    fn stage_names_parse() {
        assert_eq!("ffw".parse::<Stage>().unwrap(), Stage::Feedforward);
        assert!("bogus".parse::<Stage>().is_err());
    }
}
