//! Closed-loop orchestration: setpoints → controller → plant, per axis.
//!
//! One plant step runs, in order: setpoint interpolation and delay lines,
//! the position loop (every t_sp), the velocity loop (every t_sv), the current
//! loop (every t_si) and the plant integration. Loop outputs are held between
//! their ticks.
//!
//! The position setpoint and the two feedforward signals are linearly
//! interpolated between position-period samples before entering the α/β/γ
//! delay lines, so each delay acts at plant-step resolution.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::cascade::{
    euler_d1, euler_d2, position_tick, tffw_torque, CurrentLoop, DelayLine, FeedforwardFlags,
    Schedule, VelocityLoop,
};
use crate::gpc::{
    model_from_axis, synthesize_rst, GpcError, GpcTuning, RstController, RstPolynomials,
};
use crate::io::MachineProfile;
use crate::params::{validate_profile_for_step, AxisParameters, DEFAULT_PLANT_STEP};
use crate::plant::{plant_step, PlantFault, PlantState};
use crate::trace::{Trace, TraceError};
use crate::trajectory::{generate_psec, FeedProfile, Geometry, PathSpec, Psec, TrajectoryError};
use crate::units::Unit;

/// Time the setpoint is held after the path ends, s.
pub const SETTLING_MARGIN: f64 = 0.5;

/// Time after each commanded acceleration interval still counted as transient, s.
pub const TRANSIENT_TAIL: f64 = 0.1;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("profile: {0}")]
    Profile(String),
    #[error("axis {axis}: plant fault: {fault}")]
    Plant { axis: String, fault: PlantFault },
    #[error("axis {axis}: {source}")]
    Controller {
        axis: String,
        #[source]
        source: GpcError,
    },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("misaligned signals: {0}")]
    Misaligned(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

/// Position controller of one axis. Velocity and current loops are always the cascade's.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Cascade(FeedforwardFlags),
    /// RST synthesized from the axis model with these tunings.
    Rst(GpcTuning),
    /// RST with given polynomials (must match the axis t_sp).
    RstPolynomials(RstPolynomials),
}

impl Default for ControllerSpec {
    fn default() -> Self {
        ControllerSpec::Cascade(FeedforwardFlags::BOTH)
    }
}

impl ControllerSpec {
    pub fn is_rst(&self) -> bool {
        !matches!(self, ControllerSpec::Cascade(_))
    }

    pub fn label(&self) -> String {
        match self {
            ControllerSpec::Cascade(f) => match (f.velocity, f.torque) {
                (false, false) => "cascade (no feedforward)".into(),
                (true, false) => "cascade (velocity feedforward)".into(),
                (false, true) => "cascade (torque feedforward)".into(),
                (true, true) => "cascade (velocity + torque feedforward)".into(),
            },
            ControllerSpec::Rst(t) => format!(
                "rst (n1 = {}, n2 = {}, nu = {}, lambda = {})",
                t.n1, t.n2, t.nu, t.lambda
            ),
            ControllerSpec::RstPolynomials(_) => "rst (given polynomials)".into(),
        }
    }
}

/// Setpoint source of a scenario.
#[derive(Debug, Clone)]
pub enum PathSource {
    Generated {
        path: PathSpec,
        feed: FeedProfile,
    },
    /// Pre-sampled setpoints at the axes' t_sp.
    Sampled(Psec),
}

/// Engine options shared by all axes of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub plant_step: f64,
    /// Record every plant step instead of every position period.
    pub full_rate: bool,
    /// Delays the whole setpoint stream by this many plant steps.
    pub setpoint_offset: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            plant_step: DEFAULT_PLANT_STEP,
            full_rate: false,
            setpoint_offset: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub profile: MachineProfile,
    pub source: PathSource,
    pub default_controller: ControllerSpec,
    /// Per-axis overrides of `default_controller`.
    pub controllers: BTreeMap<String, ControllerSpec>,
    /// Simulated time, s; `None` means end of motion plus the settling margin.
    pub duration: Option<f64>,
    pub options: RunOptions,
}

impl Scenario {
    pub fn new(name: &str, profile: MachineProfile, path: PathSpec, feed: FeedProfile) -> Self {
        Scenario {
            name: name.to_string(),
            profile,
            source: PathSource::Generated { path, feed },
            default_controller: ControllerSpec::default(),
            controllers: BTreeMap::new(),
            duration: None,
            options: RunOptions::default(),
        }
    }

    pub fn with_controller(mut self, c: ControllerSpec) -> Self {
        self.default_controller = c;
        self.controllers.clear();
        self
    }

    pub fn controller_for(&self, axis: &str) -> &ControllerSpec {
        self.controllers
            .get(axis)
            .unwrap_or(&self.default_controller)
    }

    pub fn axes(&self) -> Vec<String> {
        match &self.source {
            PathSource::Generated { path, .. } => path.axes.clone(),
            PathSource::Sampled(p) => p.axes.clone(),
        }
    }

    /// The geometry, when generated.
    pub fn geometry(&self) -> Option<&Geometry> {
        match &self.source {
            PathSource::Generated { path, .. } => Some(&path.geometry),
            PathSource::Sampled(_) => None,
        }
    }

    fn axis_params(&self) -> Result<Vec<&AxisParameters>, EngineError> {
        let axes = self.axes();
        let params = axes
            .iter()
            .map(|a| {
                self.profile.axis(a).ok_or_else(|| {
                    EngineError::Profile(format!(
                        "axis {a} is not in profile {}",
                        self.profile.machine
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        for p in &params {
            if let Err(v) = validate_profile_for_step(p, self.options.plant_step) {
                let msgs: Vec<String> = v.iter().map(|v| v.to_string()).collect();
                return Err(EngineError::Profile(format!(
                    "axis {}: {}",
                    p.name,
                    msgs.join("; ")
                )));
            }
        }
        if params
            .windows(2)
            .any(|w| w[0].t_sp != w[1].t_sp || w[0].kind != w[1].kind)
        {
            return Err(EngineError::Scenario(
                "all path axes must share the position cycle time and axis kind".into(),
            ));
        }
        for name in self.controllers.keys() {
            if !axes.contains(name) {
                return Err(EngineError::Scenario(format!(
                    "controller given for axis {name}, which the path does not use"
                )));
            }
        }
        Ok(params)
    }

    /// Generates (or returns) the setpoint streams.
    pub fn psec(&self) -> Result<Psec, EngineError> {
        let params = self.axis_params()?;
        let t_sp = params[0].t_sp;
        match &self.source {
            PathSource::Generated { path, feed } => Ok(generate_psec(
                path,
                feed,
                t_sp,
                params[0].kind.position_unit().is_angular(),
            )?),
            PathSource::Sampled(p) => {
                if (p.tsp() - t_sp).abs() > 1e-12 {
                    return Err(EngineError::Scenario(format!(
                        "sampled path period {} differs from t_sp {t_sp}",
                        p.tsp()
                    )));
                }
                Ok(p.clone())
            }
        }
    }
}

/// Error statistics of a sample set: max |e|, mean |e|, RMS.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorStats {
    pub max: f64,
    pub mean: f64,
    pub rms: f64,
    /// Index of the maximum within the full sample range.
    pub argmax: usize,
    pub count: usize,
}

impl ErrorStats {
    pub fn of(e: &[f64]) -> Self {
        Self::of_masked(e, |_| true)
    }

    /// Statistics over samples whose index satisfies `keep`.
    pub fn of_masked(e: &[f64], keep: impl Fn(usize) -> bool) -> Self {
        let mut s = ErrorStats::default();
        let (mut sum, mut sq) = (0.0, 0.0);
        for (k, v) in e.iter().enumerate() {
            if !keep(k) {
                continue;
            }
            let a = v.abs();
            if a > s.max || s.count == 0 {
                s.max = a;
                s.argmax = k;
            }
            sum += a;
            sq += a * a;
            s.count += 1;
        }
        if s.count > 0 {
            s.mean = sum / s.count as f64;
            s.rms = (sq / s.count as f64).sqrt();
        }
        s
    }
}

/// Output of `tracking_error`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingError {
    /// Per-axis `reference − sp`.
    pub per_axis: Vec<Vec<f64>>,
    /// Euclidean norm across axes per sample.
    pub norm: Vec<f64>,
    pub stats: ErrorStats,
}

/// Per-sample `reference − sp` for each axis plus the vector norm.
pub fn tracking_error(reference: &[&[f64]], sp: &[&[f64]]) -> Result<TrackingError, EngineError> {
    if reference.len() != sp.len() || reference.is_empty() {
        return Err(EngineError::Misaligned(format!(
            "{} reference axes against {} measured axes",
            reference.len(),
            sp.len()
        )));
    }
    let n = reference[0].len();
    if reference.iter().chain(sp).any(|c| c.len() != n) {
        return Err(EngineError::Misaligned("channels differ in length".into()));
    }
    let per_axis: Vec<Vec<f64>> = reference
        .iter()
        .zip(sp)
        .map(|(r, s)| r.iter().zip(s.iter()).map(|(a, b)| a - b).collect())
        .collect();
    let norm: Vec<f64> = (0..n)
        .map(|k| per_axis.iter().map(|e| e[k] * e[k]).sum::<f64>().sqrt())
        .collect();
    let stats = ErrorStats::of(&norm);
    Ok(TrackingError {
        per_axis,
        norm,
        stats,
    })
}

/// Radial deviation `|√((x−cx)² + (y−cy)²) − R|` per sample, and its maximum.
pub fn contour_error_circle(
    x: &[f64],
    y: &[f64],
    center: [f64; 2],
    radius: f64,
) -> (Vec<f64>, f64) {
    let dev: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| (((a - center[0]).powi(2) + (b - center[1]).powi(2)).sqrt() - radius).abs())
        .collect();
    let max = dev.iter().cloned().fold(0.0, f64::max);
    (dev, max)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let u = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + u * dx, a[1] + u * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

/// Largest distance from the (x, y) samples within half a leg of the vertex
/// to the commanded two-leg polyline.
pub fn corner_deviation_xy(x: &[f64], y: &[f64], geometry: &Geometry) -> Option<f64> {
    let Geometry::Corner { leg, .. } = geometry else {
        return None;
    };
    let v = geometry.vertices();
    let (a, o, b) = ([v[0][0], v[0][1]], [v[1][0], v[1][1]], [v[2][0], v[2][1]]);
    let mut worst: f64 = 0.0;
    for (px, py) in x.iter().zip(y) {
        let p = [*px, *py];
        if ((p[0] - o[0]).powi(2) + (p[1] - o[1]).powi(2)).sqrt() > leg / 2.0 {
            continue;
        }
        let d = point_segment_distance(p, a, o).min(point_segment_distance(p, o, b));
        worst = worst.max(d);
    }
    Some(worst)
}

/// Corner deviation of a run whose path is a corner.
pub fn corner_deviation(run: &RunResult, spec: &PathSpec) -> Option<f64> {
    if spec.axes.len() != 2 {
        return None;
    }
    let x = run.axis(&spec.axes[0])?.trace.channel("sp")?.data.clone();
    let y = run.axis(&spec.axes[1])?.trace.channel("sp")?.data.clone();
    corner_deviation_xy(&x, &y, &spec.geometry)
}

/// Result of one axis.
#[derive(Debug, Clone)]
pub struct AxisResult {
    pub axis: String,
    pub controller: String,
    /// Channels psec, sp, sv, smc, vffws, tffws, torque, pos_err; SI units.
    pub trace: Trace,
    /// Delay between PSEC and the reference the controller tracks, s.
    pub reference_delay: f64,
    pub velocity_saturated: bool,
    pub current_saturated: bool,
    pub warnings: Vec<String>,
}

/// Scalar metrics of a run; recomputable from the traces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub tracking: ErrorStats,
    pub steady: ErrorStats,
    pub transient: ErrorStats,
    pub per_axis: Vec<(String, ErrorStats)>,
    /// Max radial deviation for circle paths.
    pub max_radial: Option<f64>,
    /// Max deviation near the vertex for corner paths.
    pub corner_deviation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: String,
    pub axes: Vec<AxisResult>,
    /// Commanded acceleration intervals of the path, s (not delayed).
    pub accel_intervals: Vec<(f64, f64)>,
    pub motion_end: f64,
    pub metrics: RunMetrics,
}

impl RunResult {
    pub fn axis(&self, name: &str) -> Option<&AxisResult> {
        self.axes.iter().find(|a| a.axis == name)
    }

    pub fn saturated(&self) -> bool {
        self.axes
            .iter()
            .any(|a| a.velocity_saturated || a.current_saturated)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.axes
            .iter()
            .flat_map(|a| a.warnings.iter().map(move |w| format!("{}: {w}", a.axis)))
            .collect()
    }

    /// All axes in one trace with axis-qualified channel names.
    pub fn combined_trace(&self) -> Result<Trace, TraceError> {
        let first = &self.axes[0].trace;
        let mut out = Trace::new(first.dt(), first.t0())?;
        for a in &self.axes {
            for c in a.trace.channels() {
                out.push(&format!("{}.{}", c.name, a.axis), c.unit, c.data.clone())?;
            }
        }
        Ok(out)
    }

    /// True when sample `k` lies in a commanded acceleration interval,
    /// shifted by the reference delay and extended by `tail`.
    pub fn in_transient(&self, k: usize, tail: f64) -> bool {
        let tr = &self.axes[0].trace;
        let t = tr.time(k);
        let d = self.axes[0].reference_delay;
        let eps = 1e-9;
        self.accel_intervals
            .iter()
            .any(|(a, b)| t >= a + d - eps && t <= b + d + tail + eps)
    }
}

/// Setpoint samples extended by holding the last value.
struct Held<'a>(&'a [f64]);

impl Held<'_> {
    fn at(&self, k: usize) -> f64 {
        self.0[k.min(self.0.len() - 1)]
    }

    /// Linear interpolation at plant step `m` with `per` steps per sample.
    fn fine(&self, m: u64, per: usize) -> f64 {
        let k = (m / per as u64) as usize;
        let r = (m % per as u64) as f64 / per as f64;
        let (a, b) = (self.at(k), self.at(k + 1));
        a + r * (b - a)
    }
}

enum PositionController {
    Cascade(FeedforwardFlags),
    Rst(Box<RstController>),
}

/// Simulates one axis for `periods` position periods.
pub fn simulate_axis(
    p: &AxisParameters,
    spec: &ControllerSpec,
    psec: &[f64],
    periods: usize,
    opts: &RunOptions,
) -> Result<AxisResult, EngineError> {
    let err_ctrl = |source: GpcError| EngineError::Controller {
        axis: p.name.clone(),
        source,
    };
    if psec.is_empty() {
        return Err(EngineError::Scenario("empty setpoint stream".into()));
    }
    let dt = opts.plant_step;
    let sched = Schedule::new(p, dt).map_err(|e| EngineError::Profile(e.to_string()))?;
    let per = sched.position;

    let y0 = psec[0];
    let mut pos_ctrl = match spec {
        ControllerSpec::Cascade(f) => PositionController::Cascade(*f),
        ControllerSpec::Rst(t) => {
            let model = model_from_axis(p, dt).map_err(err_ctrl)?;
            let syn = synthesize_rst(&model.model, t).map_err(err_ctrl)?;
            PositionController::Rst(Box::new(RstController::new(syn.rst, y0)))
        }
        ControllerSpec::RstPolynomials(r) => {
            if (r.t_sp - p.t_sp).abs() > 1e-12 {
                return Err(EngineError::Scenario(format!(
                    "axis {}: RST polynomials sampled at {} s, axis t_sp is {} s",
                    p.name, r.t_sp, p.t_sp
                )));
            }
            PositionController::Rst(Box::new(RstController::new(r.clone(), y0)))
        }
    };
    let flags = match &pos_ctrl {
        PositionController::Cascade(f) => *f,
        PositionController::Rst(_) => FeedforwardFlags::OFF,
    };
    let reference_delay = match &pos_ctrl {
        PositionController::Cascade(_) => p.alpha,
        PositionController::Rst(_) => 0.0,
    };

    // Hold the final setpoint long enough that both derivatives settle to zero.
    let mut held = psec.to_vec();
    held.resize(psec.len().max(periods + 1) + 2, psec[psec.len() - 1]);
    let d1 = euler_d1(&held, p.t_sp);
    let d2 = euler_d2(&held, p.t_sp);
    let (src, vel_src, acc_src) = (Held(&held), Held(&d1), Held(&d2));

    let mut alpha_line = DelayLine::new(sched.alpha, y0);
    let mut beta_line = DelayLine::new(sched.beta, 0.0);
    let mut gamma_line = DelayLine::new(sched.gamma, 0.0);
    let mut vel = VelocityLoop::new(p);
    let mut cur = CurrentLoop::new(p);
    let mut state = PlantState::at_rest(p, y0);
    let (mut v_set, mut i_set, mut u) = (0.0, 0.0, 0.0);
    let (mut vel_sat, mut cur_sat) = (false, false);
    let mut beyond_fit = false;

    let total = periods as u64 * per as u64;
    let stride = if opts.full_rate { 1 } else { per as u64 };
    let n_rec = (total / stride) as usize + 1;
    let mut rec: [Vec<f64>; 8] = Default::default();
    for c in rec.iter_mut() {
        c.reserve(n_rec);
    }
    let offset = opts.setpoint_offset as u64;
    let mut refs = Vec::new();

    for n in 0..=total {
        let m = n.saturating_sub(offset);
        let psec_fine = src.fine(m, per);
        let reference = alpha_line.push(psec_fine);
        let vel_ff = beta_line.push(vel_src.fine(m, per));
        let acc_ff = gamma_line.push(acc_src.fine(m, per));

        if sched.position_fires(n) {
            let k = (n / per as u64) as usize;
            let y = state.axis_pos(p);
            v_set = match &mut pos_ctrl {
                PositionController::Cascade(f) => {
                    position_tick(p, reference, y, f.velocity.then_some(vel_ff))
                }
                PositionController::Rst(c) => {
                    let window = c.polynomials().window();
                    refs.clear();
                    refs.extend((0..window).map(|j| src.at(k + j)));
                    let disp = c.tick(&refs, y).map_err(err_ctrl)?;
                    disp / (p.t_sp * p.transmission)
                }
            };
        }
        if n % stride == 0 {
            let k = (m / per as u64) as usize;
            let on_sample = m % per as u64 == 0;
            let y = state.axis_pos(p);
            let tracked = match pos_ctrl {
                PositionController::Cascade(_) => reference,
                PositionController::Rst(_) => psec_fine,
            };
            let vffws = if flags.velocity && on_sample {
                p.vffw * vel_src.at(k)
            } else if flags.velocity {
                p.vffw * vel_src.fine(m, per)
            } else {
                0.0
            };
            let tffws = if flags.torque && on_sample {
                tffw_torque(p, acc_src.at(k))
            } else if flags.torque {
                tffw_torque(p, acc_src.fine(m, per))
            } else {
                0.0
            };
            let row = [
                psec_fine,
                y,
                state.axis_velocity(p),
                state.current,
                vffws,
                tffws,
                state.motor_torque(p),
                tracked - y,
            ];
            for (c, v) in rec.iter_mut().zip(row) {
                c.push(v);
            }
        }
        if n == total {
            break;
        }
        if sched.velocity_fires(n) {
            let tff = if flags.torque {
                tffw_torque(p, acc_ff)
            } else {
                0.0
            };
            i_set = vel.tick(v_set, state.omega, tff);
            vel_sat |= vel.saturated();
        }
        if sched.current_fires(n) {
            u = cur.tick(i_set, state.current);
            cur_sat |= cur.saturated();
        }
        state = plant_step(p, state, u, dt).map_err(|fault| EngineError::Plant {
            axis: p.name.clone(),
            fault,
        })?;
        if !beyond_fit && p.friction_velocity(state.axis_velocity(p)).abs() > p.friction.v_fit_max {
            beyond_fit = true;
        }
    }

    let pos_unit = p.kind.si_position_unit();
    let vel_unit = p.kind.si_velocity_unit();
    let names: [(&str, Unit); 8] = [
        ("psec", pos_unit),
        ("sp", pos_unit),
        ("sv", vel_unit),
        ("smc", Unit::Ampere),
        ("vffws", vel_unit),
        ("tffws", Unit::NewtonMeter),
        ("torque", Unit::NewtonMeter),
        ("pos_err", pos_unit),
    ];
    let mut trace = Trace::new(stride as f64 * dt, 0.0)?;
    for ((name, unit), data) in names.into_iter().zip(rec) {
        trace.push(name, unit, data)?;
    }
    let mut warnings = Vec::new();
    if beyond_fit {
        warnings.push(format!(
            "speed exceeded the friction fit range ({} {}); the law was extrapolated",
            p.friction.v_fit_max,
            p.kind.velocity_unit()
        ));
    }
    if vel_sat || cur_sat {
        warnings.push("actuator limits were reached".into());
    }
    Ok(AxisResult {
        axis: p.name.clone(),
        controller: spec.label(),
        trace,
        reference_delay,
        velocity_saturated: vel_sat,
        current_saturated: cur_sat,
        warnings,
    })
}

fn compute_metrics(
    axes: &[AxisResult],
    intervals: &[(f64, f64)],
    geometry: Option<&Geometry>,
) -> Result<RunMetrics, EngineError> {
    let refs: Vec<Vec<f64>> = axes
        .iter()
        .map(|a| {
            let sp = &a.trace.require("sp")?.data;
            let e = &a.trace.require("pos_err")?.data;
            Ok(sp.iter().zip(e).map(|(s, e)| s + e).collect())
        })
        .collect::<Result<_, TraceError>>()?;
    let sps: Vec<&[f64]> = axes
        .iter()
        .map(|a| a.trace.channel("sp").unwrap().data.as_slice())
        .collect();
    let ref_slices: Vec<&[f64]> = refs.iter().map(Vec::as_slice).collect();
    let te = tracking_error(&ref_slices, &sps)?;
    let tr = &axes[0].trace;
    let d = axes[0].reference_delay;
    let transient = |k: usize| {
        let t = tr.time(k);
        intervals
            .iter()
            .any(|(a, b)| t >= a + d - 1e-9 && t <= b + d + TRANSIENT_TAIL + 1e-9)
    };
    let per_axis = axes
        .iter()
        .zip(&te.per_axis)
        .map(|(a, e)| (a.axis.clone(), ErrorStats::of(e)))
        .collect();
    let (max_radial, corner) = match geometry {
        Some(Geometry::Circle { center, radius, .. }) if axes.len() == 2 => (
            Some(contour_error_circle(sps[0], sps[1], *center, *radius).1),
            None,
        ),
        Some(g @ Geometry::Corner { .. }) if axes.len() == 2 => {
            (None, corner_deviation_xy(sps[0], sps[1], g))
        }
        _ => (None, None),
    };
    Ok(RunMetrics {
        tracking: te.stats,
        steady: ErrorStats::of_masked(&te.norm, |k| !transient(k)),
        transient: ErrorStats::of_masked(&te.norm, transient),
        per_axis,
        max_radial,
        corner_deviation: corner,
    })
}

/// Runs every path axis of the scenario (independently, in parallel).
pub fn run(s: &Scenario) -> Result<RunResult, EngineError> {
    let params = s.axis_params()?;
    let psec = s.psec()?;
    let t_sp = params[0].t_sp;
    let duration = match s.duration {
        Some(d) => {
            if d + 1e-12 < psec.motion_end {
                return Err(EngineError::Scenario(format!(
                    "duration {d} s is shorter than the path ({} s)",
                    psec.motion_end
                )));
            }
            d
        }
        None => psec.motion_end + SETTLING_MARGIN,
    };
    let periods = (duration / t_sp - 1e-9).ceil() as usize;
    let axes = s.axes();
    let results: Vec<Result<AxisResult, EngineError>> = axes
        .par_iter()
        .zip(params.par_iter())
        .map(|(name, p)| {
            let data = psec.samples(name).expect("psec has every path axis");
            simulate_axis(p, s.controller_for(name), data, periods, &s.options)
        })
        .collect();
    let axes: Vec<AxisResult> = results.into_iter().collect::<Result<_, _>>()?;
    let metrics = compute_metrics(&axes, &psec.accel_intervals, s.geometry())?;
    Ok(RunResult {
        scenario: s.name.clone(),
        axes,
        accel_intervals: psec.accel_intervals,
        motion_end: psec.motion_end,
        metrics,
    })
}

/// Cascade and RST runs on identical setpoints.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub cascade: RunResult,
    pub rst: RunResult,
    /// RST max tracking error over cascade max tracking error.
    pub ratio: f64,
    /// Same ratio on the radial (contour) error, for circles.
    pub radial_ratio: Option<f64>,
}

pub fn compare(
    s: &Scenario,
    cascade: ControllerSpec,
    rst: ControllerSpec,
) -> Result<Comparison, EngineError> {
    let psec = s.psec()?;
    let mut base = s.clone();
    base.source = PathSource::Sampled(psec);
    base.controllers.clear();
    let (a, b) = rayon::join(
        || run(&base.clone().with_controller(cascade.clone())),
        || run(&base.clone().with_controller(rst.clone())),
    );
    let (mut a, mut b) = (a?, b?);
    // the sampled copy drops the geometry; restore geometric metrics
    if let Some(g) = s.geometry() {
        a.metrics = compute_metrics(&a.axes, &a.accel_intervals, Some(g))?;
        b.metrics = compute_metrics(&b.axes, &b.accel_intervals, Some(g))?;
    }
    let ratio = b.metrics.tracking.max / a.metrics.tracking.max;
    let radial_ratio = match (a.metrics.max_radial, b.metrics.max_radial) {
        (Some(x), Some(y)) => Some(y / x),
        _ => None,
    };
    Ok(Comparison {
        cascade: a,
        rst: b,
        ratio,
        radial_ratio,
    })
}

/// Ranking metric of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMetric {
    #[default]
    MaxTracking,
    RmsTracking,
    MaxRadial,
}

impl SweepMetric {
    pub fn of(&self, m: &RunMetrics) -> f64 {
        match self {
            SweepMetric::MaxTracking => m.tracking.max,
            SweepMetric::RmsTracking => m.tracking.rms,
            SweepMetric::MaxRadial => m.max_radial.unwrap_or(f64::NAN),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepMetric::MaxTracking => "max_tracking",
            SweepMetric::RmsTracking => "rms_tracking",
            SweepMetric::MaxRadial => "max_radial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tuning: GpcTuning,
    /// Ranking metric, or the failure of the cell.
    pub outcome: Result<SweepCell, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub metric: f64,
    pub metrics: RunMetrics,
}

fn tie_key(t: &GpcTuning) -> (usize, usize, f64, usize) {
    (t.n2, t.nu, t.lambda, t.n1)
}

/// Grid over the four tuning knobs.
pub fn tuning_grid(n1: &[usize], n2: &[usize], nu: &[usize], lambda: &[f64]) -> Vec<GpcTuning> {
    let mut out = Vec::new();
    for &a in n1 {
        for &b in n2 {
            for &c in nu {
                for &l in lambda {
                    out.push(GpcTuning {
                        n1: a,
                        n2: b,
                        nu: c,
                        lambda: l,
                    });
                }
            }
        }
    }
    out
}

/// Runs the scenario with RST at every grid tuning and ranks the cells by
/// `metric` (ascending); ties break on (n2, nu, λ, n1). Failed cells go last.
pub fn tuning_sweep(
    s: &Scenario,
    grid: &[GpcTuning],
    metric: SweepMetric,
) -> Result<Vec<SweepRow>, EngineError> {
    let psec = s.psec()?;
    let mut base = s.clone();
    let geometry = s.geometry().cloned();
    base.source = PathSource::Sampled(psec);
    let mut rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|t| {
            let outcome = run(&base.clone().with_controller(ControllerSpec::Rst(*t)))
                .and_then(|r| compute_metrics(&r.axes, &r.accel_intervals, geometry.as_ref()))
                .map(|m| SweepCell {
                    metric: metric.of(&m),
                    metrics: m,
                })
                .map_err(|e| e.to_string());
            SweepRow {
                tuning: *t,
                outcome,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let ka = a
            .outcome
            .as_ref()
            .map(|c| c.metric)
            .unwrap_or(f64::INFINITY);
        let kb = b
            .outcome
            .as_ref()
            .map(|c| c.metric)
            .unwrap_or(f64::INFINITY);
        ka.total_cmp(&kb).then_with(|| {
            let (x, y) = (tie_key(&a.tuning), tie_key(&b.tuning));
            x.0.cmp(&y.0)
                .then(x.1.cmp(&y.1))
                .then(x.2.total_cmp(&y.2))
                .then(x.3.cmp(&y.3))
        })
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::profile::bundled_profile;

    fn x_segment(feed_m_min: f64, length: f64) -> Scenario {
        let feed = feed_m_min / 60.0;
        let mut prof = bundled_profile().clone();
        prof.axes.retain(|a| a.name == "X" || a.name == "Y");
        Scenario::new(
            "segment",
            prof,
            PathSpec {
                axes: vec!["X".into()],
                geometry: Geometry::Segment {
                    start: vec![0.0],
                    end: vec![length],
                    feed,
                },
            },
            FeedProfile {
                max_feed: feed,
                max_accel: 2.0,
                max_jerk: f64::INFINITY,
            },
        )
    }

    #[test]
    fn error_stats_basics() {
        let s = ErrorStats::of(&[0.0, -3.0, 4.0]);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.argmax, 2);
        assert!((s.mean - 7.0 / 3.0).abs() < 1e-15);
        assert!((s.rms - (25.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tracking_error_of_identical_and_shifted() {
        let psec: Vec<f64> = (0..20).map(|k| 0.01 * k as f64).collect();
        let te = tracking_error(&[&psec], &[&psec]).unwrap();
        assert!(te.norm.iter().all(|v| *v == 0.0));
        let mut delayed = vec![0.0];
        delayed.extend_from_slice(&psec[..19]);
        let te = tracking_error(&[&psec], &[&delayed]).unwrap();
        assert!(te.per_axis[0][1..].iter().all(|v| (v - 0.01).abs() < 1e-15));
        assert!(tracking_error(&[&psec], &[&psec[..5]]).is_err());
    }

    #[test]
    fn circle_contour_error() {
        let n = 100;
        let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|k| {
                let th = k as f64 * 0.0628;
                (1.0 + 0.15 * th.cos(), 2.0 + 0.15 * th.sin())
            })
            .unzip();
        let (_, m) = contour_error_circle(&x, &y, [1.0, 2.0], 0.15);
        assert!(m < 1e-15);
        let xs: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) * (0.149 / 0.15)).collect();
        let ys: Vec<f64> = y.iter().map(|v| 2.0 + (v - 2.0) * (0.149 / 0.15)).collect();
        let (dev, _) = contour_error_circle(&xs, &ys, [1.0, 2.0], 0.15);
        assert!(dev.iter().all(|d| (d - 0.001).abs() < 1e-12));
    }

    #[test]
    fn corner_deviation_of_exact_path_is_zero() {
        let g = Geometry::Corner {
            angle: std::f64::consts::FRAC_PI_2,
            leg: 0.1,
            feed: 0.1,
        };
        let spec = PathSpec {
            axes: vec!["X".into(), "Y".into()],
            geometry: g.clone(),
        };
        let feed = FeedProfile {
            max_feed: 0.1,
            max_accel: 2.0,
            max_jerk: f64::INFINITY,
        };
        let psec = generate_psec(&spec, &feed, 0.006, false).unwrap();
        let d = corner_deviation_xy(psec.samples("X").unwrap(), psec.samples("Y").unwrap(), &g)
            .unwrap();
        assert!(d < 1e-15);
    }

    #[test]
    fn steady_error_without_feedforward_is_v_over_kp() {
        let s = x_segment(6.0, 0.3).with_controller(ControllerSpec::Cascade(FeedforwardFlags::OFF));
        let r = run(&s).unwrap();
        let x = r.axis("X").unwrap();
        let e = &x.trace.channel("pos_err").unwrap().data;
        let mid = (r.motion_end / 2.0 / 0.006) as usize;
        let expected = 0.1 / 25.0;
        assert!(
            (e[mid] - expected).abs() < 0.01 * expected,
            "{} vs {}",
            e[mid],
            expected
        );
        assert!(!r.saturated());
    }

    #[test]
    fn zero_length_path_is_quiet() {
        let mut s = x_segment(6.0, 0.0);
        s.duration = Some(0.2);
        let r = run(&s).unwrap();
        let x = r.axis("X").unwrap();
        for c in x.trace.channels() {
            assert!(c.data.iter().all(|v| *v == c.data[0]), "{}", c.name);
        }
        assert_eq!(r.metrics.tracking.max, 0.0);
    }
}
