//! Setpoint (PSEC) generation for the assessment paths and ingestion of
//! externally sampled paths.
//!
//! Motion along a path is planned per leg as accelerate / cruise / decelerate
//! with symmetric S-curve velocity transitions (trapezoidal when the jerk limit
//! is infinite). There is no look-ahead blending: corners are taken at the
//! speed the per-axis acceleration limit allows within one position period.

use std::path::Path;

use thiserror::Error;

use crate::io::{read_trace, IoError};
use crate::trace::{Trace, TraceError};
use crate::units::Unit;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("invalid path: {0}")]
    Invalid(String),
    #[error("leg {leg}: cannot reach the programmed feed {requested} within the leg; achievable peak feed is {achievable}")]
    Infeasible {
        leg: usize,
        requested: f64,
        achievable: f64,
    },
    #[error("sampled path: {0}")]
    Sampled(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Kinematic limits along the path, SI (m or rad based). `max_accel` and
/// `max_jerk` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedProfile {
    pub max_feed: f64,
    pub max_accel: f64,
    pub max_jerk: f64,
}

impl FeedProfile {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let ok = |v: f64| v > 0.0 && !v.is_nan();
        if !(ok(self.max_feed)
            && self.max_feed.is_finite()
            && ok(self.max_accel)
            && ok(self.max_jerk))
        {
            return Err(TrajectoryError::Invalid(format!(
                "feed profile limits must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Path geometry in SI axis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Straight move at constant programmed feed.
    Segment {
        start: Vec<f64>,
        end: Vec<f64>,
        feed: f64,
    },
    /// `start → mid` at `v1`, then `mid → end` at `v2`, with `v1 > v2`.
    TwoSpeed {
        start: Vec<f64>,
        mid: Vec<f64>,
        end: Vec<f64>,
        v1: f64,
        v2: f64,
    },
    /// `start → end → start` at the same feed.
    BackAndForth {
        start: Vec<f64>,
        end: Vec<f64>,
        feed: f64,
    },
    /// One full counter-clockwise turn starting at angle 0.
    Circle {
        center: [f64; 2],
        radius: f64,
        feed: f64,
    },
    /// Two legs of length `leg` meeting at the origin with interior angle `angle` (rad).
    Corner { angle: f64, leg: f64, feed: f64 },
    /// Arbitrary polyline; `feeds[i]` is the feed of the leg leaving `points[i]`.
    Polyline {
        points: Vec<Vec<f64>>,
        feeds: Vec<f64>,
    },
}

/// A geometry plus the machine axes its coordinates drive, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub axes: Vec<String>,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    t0: f64,
    dur: f64,
    s0: f64,
    v0: f64,
    a0: f64,
    jerk: f64,
}

impl Piece {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let tau = (t - self.t0).clamp(0.0, self.dur);
        let s =
            self.s0 + self.v0 * tau + self.a0 * tau * tau / 2.0 + self.jerk * tau * tau * tau / 6.0;
        let v = self.v0 + self.a0 * tau + self.jerk * tau * tau / 2.0;
        let a = self.a0 + self.jerk * tau;
        (s, v, a)
    }

    fn end(&self) -> (f64, f64, f64) {
        self.eval(self.t0 + self.dur)
    }
}

/// Path-parameter motion s(t) built from constant-jerk pieces.
#[derive(Debug, Clone, Default)]
pub struct MotionProfile {
    pieces: Vec<Piece>,
    t: f64,
    s: f64,
    v: f64,
}

/// Duration of a symmetric velocity transition of size `dv` under the limits.
fn transition_time(dv: f64, lim: &FeedProfile) -> f64 {
    let (a, j) = (lim.max_accel, lim.max_jerk);
    match (a.is_finite(), j.is_finite()) {
        (false, false) => 0.0,
        (true, false) => dv / a,
        (false, true) => 2.0 * (dv / j).sqrt(),
        (true, true) => {
            if dv >= a * a / j {
                dv / a + a / j
            } else {
                2.0 * (dv / j).sqrt()
            }
        }
    }
}

/// Distance covered while changing speed from `v0` to `v1`.
pub fn transition_distance(v0: f64, v1: f64, lim: &FeedProfile) -> f64 {
    0.5 * (v0 + v1) * transition_time((v1 - v0).abs(), lim)
}

impl MotionProfile {
    fn push(&mut self, dur: f64, a0: f64, jerk: f64) {
        if dur <= 0.0 {
            return;
        }
        let piece = Piece {
            t0: self.t,
            dur,
            s0: self.s,
            v0: self.v,
            a0,
            jerk,
        };
        let (s, v, _) = piece.end();
        self.pieces.push(piece);
        self.t += dur;
        self.s = s;
        self.v = v;
    }

    fn transition(&mut self, to: f64, lim: &FeedProfile) {
        let dv = (to - self.v).abs();
        if dv == 0.0 {
            return;
        }
        let sg = (to - self.v).signum();
        let (a, j) = (lim.max_accel, lim.max_jerk);
        match (a.is_finite(), j.is_finite()) {
            (false, false) => {}
            (true, false) => self.push(dv / a, sg * a, 0.0),
            (false, true) => {
                let tj = (dv / j).sqrt();
                self.push(tj, 0.0, sg * j);
                self.push(tj, sg * j * tj, -sg * j);
            }
            (true, true) => {
                if dv >= a * a / j {
                    let tj = a / j;
                    self.push(tj, 0.0, sg * j);
                    self.push(dv / a - a / j, sg * a, 0.0);
                    self.push(tj, sg * a, -sg * j);
                } else {
                    let tj = (dv / j).sqrt();
                    self.push(tj, 0.0, sg * j);
                    self.push(tj, sg * j * tj, -sg * j);
                }
            }
        }
        // pin the end state exactly; float drift in v is reset here
        self.v = to;
    }

    fn cruise(&mut self, dur: f64) {
        self.push(dur, 0.0, 0.0);
    }

    pub fn duration(&self) -> f64 {
        self.t
    }

    pub fn length(&self) -> f64 {
        self.s
    }

    /// (s, v, a) at time `t`; held at the final state afterwards.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if self.pieces.is_empty() {
            return (self.s, 0.0, 0.0);
        }
        if t >= self.t {
            return (self.s, 0.0, 0.0);
        }
        let k = self.pieces.partition_point(|p| p.t0 <= t).max(1) - 1;
        self.pieces[k].eval(t)
    }

    /// Time intervals where the commanded path acceleration is non-zero,
    /// adjacent pieces merged.
    pub fn accel_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in &self.pieces {
            if p.a0 == 0.0 && p.jerk == 0.0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if (last.1 - p.t0).abs() < 1e-12 => last.1 = p.t0 + p.dur,
                _ => out.push((p.t0, p.t0 + p.dur)),
            }
        }
        out
    }

    /// Instants of instantaneous velocity jumps (infinite acceleration).
    fn jump_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut prev_end: Option<(f64, f64)> = None;
        for p in &self.pieces {
            if let Some((t, v)) = prev_end {
                if (v - p.v0).abs() > 1e-12 * (1.0 + v.abs()) {
                    out.push(t);
                }
            } else if p.v0 != 0.0 {
                out.push(p.t0);
            }
            let (_, v, _) = p.end();
            prev_end = Some((p.t0 + p.dur, v));
        }
        if let Some((t, v)) = prev_end {
            if v.abs() > 1e-12 {
                out.push(t);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Primitive {
    Line {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start: f64,
    },
}

impl Primitive {
    fn length(&self) -> f64 {
        match self {
            Primitive::Line { from, to } => dist(from, to),
            Primitive::Arc { radius, .. } => 2.0 * std::f64::consts::PI * radius,
        }
    }

    fn point(&self, s: f64) -> Vec<f64> {
        match self {
            Primitive::Line { from, to } => {
                let len = dist(from, to);
                let u = if len > 0.0 {
                    (s / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                from.iter().zip(to).map(|(a, b)| a + (b - a) * u).collect()
            }
            Primitive::Arc {
                center,
                radius,
                start,
            } => {
                let th = start + s / radius;
                vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
        }
    }

    fn direction_in(&self) -> Vec<f64> {
        match self {
            Primitive::Line { from, to } => unit(from, to),
            Primitive::Arc { start, .. } => vec![-start.sin(), start.cos()],
        }
    }

    fn direction_out(&self) -> Vec<f64> {
        match self {
            Primitive::Line { from, to } => unit(from, to),
            Primitive::Arc { start, .. } => vec![-start.sin(), start.cos()],
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (y - x).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn unit(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = dist(a, b);
    a.iter()
        .zip(b)
        .map(|(x, y)| if d > 0.0 { (y - x) / d } else { 0.0 })
        .collect()
}

/// Speed allowed through a junction: the per-axis velocity step over one
/// position period must stay within `max_accel · tsp`; reversals stop.
fn junction_speed(d_in: &[f64], d_out: &[f64], cap: f64, lim: &FeedProfile, tsp: f64) -> f64 {
    let dot: f64 = d_in.iter().zip(d_out).map(|(a, b)| a * b).sum();
    if dot <= -1.0 + 1e-12 {
        return 0.0;
    }
    let jump = d_in
        .iter()
        .zip(d_out)
        .map(|(a, b)| (b - a).abs())
        .fold(0.0, f64::max);
    if jump <= 1e-12 {
        cap
    } else {
        cap.min(lim.max_accel * tsp / jump)
    }
}

impl Geometry {
    fn dimension(&self) -> usize {
        match self {
            Geometry::Segment { start, .. }
            | Geometry::TwoSpeed { start, .. }
            | Geometry::BackAndForth { start, .. } => start.len(),
            Geometry::Circle { .. } | Geometry::Corner { .. } => 2,
            Geometry::Polyline { points, .. } => points.first().map_or(0, Vec::len),
        }
    }

    fn validate(&self) -> Result<(), TrajectoryError> {
        let bad = |m: String| Err(TrajectoryError::Invalid(m));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        match self {
            Geometry::Segment { start, end, feed }
            | Geometry::BackAndForth { start, end, feed } => {
                if start.len() != end.len() {
                    return bad("start and end differ in dimension".into());
                }
                if !pos(*feed) {
                    return bad(format!("feed must be positive, got {feed}"));
                }
            }
            Geometry::TwoSpeed {
                start,
                mid,
                end,
                v1,
                v2,
            } => {
                if start.len() != mid.len() || mid.len() != end.len() {
                    return bad("points differ in dimension".into());
                }
                if !pos(*v1) || !pos(*v2) {
                    return bad("feeds must be positive".into());
                }
                if v1 <= v2 {
                    return bad(format!("two-speed segment needs v1 > v2, got {v1} <= {v2}"));
                }
            }
            Geometry::Circle { radius, feed, .. } => {
                if !pos(*radius) {
                    return bad(format!("radius must be positive, got {radius}"));
                }
                if !pos(*feed) {
                    return bad(format!("feed must be positive, got {feed}"));
                }
            }
            Geometry::Corner { angle, leg, feed } => {
                if !(*angle > 0.0 && *angle < std::f64::consts::PI) {
                    return bad(format!(
                        "corner angle must be in (0, 180) degrees, got {}",
                        angle.to_degrees()
                    ));
                }
                if !pos(*leg) || !pos(*feed) {
                    return bad("corner leg and feed must be positive".into());
                }
            }
            Geometry::Polyline { points, feeds } => {
                if points.len() < 2 || feeds.len() + 1 != points.len() {
                    return bad("polyline needs n >= 2 points and n - 1 feeds".into());
                }
                if points.iter().any(|p| p.len() != points[0].len()) {
                    return bad("polyline points differ in dimension".into());
                }
                if feeds.iter().any(|f| !pos(*f)) {
                    return bad("polyline feeds must be positive".into());
                }
            }
        }
        Ok(())
    }

    /// Primitives with their programmed feeds.
    fn primitives(&self) -> Vec<(Primitive, f64)> {
        let line = |a: &Vec<f64>, b: &Vec<f64>| Primitive::Line {
            from: a.clone(),
            to: b.clone(),
        };
        match self {
            Geometry::Segment { start, end, feed } => vec![(line(start, end), *feed)],
            Geometry::TwoSpeed {
                start,
                mid,
                end,
                v1,
                v2,
            } => {
                vec![(line(start, mid), *v1), (line(mid, end), *v2)]
            }
            Geometry::BackAndForth { start, end, feed } => {
                vec![(line(start, end), *feed), (line(end, start), *feed)]
            }
            Geometry::Circle {
                center,
                radius,
                feed,
            } => vec![(
                Primitive::Arc {
                    center: *center,
                    radius: *radius,
                    start: 0.0,
                },
                *feed,
            )],
            Geometry::Corner { angle, leg, feed } => {
                let p0 = vec![-leg, 0.0];
                let v = vec![0.0, 0.0];
                let p2 = vec![-leg * angle.cos(), leg * angle.sin()];
                vec![(line(&p0, &v), *feed), (line(&v, &p2), *feed)]
            }
            Geometry::Polyline { points, feeds } => points
                .windows(2)
                .zip(feeds)
                .map(|(w, f)| (line(&w[0], &w[1]), *f))
                .collect(),
        }
    }

    /// Largest programmed feed of any leg.
    pub fn max_feed(&self) -> f64 {
        self.primitives()
            .iter()
            .map(|(_, f)| *f)
            .fold(0.0, f64::max)
    }

    /// The commanded polyline vertices (lines only; circles return none).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let prims = self.primitives();
        let mut out = Vec::new();
        for (p, _) in &prims {
            if let Primitive::Line { from, .. } = p {
                out.push(from.clone());
            }
        }
        if let Some((Primitive::Line { to, .. }, _)) = prims.last() {
            out.push(to.clone());
        }
        out
    }
}

/// Generated setpoints for every path axis, plus the planned motion.
#[derive(Debug, Clone)]
pub struct Psec {
    pub axes: Vec<String>,
    /// One trace per axis with a single `psec` channel, SI units.
    pub traces: Vec<Trace>,
    pub accel_intervals: Vec<(f64, f64)>,
    /// Time at which the commanded motion ends.
    pub motion_end: f64,
}

impl Psec {
    pub fn samples(&self, axis: &str) -> Option<&[f64]> {
        let k = self.axes.iter().position(|a| a == axis)?;
        self.traces[k].channel("psec").map(|c| c.data.as_slice())
    }

    pub fn tsp(&self) -> f64 {
        self.traces[0].dt()
    }

    pub fn len(&self) -> usize {
        self.traces[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn si_position_unit(axis_is_angular: bool) -> Unit {
    if axis_is_angular {
        Unit::Radian
    } else {
        Unit::Meter
    }
}

/// Plans the motion for `spec` and samples it every `tsp`.
///
/// `angular` selects the SI unit label (rad instead of m) of the traces.
pub fn generate_psec(
    spec: &PathSpec,
    profile: &FeedProfile,
    tsp: f64,
    angular: bool,
) -> Result<Psec, TrajectoryError> {
    profile.validate()?;
    spec.geometry.validate()?;
    if spec.axes.len() != spec.geometry.dimension() {
        return Err(TrajectoryError::Invalid(format!(
            "{} axes mapped onto a {}-dimensional path",
            spec.axes.len(),
            spec.geometry.dimension()
        )));
    }
    if !(tsp > 0.0) {
        return Err(TrajectoryError::Invalid(format!(
            "sampling period must be positive, got {tsp}"
        )));
    }

    let prims = spec.geometry.primitives();
    let lengths: Vec<f64> = prims.iter().map(|(p, _)| p.length()).collect();
    let feeds: Vec<f64> = prims.iter().map(|(_, f)| f.min(profile.max_feed)).collect();

    let n = prims.len();
    let mut junction = vec![0.0; n + 1];
    for k in 1..n {
        let cap = feeds[k - 1].min(feeds[k]);
        junction[k] = junction_speed(
            &prims[k - 1].0.direction_out(),
            &prims[k].0.direction_in(),
            cap,
            profile,
            tsp,
        );
    }

    let mut motion = MotionProfile::default();
    for k in 0..n {
        let (len, feed, v_in, v_out) = (lengths[k], feeds[k], junction[k], junction[k + 1]);
        if len == 0.0 {
            continue;
        }
        let d_acc = transition_distance(v_in, feed, profile);
        let d_dec = transition_distance(feed, v_out, profile);
        if d_acc + d_dec > len * (1.0 + 1e-12) {
            let floor = v_in.max(v_out);
            let fits = |v: f64| {
                transition_distance(v_in, v, profile) + transition_distance(v, v_out, profile)
                    <= len
            };
            let achievable = if !fits(floor) {
                floor.min(0.0)
            } else {
                let (mut lo, mut hi) = (floor, feed);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if fits(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            return Err(TrajectoryError::Infeasible {
                leg: k,
                requested: feed,
                achievable,
            });
        }
        let start_s = motion.length();
        motion.transition(feed, profile);
        motion.cruise(((len - d_acc - d_dec) / feed).max(0.0));
        motion.transition(v_out, profile);
        // absorb rounding so each leg ends exactly at its cumulative length
        motion.s = start_s + len;
    }

    let total = motion.duration();
    let count = (total / tsp - 1e-9).ceil().max(0.0) as usize + 1;
    let cum: Vec<f64> = std::iter::once(0.0)
        .chain(lengths.iter().scan(0.0, |acc, l| {
            *acc += l;
            Some(*acc)
        }))
        .collect();
    let total_len = cum[n];
    let point_at = |s: f64| -> Vec<f64> {
        let s = s.clamp(0.0, total_len);
        let k = cum[1..].partition_point(|&c| c < s).min(n - 1);
        prims[k].0.point(s - cum[k])
    };

    let dim = spec.axes.len();
    let mut per_axis = vec![Vec::with_capacity(count); dim];
    for i in 0..count {
        let t = i as f64 * tsp;
        let p = if t >= total {
            point_at(total_len)
        } else {
            point_at(motion.eval(t).0)
        };
        for (col, v) in per_axis.iter_mut().zip(p) {
            col.push(v);
        }
    }
    // a zero-length path still yields one sample at the start point
    if n > 0 && total == 0.0 {
        let p = prims[0].0.point(0.0);
        for (col, v) in per_axis.iter_mut().zip(p) {
            col[0] = v;
        }
    }

    let unit = si_position_unit(angular);
    let traces = per_axis
        .into_iter()
        .map(|data| Trace::new(tsp, 0.0)?.with("psec", unit, data))
        .collect::<Result<Vec<_>, _>>()?;
    let mut intervals = motion.accel_intervals();
    for t in motion.jump_times() {
        intervals.push((t, t));
    }
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Psec {
        axes: spec.axes.clone(),
        traces,
        accel_intervals: intervals,
        motion_end: total,
    })
}

/// Result of resampling an external path.
#[derive(Debug, Clone)]
pub struct Resampled {
    pub psec: Psec,
    /// Largest distance between an original sample and the resampled
    /// polyline, SI.
    pub max_displacement: f64,
}

fn interp(ts: &[f64], xs: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        return xs[0];
    }
    if t >= ts[ts.len() - 1] {
        return xs[xs.len() - 1];
    }
    let k = ts.partition_point(|&x| x <= t);
    let (t0, t1) = (ts[k - 1], ts[k]);
    xs[k - 1] + (xs[k] - xs[k - 1]) * (t - t0) / (t1 - t0)
}

/// Resamples position channels of `trace` (`psec.<axis>` or `sp.<axis>`,
/// or a bare `psec` for a single axis) to period `tsp` by linear interpolation.
pub fn resample_trace(
    trace: &Trace,
    axes: &[String],
    tsp: f64,
) -> Result<Resampled, TrajectoryError> {
    if trace.len() < 2 {
        return Err(TrajectoryError::Sampled("need at least two samples".into()));
    }
    let mut cols = Vec::new();
    let mut angular = None;
    for axis in axes {
        let chan = [format!("psec.{axis}"), format!("sp.{axis}")]
            .into_iter()
            .find_map(|n| trace.channel(&n))
            .or_else(|| (axes.len() == 1).then(|| trace.channel("psec")).flatten())
            .ok_or_else(|| TrajectoryError::Sampled(format!("missing channel for axis {axis}")))?;
        let ang = chan.unit.is_angular();
        if *angular.get_or_insert(ang) != ang {
            return Err(TrajectoryError::Sampled(
                "mixed linear and angular axes".into(),
            ));
        }
        let f = chan.unit.to_si();
        cols.push(chan.data.iter().map(|v| v * f).collect::<Vec<_>>());
    }
    let ts: Vec<f64> = (0..trace.len()).map(|k| trace.time(k)).collect();
    let span = ts[ts.len() - 1] - ts[0];
    let count = (span / tsp + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| ts[0] + k as f64 * tsp).collect();
    let out: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| grid.iter().map(|&t| interp(&ts, c, t)).collect())
        .collect();

    let t_grid: Vec<f64> = (0..count).map(|k| k as f64 * tsp).collect();
    let mut max_disp: f64 = 0.0;
    for (k, &t) in ts.iter().enumerate() {
        let d2: f64 = cols
            .iter()
            .zip(&out)
            .map(|(orig, res)| (orig[k] - interp(&t_grid, res, t - ts[0])).powi(2))
            .sum();
        max_disp = max_disp.max(d2.sqrt());
    }

    // commanded accelerations from the resampled path speed
    let speed: Vec<f64> = (0..count)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            out.iter()
                .map(|c| (c[k] - c[k - 1]).powi(2))
                .sum::<f64>()
                .sqrt()
                / tsp
        })
        .collect();
    let acc: Vec<f64> = crate::cascade::euler_d1(&speed, tsp);
    let amax = acc.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (k, a) in acc.iter().enumerate() {
        if a.abs() > 1e-3 * amax && amax > 0.0 {
            let t = k as f64 * tsp;
            match intervals.last_mut() {
                Some(last) if (t - last.1 - tsp).abs() < 1e-9 => last.1 = t,
                _ => intervals.push((t - tsp, t)),
            }
        }
    }
    let moving_until = (0..count)
        .rev()
        .find(|&k| speed[k] > 0.0)
        .map_or(0.0, |k| k as f64 * tsp);

    let unit = si_position_unit(angular.unwrap_or(false));
    let traces = out
        .into_iter()
        .map(|data| Trace::new(tsp, 0.0)?.with("psec", unit, data))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Resampled {
        psec: Psec {
            axes: axes.to_vec(),
            traces,
            accel_intervals: intervals,
            motion_end: moving_until,
        },
        max_displacement: max_disp,
    })
}

/// Reads a sampled path file (trace CSV) and resamples it to `tsp`.
pub fn ingest_sampled(
    path: &Path,
    axes: &[String],
    tsp: f64,
) -> Result<Resampled, TrajectoryError> {
    let trace = read_trace(path)?;
    resample_trace(&trace, axes, tsp)
}
