#![allow(dead_code)]

use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{run, ControllerSpec, RunResult, Scenario};
use feedsim::gpc::{CarimaModel, GpcTuning};
use feedsim::io::bundled_profile;
use feedsim::trajectory::{FeedProfile, Geometry, PathSpec};
use feedsim::{AxisParameters, Trace};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

pub const TSP: f64 = 0.006;

pub fn m_per_min(v: f64) -> f64 {
    v / 60.0
}

pub fn rpm(v: f64) -> f64 {
    v * 2.0 * std::f64::consts::PI / 60.0
}

pub fn axis(name: &str) -> AxisParameters {
    bundled_profile().axis(name).unwrap().clone()
}

pub fn feed(max_feed: f64, max_accel: f64, max_jerk: f64) -> FeedProfile {
    FeedProfile {
        max_feed,
        max_accel,
        max_jerk,
    }
}

pub fn scenario(axes: &[&str], geometry: Geometry, profile: FeedProfile) -> Scenario {
    Scenario::new(
        "test",
        bundled_profile().clone(),
        PathSpec {
            axes: axes.iter().map(|a| a.to_string()).collect(),
            geometry,
        },
        profile,
    )
}

/// Cases 1-3: X constant feed, C two speeds, X back and forth.
pub fn cases() -> Vec<(&'static str, Scenario)> {
    let x_feed = m_per_min(10.0);
    let deg = std::f64::consts::PI / 180.0;
    vec![
        (
            "case 1 (X, 0-300 mm at 10 m/min)",
            scenario(
                &["X"],
                Geometry::Segment {
                    start: vec![0.0],
                    end: vec![0.3],
                    feed: x_feed,
                },
                feed(x_feed, 1.0, 10.0),
            ),
        ),
        (
            "case 2 (C, 0-130 deg at 18 rpm, 130-210 deg at 6 rpm)",
            scenario(
                &["C"],
                Geometry::TwoSpeed {
                    start: vec![0.0],
                    mid: vec![130.0 * deg],
                    end: vec![210.0 * deg],
                    v1: rpm(18.0),
                    v2: rpm(6.0),
                },
                feed(rpm(18.0), 10.0, 100.0),
            ),
        ),
        (
            "case 3 (X, 0-300-0 mm at 10 m/min)",
            scenario(
                &["X"],
                Geometry::BackAndForth {
                    start: vec![0.0],
                    end: vec![0.3],
                    feed: x_feed,
                },
                feed(x_feed, 1.0, 10.0),
            ),
        ),
    ]
}

/// Sample index of the largest |tracking error| and whether it lies in a
/// commanded acceleration interval shifted by the reference delay.
pub fn peak_in_transient(r: &RunResult) -> (usize, bool) {
    let k = r.metrics.tracking.argmax;
    (k, r.in_transient(k, 0.0))
}

pub fn circle150() -> Scenario {
    let v = m_per_min(15.0);
    scenario(
        &["X", "Y"],
        Geometry::Circle {
            center: [0.0, 0.0],
            radius: 0.15,
            feed: v,
        },
        feed(v, 1.0, 10.0),
    )
}

fn x_run(g: Geometry, flags: FeedforwardFlags, full_rate: bool) -> Trace {
    let mut s = scenario(&["X"], g, feed(m_per_min(18.0), 1.0, 10.0))
        .with_controller(ControllerSpec::Cascade(flags));
    s.options.full_rate = full_rate;
    run(&s).unwrap().axes.remove(0).trace
}

/// Recorded X-axis runs for the identification chain: the Case 1 segment with
/// each feedforward setting, a two-speed segment and the back-and-forth
/// (all at plant rate), plus a sweep over 13 constant speeds at t_sp.
pub fn round_trip_traces() -> Vec<Trace> {
    let v = m_per_min(10.0);
    let seg = Geometry::Segment {
        start: vec![0.0],
        end: vec![0.3],
        feed: v,
    };
    let two = Geometry::TwoSpeed {
        start: vec![0.0],
        mid: vec![0.2],
        end: vec![0.3],
        v1: v,
        v2: m_per_min(4.0),
    };
    let bf = Geometry::BackAndForth {
        start: vec![0.0],
        end: vec![0.3],
        feed: v,
    };
    let mut points = vec![vec![0.0]];
    let mut feeds = vec![];
    for s in [
        0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 18.0,
    ] {
        let s = m_per_min(s);
        // long enough to accelerate, settle and hold
        let leg = s * 0.8 + s * s + 0.005;
        points.push(vec![leg]);
        points.push(vec![0.0]);
        feeds.extend([s, s]);
    }
    let sweep = Geometry::Polyline { points, feeds };
    vec![
        x_run(seg.clone(), FeedforwardFlags::OFF, true),
        x_run(seg.clone(), FeedforwardFlags::VELOCITY, true),
        x_run(seg, FeedforwardFlags::BOTH, true),
        x_run(two, FeedforwardFlags::BOTH, true),
        x_run(bf, FeedforwardFlags::BOTH, true),
        x_run(sweep, FeedforwardFlags::BOTH, false),
    ]
}

/// X-axis parameters with everything the chain identifies set wrong.
pub fn wrong_start() -> AxisParameters {
    let mut p = axis("X");
    p.friction = feedsim::FrictionParams::frictionless();
    p.j_eq = 0.05;
    p.vffw = 0.5;
    p.tffw = 0.0;
    p.alpha = 0.0;
    p.beta = 0.0;
    p.gamma = 0.0;
    p
}

// ------------------------------------------------------------ polynomials

pub fn pmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Random model with real poles inside the unit circle and `b0 = 0`.
pub fn random_stable_model(rng: &mut StdRng) -> CarimaModel {
    let na = rng.random_range(1..=3);
    let mut a = vec![1.0];
    for _ in 0..na {
        let p: f64 = rng.random_range(-0.95..0.95);
        a = pmul(&a, &[1.0, -p]);
    }
    let nb = rng.random_range(1..=3);
    let mut b = vec![0.0, rng.random_range(0.2..1.0)];
    for _ in 1..nb {
        b.push(rng.random_range(-0.5..0.5));
    }
    CarimaModel::new(a, b, TSP).unwrap()
}

// ------------------------------------------------------- receding horizon

fn model_step(m: &CarimaModel, ys: &[f64], us: &[f64], t: usize) -> f64 {
    // y(t) = Σ b_k u(t-k) - Σ a_k y(t-k), zero before t = 0; b_0 = 0 so u(t) is never needed
    let at = |v: &[f64], k: isize| {
        if k < 0 {
            0.0
        } else {
            v.get(k as usize).copied().unwrap_or(0.0)
        }
    };
    let mut y = 0.0;
    for (k, b) in m.b().iter().enumerate() {
        y += b * at(us, t as isize - k as isize);
    }
    for (k, a) in m.a().iter().enumerate().skip(1) {
        y -= a * at(ys, t as isize - k as isize);
    }
    y
}

/// Closed loop of the nominal model under a controller that, at every tick,
/// solves the finite-horizon quadratic problem numerically and applies the
/// first move. Returns the control sequence.
pub fn receding_horizon(
    m: &CarimaModel,
    tuning: &GpcTuning,
    w: &dyn Fn(usize) -> f64,
    steps: usize,
) -> Vec<f64> {
    let (n1, n2, nu, lambda) = (tuning.n1, tuning.n2, tuning.nu, tuning.lambda);
    // unit-step response of the model from rest
    let mut sy = Vec::new();
    let su = vec![1.0; n2 + 1];
    for t in 0..=n2 {
        let y = model_step(m, &sy, &su, t);
        sy.push(y);
    }
    let mut ys: Vec<f64> = Vec::new();
    let mut us: Vec<f64> = Vec::new();
    for t in 0..steps {
        let y = model_step(m, &ys, &us, t);
        ys.push(y);
        let u_prev = us.last().copied().unwrap_or(0.0);
        // free response: input held at u(t-1)
        let mut fy = ys.clone();
        let mut fu = us.clone();
        for j in 1..=n2 {
            fu.push(u_prev);
            let y = model_step(m, &fy, &fu, t + j);
            fy.push(y);
        }
        let rows = n2 - n1 + 1;
        let mut g = DMatrix::zeros(rows + nu, nu);
        let mut rhs = DVector::zeros(rows + nu);
        for r in 0..rows {
            let j = n1 + r;
            for c in 0..nu.min(j) {
                g[(r, c)] = sy[j - c];
            }
            rhs[r] = w(t + j) - fy[t + j];
        }
        for c in 0..nu {
            g[(rows + c, c)] = lambda.sqrt();
        }
        let du = g.svd(true, true).solve(&rhs, 1e-14).unwrap();
        us.push(u_prev + du[0]);
    }
    us
}

/// The same loop driven by an RST controller.
pub fn rst_loop(
    m: &CarimaModel,
    rst: &feedsim::gpc::RstPolynomials,
    w: &dyn Fn(usize) -> f64,
    steps: usize,
) -> Vec<f64> {
    let mut c = feedsim::gpc::RstController::new(rst.clone(), 0.0);
    let mut ys: Vec<f64> = Vec::new();
    let mut us: Vec<f64> = Vec::new();
    for t in 0..steps {
        let y = model_step(m, &ys, &us, t);
        ys.push(y);
        let refs: Vec<f64> = (0..rst.window()).map(|j| w(t + j)).collect();
        us.push(c.tick(&refs, y).unwrap());
    }
    us
}

pub fn reference(k: usize) -> f64 {
    let t = k as f64;
    let step = if k >= 20 { 1.0 } else { 0.0 };
    step + 0.01 * t.min(120.0) + 0.3 * (0.07 * t).sin()
}

pub fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
