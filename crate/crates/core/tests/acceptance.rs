//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::*;
use feedsim::cascade::FeedforwardFlags;
use feedsim::engine::{compare, run, ControllerSpec, PathSource, Scenario};
use feedsim::gpc::{diophantine_chain, model_from_axis, synthesize_rst, CarimaModel, GpcTuning};
use feedsim::identification::{identify_axis, Stage};
use feedsim::params::DEFAULT_PLANT_STEP;
use feedsim::plant::friction_current;
use feedsim::trajectory::{Geometry, Psec};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timed(ok: bool, limit: Duration, t0: Instant, detail: String) -> Outcome {
    let took = t0.elapsed();
    check(
        ok && took < limit,
        format!(
            "{detail}; {:.2} s (limit {} s)",
            took.as_secs_f64(),
            limit.as_secs()
        ),
    )
}

fn friction_consistency() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for name in ["X", "Y", "Z"] {
        let f = axis(name).friction;
        let gap = (f.a + f.c - f.i0).abs() / f.i0;
        worst = worst.max(gap);
        parts.push(format!("{name} {:.4} vs {:.3}", f.a + f.c, f.i0));
    }
    timed(
        worst <= 5e-3,
        Duration::from_secs(1),
        t0,
        format!("{}; worst {:.3}%", parts.join(", "), worst * 100.0),
    )
}

fn friction_evaluation() -> Outcome {
    let oracle = 1.576 * (0.01965f64 * 10.0).exp() - 0.5332 * (-0.2801f64 * 10.0).exp();
    let p = axis("X");
    let i = friction_current(&p.friction, p.k_t, 10.0, 0.0);
    check(
        (i - oracle).abs() < 1e-3 && (i - 1.8858).abs() < 1e-3,
        format!("i(10 m/min) = {i:.5} A, oracle {oracle:.5} A"),
    )
}

fn x_segment(v: f64, flags: FeedforwardFlags) -> Scenario {
    let v = m_per_min(v);
    scenario(
        &["X"],
        Geometry::Segment {
            start: vec![0.0],
            end: vec![v * 1.5],
            feed: v,
        },
        feed(v, 1.0, 10.0),
    )
    .with_controller(ControllerSpec::Cascade(flags))
}

fn steady_state_law() -> Outcome {
    let kp = axis("X").k_p;
    let mut parts = Vec::new();
    let mut ok = true;
    for flags in [FeedforwardFlags::OFF, FeedforwardFlags::BOTH] {
        for v in [2.0, 6.0, 10.0] {
            let s = x_segment(v, flags);
            let t0 = Instant::now();
            let r = run(&s).map_err(|e| e.to_string())?;
            let took = t0.elapsed().as_secs_f64();
            let simulated = r.motion_end + 0.5;
            let (a, b) = (r.accel_intervals[0].1, r.accel_intervals[1].0);
            let x = &r.axes[0];
            let k = (((a + b) / 2.0 + x.reference_delay) / x.trace.dt()).round() as usize;
            let e = x.trace.channel("pos_err").unwrap().data[k];
            ok &= took < 10.0 && simulated <= 5.0;
            if flags == FeedforwardFlags::OFF {
                let expected = m_per_min(v) / kp;
                let dev = (e - expected).abs() / expected;
                ok &= dev <= 0.01;
                parts.push(format!("off {v}: {:.2}%", dev * 100.0));
            } else {
                ok &= e.abs() < 5e-6;
                parts.push(format!("on {v}: {:.1e} m", e));
            }
        }
    }
    check(ok, parts.join(", "))
}

fn identification_round_trip() -> Outcome {
    let t0 = Instant::now();
    let traces = round_trip_traces();
    let (q, _) = identify_axis(&traces, &wrong_start(), Stage::All, DEFAULT_PLANT_STEP)
        .map_err(|e| e.to_string())?;
    let truth = axis("X").friction;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let fr = [
        rel(q.friction.a, truth.a),
        rel(q.friction.b, truth.b),
        rel(q.friction.c, truth.c),
        rel(q.friction.d, truth.d),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let j = rel(q.j_eq, 0.028);
    let ffw = rel(q.vffw, 1.0).max(rel(q.tffw, 0.002034));
    let delay = [q.alpha, q.beta, q.gamma]
        .iter()
        .map(|d| (d - 9e-3).abs())
        .fold(0.0, f64::max);
    timed(
        fr <= 5e-3 && j <= 0.02 && ffw <= 1e-3 && delay <= 25e-6,
        Duration::from_secs(120),
        t0,
        format!(
            "friction {:.2e}, J {:.2e}, FFW {:.2e} (relative); delays off by {:.1} us",
            fr,
            j,
            ffw,
            delay * 1e6
        ),
    )
}

fn gpc_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(5);
    let mut residual: f64 = 0.0;
    let mut invariant: f64 = 0.0;
    for _ in 0..100 {
        let m = random_stable_model(&mut rng);
        let at = pmul(&[1.0, -1.0], m.a());
        for p in diophantine_chain(&m, 40) {
            let mut lhs = pmul(&p.e, &at);
            lhs.resize(lhs.len().max(p.j + p.f.len()), 0.0);
            for (i, f) in p.f.iter().enumerate() {
                lhs[p.j + i] += f;
            }
            lhs[0] -= 1.0;
            residual = lhs.iter().fold(residual, |m, v| m.max(v.abs()));
        }
        let n2 = rng.random_range(1..=40);
        let n1 = rng.random_range(1..=n2.min(5));
        let t = GpcTuning {
            n1,
            n2,
            nu: rng.random_range(1..=(n2 - n1 + 1).min(10)),
            lambda: 10f64.powf(rng.random_range(-2.0..1.0)),
        };
        let rst = synthesize_rst(&m, &t).map_err(|e| e.to_string())?.rst;
        invariant = invariant
            .max(rst.s_at_one().abs())
            .max((rst.t_at_one() - rst.r_at_one()).abs());
    }
    let am = model_from_axis(&axis("X"), DEFAULT_PLANT_STEP).map_err(|e| e.to_string())?;
    let t = GpcTuning::default();
    let rst = synthesize_rst(&am.model, &t)
        .map_err(|e| e.to_string())?
        .rst;
    invariant = invariant
        .max(rst.s_at_one().abs())
        .max((rst.t_at_one() - rst.r_at_one()).abs());
    let online = receding_horizon(&am.model, &t, &reference, 200);
    let offline = rst_loop(&am.model, &rst, &reference, 200);
    let gap = max_gap(&online, &offline) / online.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let db = synthesize_rst(
        &CarimaModel::integrator(TSP),
        &GpcTuning {
            n1: 1,
            n2: 1,
            nu: 1,
            lambda: 0.0,
        },
    )
    .map_err(|e| e.to_string())?
    .rst;
    let dead_beat = db.r == [2.0, -1.0] && db.s == [1.0, -1.0] && db.t == [0.0, 1.0];
    timed(residual < 1e-12 && invariant < 1e-9 && gap < 1e-9 && dead_beat, Duration::from_secs(30), t0, format!(
            "(a) residual {residual:.1e}; (b) invariants {invariant:.1e}; (c) online gap {gap:.1e}; (d) dead-beat {}",
            if dead_beat { "exact" } else { "wrong" }
        ))
}

fn controller_comparison() -> Outcome {
    let t0 = Instant::now();
    let c = compare(
        &circle150(),
        ControllerSpec::Cascade(FeedforwardFlags::BOTH),
        ControllerSpec::Rst(GpcTuning::default()),
    )
    .map_err(|e| e.to_string())?;
    timed(
        c.ratio <= 0.10 && !c.cascade.saturated() && !c.rst.saturated(),
        Duration::from_secs(60),
        t0,
        format!(
            "cascade {:.2} um, RST {:.2} um, ratio {:.4}",
            c.cascade.metrics.tracking.max * 1e6,
            c.rst.metrics.tracking.max * 1e6,
            c.ratio
        ),
    )
}

fn peak_localization() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, s) in cases() {
        let r = run(&s).map_err(|e| e.to_string())?;
        let (k, inside) = peak_in_transient(&r);
        ok &= inside;
        parts.push(format!(
            "{} peak at {:.3} s {}",
            &name[..6],
            r.axes[0].trace.time(k),
            if inside { "in" } else { "OUT" }
        ));
    }
    check(ok, parts.join(", "))
}

fn determinism_and_independence() -> Outcome {
    let s = circle150();
    let a = run(&s).map_err(|e| e.to_string())?;
    let b = run(&s).map_err(|e| e.to_string())?;
    let repeat = a.axes.iter().zip(&b.axes).all(|(x, y)| x.trace == y.trace);
    let psec = s.psec().map_err(|e| e.to_string())?;
    let mut independent = true;
    for (k, name) in psec.axes.iter().enumerate() {
        let mut one = s.clone();
        one.source = PathSource::Sampled(Psec {
            axes: vec![name.clone()],
            traces: vec![psec.traces[k].clone()],
            accel_intervals: psec.accel_intervals.clone(),
            motion_end: psec.motion_end,
        });
        let r = run(&one).map_err(|e| e.to_string())?;
        independent &= r.axes[0].trace == a.axis(name).unwrap().trace;
    }
    check(
        repeat && independent,
        format!("repeat bit-identical: {repeat}; multi-axis equals single-axis: {independent}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("friction table consistency", friction_consistency),
        ("friction evaluation", friction_evaluation),
        ("cascade steady-state law", steady_state_law),
        ("identification round trip", identification_round_trip),
        ("GPC correctness", gpc_correctness),
        ("controller comparison on the circle", controller_comparison),
        ("peak-error localization", peak_localization),
        (
            "determinism and axis independence",
            determinism_and_independence,
        ),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {}: PASS  {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {d}", k + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
