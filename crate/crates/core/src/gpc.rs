//! Generalized predictive control synthesis of an RST position controller.
//!
//! Conventions: polynomials are coefficient vectors in the backward shift
//! `z⁻¹` (index = power), except `T` whose index is the FORWARD shift, so
//! `t[j]` weights the reference `j` periods ahead. The model is
//! `A(z⁻¹)·y(t) = B(z⁻¹)·u(t)` with `B[0] = 0` (at least one period of dead
//! time). The control signal `u` is the commanded axis displacement per
//! position period (velocity setpoint × t_sp), so a pure integrator is
//! `A = 1 − z⁻¹`, `B = z⁻¹` and λ is dimensionless.

use std::collections::VecDeque;

use nalgebra::Complex;
use nalgebra::{DMatrix, DVector};

type Complex64 = Complex<f64>;
use thiserror::Error;

use crate::cascade::{CurrentLoop, Schedule, VelocityLoop};
use crate::params::AxisParameters;
use crate::plant::{plant_step, PlantState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpcError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid tuning: {0}")]
    InvalidTuning(String),
    #[error("normal equations are ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("reference window holds {got} samples, the controller needs {required} (horizon n2 = {horizon})")]
    InsufficientWindow {
        required: usize,
        got: usize,
        horizon: usize,
    },
    #[error("velocity-loop model fit failed: {0}")]
    Fit(String),
}

/// Largest accepted condition number of `GᵀG + λI`.
pub const MAX_CONDITION: f64 = 1e12;

pub mod poly {
    //! Polynomial arithmetic on coefficient vectors.

    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len().max(b.len())];
        for (i, x) in a.iter().enumerate() {
            out[i] += x;
        }
        for (i, y) in b.iter().enumerate() {
            out[i] += y;
        }
        out
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        let neg: Vec<f64> = b.iter().map(|v| -v).collect();
        add(a, &neg)
    }

    /// Multiplies by `z⁻ⁿ`.
    pub fn shift(a: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        out.extend_from_slice(a);
        out
    }

    pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
        a.iter().map(|v| v * k).collect()
    }

    /// Value at `z = 1`.
    pub fn at_one(a: &[f64]) -> f64 {
        a.iter().sum()
    }

    /// `1 − z⁻¹`.
    pub const DELTA: [f64; 2] = [1.0, -1.0];

    pub fn max_abs(a: &[f64]) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `A(z⁻¹)·y = B(z⁻¹)·u` sampled at `t_sp`.
#[derive(Debug, Clone, PartialEq)]
pub struct CarimaModel {
    a: Vec<f64>,
    b: Vec<f64>,
    t_sp: f64,
}

impl CarimaModel {
    pub fn new(a: Vec<f64>, b: Vec<f64>, t_sp: f64) -> Result<Self, GpcError> {
        if a.first() != Some(&1.0) {
            return Err(GpcError::InvalidModel("A must be monic".into()));
        }
        if b.iter().all(|v| *v == 0.0) {
            return Err(GpcError::InvalidModel("B is identically zero".into()));
        }
        if b[0] != 0.0 {
            return Err(GpcError::InvalidModel(
                "B must start with a zero (the controller needs one period of dead time)".into(),
            ));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(GpcError::InvalidModel("non-finite coefficient".into()));
        }
        if !(t_sp > 0.0) {
            return Err(GpcError::InvalidModel(
                "sampling period must be positive".into(),
            ));
        }
        Ok(CarimaModel { a, b, t_sp })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn t_sp(&self) -> f64 {
        self.t_sp
    }

    pub fn deg_a(&self) -> usize {
        self.a.len() - 1
    }

    pub fn deg_b(&self) -> usize {
        self.b.len() - 1
    }

    /// Unit-gain integrator `A = 1 − z⁻¹`, `B = z⁻¹`.
    pub fn integrator(t_sp: f64) -> Self {
        CarimaModel::new(vec![1.0, -1.0], vec![0.0, 1.0], t_sp).expect("integrator is valid")
    }

    /// Zero-order-hold discretization of `1 / (s·(τs + 1))` at `t_sp`, with
    /// `u` the input integrated over one period. `τ = 0` gives the integrator.
    pub fn lag_integrator(tau: f64, t_sp: f64) -> Result<Self, GpcError> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(GpcError::InvalidModel(format!(
                "time constant must be >= 0, got {tau}"
            )));
        }
        if tau == 0.0 {
            return Ok(Self::integrator(t_sp));
        }
        let t = t_sp;
        let a = (-t / tau).exp();
        let b1 = (t - tau * (1.0 - a)) / t;
        let b2 = (tau * (1.0 - a) - t * a) / t;
        CarimaModel::new(vec![1.0, -(1.0 + a), a], vec![0.0, b1, b2], t_sp)
    }

    /// Steps the model once: `y(t)` from past outputs `ys[k] = y(t−1−k)` and
    /// inputs `us[k] = u(t−k)`.
    pub fn output(&self, ys: &[f64], us: &[f64]) -> f64 {
        let mut y = 0.0;
        for (k, b) in self.b.iter().enumerate() {
            y += b * us.get(k).copied().unwrap_or(0.0);
        }
        for (k, a) in self.a.iter().enumerate().skip(1) {
            y -= a * ys.get(k - 1).copied().unwrap_or(0.0);
        }
        y
    }
}

/// Prediction horizons and weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpcTuning {
    pub n1: usize,
    pub n2: usize,
    pub nu: usize,
    pub lambda: f64,
}

impl Default for GpcTuning {
    fn default() -> Self {
        GpcTuning {
            n1: 1,
            n2: 10,
            nu: 3,
            lambda: 10.0,
        }
    }
}

impl GpcTuning {
    pub fn validate(&self) -> Result<(), GpcError> {
        let bad = |m: String| Err(GpcError::InvalidTuning(m));
        if self.n1 < 1 || self.n1 > self.n2 {
            return bad(format!(
                "need 1 <= n1 <= n2, got n1 = {}, n2 = {}",
                self.n1, self.n2
            ));
        }
        if self.nu < 1 || self.nu > self.n2 - self.n1 + 1 {
            return bad(format!("need 1 <= nu <= n2 - n1 + 1, got nu = {}", self.nu));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        Ok(())
    }
}

/// j-step predictor: `1 = E_j·Δ·A + z⁻ʲ·F_j`, and `E_j·B' = G_j + z⁻ʲ·H_j`
/// where `B = z⁻¹·B'`. `G_j` has degree `j − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub j: usize,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

/// Predictor polynomials for `j = 1..=j_max`.
pub fn diophantine_chain(m: &CarimaModel, j_max: usize) -> Vec<Predictor> {
    let at = poly::mul(&poly::DELTA, &m.a);
    let na = at.len() - 1;
    let b_prime = &m.b[1..];
    let mut e = vec![1.0];
    let mut f: Vec<f64> = (0..na).map(|i| -at[i + 1]).collect();
    let mut out = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let eb = poly::mul(&e, b_prime);
        let g: Vec<f64> = (0..j).map(|i| eb.get(i).copied().unwrap_or(0.0)).collect();
        let h: Vec<f64> = eb.iter().skip(j).copied().collect();
        out.push(Predictor {
            j,
            e: e.clone(),
            f: f.clone(),
            g,
            h,
        });
        let f0 = f[0];
        e.push(f0);
        f = (0..na)
            .map(|i| f.get(i + 1).copied().unwrap_or(0.0) - f0 * at[i + 1])
            .collect();
    }
    out
}

/// `‖1 − (E·Δ·A + z⁻ʲ·F)‖∞` for one predictor.
pub fn reconstruction_residual(m: &CarimaModel, p: &Predictor) -> f64 {
    let at = poly::mul(&poly::DELTA, &m.a);
    let lhs = poly::add(&poly::mul(&p.e, &at), &poly::shift(&p.f, p.j));
    poly::max_abs(&poly::sub(&[1.0], &lhs))
}

/// `S(q⁻¹)·u(t) = −R(q⁻¹)·y(t) + T(q)·w(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RstPolynomials {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Forward-shift coefficients: `t[j]` weights `w(t + j)`.
    pub t: Vec<f64>,
    pub t_sp: f64,
}

impl RstPolynomials {
    pub fn r_at_one(&self) -> f64 {
        poly::at_one(&self.r)
    }

    pub fn s_at_one(&self) -> f64 {
        poly::at_one(&self.s)
    }

    pub fn t_at_one(&self) -> f64 {
        poly::at_one(&self.t)
    }

    /// Reference samples needed per tick: `w(t) .. w(t + n2)`.
    pub fn window(&self) -> usize {
        self.t.len()
    }

    pub fn check_invariants(&self, tol: f64) -> Result<(), String> {
        if self.s.first() != Some(&1.0) {
            return Err("S is not monic".into());
        }
        if self.s_at_one().abs() > tol {
            return Err(format!("S(1) = {} (no integral action)", self.s_at_one()));
        }
        let (r1, t1) = (self.r_at_one(), self.t_at_one());
        if (r1 - t1).abs() > tol * (1.0 + r1.abs()) {
            return Err(format!("T(1) = {t1} differs from R(1) = {r1}"));
        }
        Ok(())
    }
}

/// Synthesis output with its numerical diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub rst: RstPolynomials,
    /// First row of `(GᵀG + λI)⁻¹Gᵀ`, indexed by `j − n1`.
    pub gains: Vec<f64>,
    pub condition: f64,
}

/// Dynamic matrix: rows `j = n1..=n2`, columns the `nu` future increments.
pub fn prediction_matrix(chain: &[Predictor], t: &GpcTuning) -> DMatrix<f64> {
    let rows = t.n2 - t.n1 + 1;
    DMatrix::from_fn(rows, t.nu, |r, c| {
        let j = t.n1 + r;
        let g = &chain[j - 1].g;
        if c < j {
            g[j - 1 - c]
        } else {
            0.0
        }
    })
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn synthesize_rst(m: &CarimaModel, t: &GpcTuning) -> Result<Synthesis, GpcError> {
    t.validate()?;
    let chain = diophantine_chain(m, t.n2);
    let g = prediction_matrix(&chain, t);
    let normal = g.transpose() * &g + DMatrix::identity(t.nu, t.nu) * t.lambda;
    let condition = condition_number(&normal);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(GpcError::IllConditioned { condition });
    }
    let inv = normal.try_inverse().ok_or(GpcError::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let k = inv * g.transpose();
    let gains: Vec<f64> = k.row(0).iter().copied().collect();

    let mut r = Vec::new();
    let mut hsum = Vec::new();
    let mut tt = vec![0.0; t.n2 + 1];
    for (idx, gamma) in gains.iter().enumerate() {
        let p = &chain[t.n1 + idx - 1];
        r = poly::add(&r, &poly::scale(&p.f, *gamma));
        hsum = poly::add(&hsum, &poly::scale(&p.h, *gamma));
        tt[p.j] += gamma;
    }
    let s = poly::mul(&poly::DELTA, &poly::add(&[1.0], &poly::shift(&hsum, 1)));
    Ok(Synthesis {
        rst: RstPolynomials {
            r,
            s,
            t: tt,
            t_sp: m.t_sp,
        },
        gains,
        condition,
    })
}

/// Runs the difference equation one position period at a time.
#[derive(Debug, Clone)]
pub struct RstController {
    rst: RstPolynomials,
    /// `y(t), y(t−1), …`
    ys: VecDeque<f64>,
    /// `u(t−1), u(t−2), …`
    us: VecDeque<f64>,
}

impl RstController {
    /// History initialised at rest at `y0`.
    pub fn new(rst: RstPolynomials, y0: f64) -> Self {
        let ys = std::iter::repeat_n(y0, rst.r.len().max(1)).collect();
        let us = std::iter::repeat_n(0.0, rst.s.len().saturating_sub(1)).collect();
        RstController { rst, ys, us }
    }

    pub fn polynomials(&self) -> &RstPolynomials {
        &self.rst
    }

    /// `refs[j] = w(t + j)`; returns `u(t)`.
    pub fn tick(&mut self, refs: &[f64], y: f64) -> Result<f64, GpcError> {
        rst_tick(&self.rst, refs, y, &mut self.ys, &mut self.us)
    }
}

/// Solves the RST difference equation for `u(t)` and updates the histories.
pub fn rst_tick(
    rst: &RstPolynomials,
    refs: &[f64],
    y: f64,
    ys: &mut VecDeque<f64>,
    us: &mut VecDeque<f64>,
) -> Result<f64, GpcError> {
    if refs.len() < rst.t.len() {
        return Err(GpcError::InsufficientWindow {
            required: rst.t.len(),
            got: refs.len(),
            horizon: rst.t.len() - 1,
        });
    }
    ys.push_front(y);
    ys.truncate(rst.r.len().max(1));
    let mut u = 0.0;
    for (j, tj) in rst.t.iter().enumerate() {
        u += tj * refs[j];
    }
    for (i, ri) in rst.r.iter().enumerate() {
        u -= ri * ys.get(i).copied().unwrap_or(0.0);
    }
    for (i, si) in rst.s.iter().enumerate().skip(1) {
        u -= si * us.get(i - 1).copied().unwrap_or(0.0);
    }
    us.push_front(u);
    us.truncate(rst.s.len().saturating_sub(1));
    Ok(u)
}

/// Optimal single-shot cost from rest for a unit reference step:
/// `min Σ (ŷ − w)² + λ Σ Δu²` over the horizons. Non-decreasing in λ.
pub fn step_test_cost(m: &CarimaModel, t: &GpcTuning) -> Result<f64, GpcError> {
    t.validate()?;
    let chain = diophantine_chain(m, t.n2);
    let g = prediction_matrix(&chain, t);
    let rows = t.n2 - t.n1 + 1;
    // free response from rest at zero is zero; the target is the unit step
    let w = DVector::from_element(rows, 1.0);
    let normal = g.transpose() * &g + DMatrix::identity(t.nu, t.nu) * t.lambda;
    let du = normal
        .lu()
        .solve(&(g.transpose() * &w))
        .ok_or(GpcError::IllConditioned {
            condition: f64::INFINITY,
        })?;
    let e = &g * &du - w;
    Ok(e.norm_squared() + t.lambda * du.norm_squared())
}

/// Open-loop stability margins of `B·R / (A·S)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// Gain margin (ratio) at the first phase crossover above the gain
    /// crossover, `None` if the phase never crosses −180° there.
    pub gain_margin: Option<f64>,
    /// Phase margin, degrees, at the first gain crossover.
    pub phase_margin: Option<f64>,
    /// Gain-crossover frequency, rad/s.
    pub crossover: Option<f64>,
}

fn eval_backward(p: &[f64], zinv: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * zinv + c)
}

pub fn stability_margins(m: &CarimaModel, rst: &RstPolynomials) -> Margins {
    let num = poly::mul(&m.b, &rst.r);
    let den = poly::mul(&m.a, &rst.s);
    let nyquist = std::f64::consts::PI / m.t_sp;
    let n = 20000;
    let w0 = nyquist * 1e-4;
    let freqs: Vec<f64> = (0..n)
        .map(|k| w0 * (nyquist / w0).powf(k as f64 / (n - 1) as f64))
        .collect();
    let mut mags = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut prev = None;
    for &w in &freqs {
        let zinv = Complex64::from_polar(1.0, -w * m.t_sp);
        let l = eval_backward(&num, zinv) / eval_backward(&den, zinv);
        let mut ph = l.arg();
        if let Some(p) = prev {
            while ph - p > std::f64::consts::PI {
                ph -= 2.0 * std::f64::consts::PI;
            }
            while ph - p < -std::f64::consts::PI {
                ph += 2.0 * std::f64::consts::PI;
            }
        }
        prev = Some(ph);
        mags.push(l.norm());
        phases.push(ph);
    }
    let mut out = Margins {
        gain_margin: None,
        phase_margin: None,
        crossover: None,
    };
    let mut start = 0;
    for k in 1..n {
        if mags[k - 1] >= 1.0 && mags[k] < 1.0 {
            out.phase_margin = Some(180.0 + phases[k].to_degrees());
            out.crossover = Some(freqs[k]);
            start = k;
            break;
        }
    }
    let minus_pi = |ph: f64| {
        let x = (ph + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
        x - x.round()
    };
    for k in (start + 1)..n {
        let (a, b) = (minus_pi(phases[k - 1]), minus_pi(phases[k]));
        if a.signum() != b.signum() && (a - b).abs() < 0.25 {
            out.gain_margin = Some(1.0 / mags[k]);
            break;
        }
    }
    out
}

/// Velocity-loop step response used to fit the lag of the prediction model.
#[derive(Debug, Clone)]
pub struct StepResponse {
    pub t_sp: f64,
    /// Normalised mean axis velocity over position period `k` (the period
    /// ending at `k·t_sp`), `(v̄_k − v0) / (v1 − v0)`, k = 1..
    pub samples: Vec<f64>,
}

/// Position periods covered by the fitted response.
pub const FIT_PERIODS: usize = 50;

/// Simulates the closed velocity + current loops for a speed-setpoint step
/// from `v0` to `v1` (axis velocity, SI) after settling at `v0`.
pub fn velocity_step_response(
    p: &AxisParameters,
    dt: f64,
    v0: f64,
    v1: f64,
) -> Result<StepResponse, GpcError> {
    let sched = Schedule::new(p, dt).map_err(|e| GpcError::Fit(e.to_string()))?;
    let mut vel = VelocityLoop::new(p);
    let mut cur = CurrentLoop::new(p);
    let mut s = PlantState::at_rest(p, 0.0);
    let (mut i_set, mut u) = (0.0, 0.0);
    let settle = (0.5 / p.t_sp).ceil() as u64 * sched.position as u64;
    let record = FIT_PERIODS as u64 * sched.position as u64;
    let mut samples = Vec::with_capacity(FIT_PERIODS);
    let mut last_pos = 0.0;
    for step in 0..(settle + record + 1) {
        let v_set = if step < settle { v0 } else { v1 };
        if step >= settle && (step - settle) % sched.position as u64 == 0 {
            let pos = s.axis_pos(p);
            if step > settle {
                samples.push(((pos - last_pos) / p.t_sp - v0) / (v1 - v0));
            }
            last_pos = pos;
        }
        if sched.velocity_fires(step) {
            i_set = vel.tick(v_set / p.transmission, s.omega, 0.0);
        }
        if sched.current_fires(step) {
            u = cur.tick(i_set, s.current);
        }
        s = plant_step(p, s, u, dt).map_err(|e| GpcError::Fit(e.to_string()))?;
    }
    Ok(StepResponse {
        t_sp: p.t_sp,
        samples,
    })
}

/// Mean of the lag response `1 − e^{−t/τ}` over period `k` (ending at `k·t_sp`).
pub fn lag_period_mean(tau: f64, t_sp: f64, k: usize) -> f64 {
    if tau == 0.0 {
        return 1.0;
    }
    let (t0, t1) = ((k - 1) as f64 * t_sp, k as f64 * t_sp);
    1.0 - tau / t_sp * ((-t0 / tau).exp() - (-t1 / tau).exp())
}

/// RMS deviation between the lag response and `r`, per period.
pub fn lag_fit_rms(r: &StepResponse, tau: f64) -> f64 {
    let n = r.samples.len() as f64;
    let sum: f64 = r
        .samples
        .iter()
        .enumerate()
        .map(|(k, v)| (lag_period_mean(tau, r.t_sp, k + 1) - v).powi(2))
        .sum();
    (sum / n).sqrt()
}

/// Fitted prediction model with its fit diagnostics.
#[derive(Debug, Clone)]
pub struct AxisModel {
    pub model: CarimaModel,
    pub tau: f64,
    /// RMS fit error as a fraction of the step size.
    pub fit_rms: f64,
    pub response: StepResponse,
}

/// Largest accepted fit error; beyond it the loop is not lag-like.
pub const MAX_FIT_RMS: f64 = 0.10;

/// Position-loop plant seen by the RST controller: the closed velocity loop
/// as a first-order lag fitted to a simulated step, times an integrator.
pub fn model_from_axis(p: &AxisParameters, dt: f64) -> Result<AxisModel, GpcError> {
    // a step between two non-zero speeds keeps friction on its smooth branch
    let unit = p.kind.velocity_to_si();
    let (v0, v1) = (2.0 * unit, 3.0 * unit);
    let response = velocity_step_response(p, dt, v0, v1)?;
    let last = &response.samples[response.samples.len() - 10..];
    if last
        .iter()
        .any(|v| !v.is_finite() || (v - 1.0).abs() > 0.02)
    {
        return Err(GpcError::Fit(format!(
            "velocity loop does not settle within {FIT_PERIODS} position periods (last normalised samples {last:?})"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 20.0 * p.t_sp);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (lag_fit_rms(&response, x1), lag_fit_rms(&response, x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = lag_fit_rms(&response, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = lag_fit_rms(&response, x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let fit_rms = lag_fit_rms(&response, tau);
    if fit_rms > MAX_FIT_RMS {
        return Err(GpcError::Fit(format!(
            "first-order lag fits the velocity step with RMS error {fit_rms:.3} > {MAX_FIT_RMS}"
        )));
    }
    Ok(AxisModel {
        model: CarimaModel::lag_integrator(tau, p.t_sp)?,
        tau,
        fit_rms,
        response,
    })
}
