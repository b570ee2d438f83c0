//! The industrial cascade: proportional position loop, PI velocity loop,
//! PI current loop, velocity/torque feedforward and the three adjustment
//! delays, each loop running at its own cycle time.

use std::collections::VecDeque;

use thiserror::Error;

use crate::params::AxisParameters;

/// Backward-difference first derivative, `(x[k] - x[k-1]) / tps`, with
/// `x[-1] = x[0]`.
pub fn euler_d1(x: &[f64], tps: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let prev = if k == 0 { x[0] } else { x[k - 1] };
            (x[k] - prev) / tps
        })
        .collect()
}

/// Backward-difference second derivative, `(x[k] - 2x[k-1] + x[k-2]) / tps²`,
/// with samples before the start held at `x[0]`.
pub fn euler_d2(x: &[f64], tps: f64) -> Vec<f64> {
    let at = |k: isize| x[k.max(0) as usize];
    (0..x.len() as isize)
        .map(|k| (at(k) - 2.0 * at(k - 1) + at(k - 2)) / (tps * tps))
        .collect()
}

/// Which feedforward paths are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeedforwardFlags {
    pub velocity: bool,
    pub torque: bool,
}

impl FeedforwardFlags {
    pub const OFF: FeedforwardFlags = FeedforwardFlags {
        velocity: false,
        torque: false,
    };
    pub const VELOCITY: FeedforwardFlags = FeedforwardFlags {
        velocity: true,
        torque: false,
    };
    pub const BOTH: FeedforwardFlags = FeedforwardFlags {
        velocity: true,
        torque: true,
    };
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("{name} = {value} s is not an integer multiple of the plant step {dt} s")]
    NotAMultiple {
        name: &'static str,
        value: f64,
        dt: f64,
    },
    #[error("loop periods must nest: t_si <= t_sv <= t_sp")]
    NotNested,
}

fn steps(name: &'static str, value: f64, dt: f64) -> Result<usize, ScheduleError> {
    AxisParameters::steps_of(value, dt).ok_or(ScheduleError::NotAMultiple { name, value, dt })
}

/// Loop periods and delays expressed in plant steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub position: usize,
    pub velocity: usize,
    pub current: usize,
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
}

impl Schedule {
    pub fn new(p: &AxisParameters, dt: f64) -> Result<Self, ScheduleError> {
        let s = Schedule {
            position: steps("t_sp", p.t_sp, dt)?,
            velocity: steps("t_sv", p.t_sv, dt)?,
            current: steps("t_si", p.t_si, dt)?,
            alpha: steps("alpha", p.alpha, dt)?,
            beta: steps("beta", p.beta, dt)?,
            gamma: steps("gamma", p.gamma, dt)?,
        };
        if s.position == 0
            || s.velocity == 0
            || s.current == 0
            || s.current > s.velocity
            || s.velocity > s.position
        {
            return Err(ScheduleError::NotNested);
        }
        Ok(s)
    }

    pub fn position_fires(&self, step: u64) -> bool {
        step % self.position as u64 == 0
    }

    pub fn velocity_fires(&self, step: u64) -> bool {
        step % self.velocity as u64 == 0
    }

    pub fn current_fires(&self, step: u64) -> bool {
        step % self.current as u64 == 0
    }
}

/// Pure transport delay at plant-step resolution.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: VecDeque<f64>,
}

impl DelayLine {
    /// A line of `steps` samples, pre-filled with `initial`.
    pub fn new(steps: usize, initial: f64) -> Self {
        DelayLine {
            buf: std::iter::repeat_n(initial, steps).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Pushes `x` and returns the sample from `len()` pushes ago.
    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.is_empty() {
            return x;
        }
        self.buf.push_back(x);
        self.buf.pop_front().unwrap()
    }
}

/// PI law `K·(e + (1/T)·∫e dt)` with output clamp and conditional
/// integration: the integral is frozen while the output is clamped and the
/// error would push further into the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pi {
    pub gain: f64,
    pub integration_time: f64,
    pub period: f64,
    pub limit: f64,
    integral: f64,
    saturated: bool,
}

impl Pi {
    pub fn new(gain: f64, integration_time: f64, period: f64, limit: f64) -> Self {
        Pi {
            gain,
            integration_time,
            period,
            limit,
            integral: 0.0,
            saturated: false,
        }
    }

    /// ∫e dt accumulated so far.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    /// Output for error `e` plus an additive feedforward `ff`, then integrates `e`.
    pub fn tick(&mut self, e: f64, ff: f64) -> f64 {
        let raw = self.gain * (e + self.integral / self.integration_time) + ff;
        let out = raw.clamp(-self.limit, self.limit);
        self.saturated = out != raw;
        if !self.saturated || e.signum() != raw.signum() {
            self.integral += e * self.period;
        }
        out
    }
}

/// Proportional position loop with optional velocity feedforward.
///
/// `psec_delayed` and `measured_pos` are axis positions (SI), `vffw_term` the
/// β-delayed setpoint derivative (axis velocity, SI) or `None` when the
/// velocity feedforward is off. Returns the motor speed setpoint, rad/s.
pub fn position_tick(
    p: &AxisParameters,
    psec_delayed: f64,
    measured_pos: f64,
    vffw_term: Option<f64>,
) -> f64 {
    let ff = vffw_term.map_or(0.0, |v| p.vffw * v);
    (p.k_p * (psec_delayed - measured_pos) + ff) / p.transmission
}

/// PI velocity loop in torque units, divided by K_t to give a current setpoint.
#[derive(Debug, Clone, Copy)]
pub struct VelocityLoop {
    pi: Pi,
    k_t: f64,
}

impl VelocityLoop {
    pub fn new(p: &AxisParameters) -> Self {
        VelocityLoop {
            pi: Pi::new(p.k_v, p.t_v, p.t_sv, p.current_limit * p.k_t),
            k_t: p.k_t,
        }
    }

    /// `tffw_torque` is the γ-delayed torque feedforward, N·m.
    pub fn tick(&mut self, v_setpoint: f64, measured_omega: f64, tffw_torque: f64) -> f64 {
        self.pi.tick(v_setpoint - measured_omega, tffw_torque) / self.k_t
    }

    pub fn saturated(&self) -> bool {
        self.pi.saturated()
    }

    pub fn pi(&self) -> &Pi {
        &self.pi
    }
}

/// Torque feedforward: TFFW times the setpoint acceleration mapped to the
/// motor shaft (axis acceleration / transmission), N·m.
pub fn tffw_torque(p: &AxisParameters, axis_accel: f64) -> f64 {
    p.tffw * axis_accel / p.transmission
}

/// PI current loop producing the armature voltage.
#[derive(Debug, Clone, Copy)]
pub struct CurrentLoop {
    pi: Pi,
}

impl CurrentLoop {
    pub fn new(p: &AxisParameters) -> Self {
        CurrentLoop {
            pi: Pi::new(p.k_i, p.t_i, p.t_si, p.voltage_limit),
        }
    }

    pub fn tick(&mut self, i_setpoint: f64, measured_i: f64) -> f64 {
        self.pi.tick(i_setpoint - measured_i, 0.0)
    }

    pub fn saturated(&self) -> bool {
        self.pi.saturated()
    }
}

/// Per-axis cascade state: the three delay lines, both PI loops and the
/// zero-order-held loop outputs.
#[derive(Debug, Clone)]
pub struct CascadeState {
    pub flags: FeedforwardFlags,
    pub alpha_line: DelayLine,
    pub beta_line: DelayLine,
    pub gamma_line: DelayLine,
    pub velocity: VelocityLoop,
    pub current: CurrentLoop,
    pub velocity_setpoint: f64,
    pub current_setpoint: f64,
    pub voltage: f64,
}

impl CascadeState {
    pub fn new(
        p: &AxisParameters,
        schedule: &Schedule,
        flags: FeedforwardFlags,
        initial_pos: f64,
    ) -> Self {
        CascadeState {
            flags,
            alpha_line: DelayLine::new(schedule.alpha, initial_pos),
            beta_line: DelayLine::new(schedule.beta, 0.0),
            gamma_line: DelayLine::new(schedule.gamma, 0.0),
            velocity: VelocityLoop::new(p),
            current: CurrentLoop::new(p),
            velocity_setpoint: 0.0,
            current_setpoint: 0.0,
            voltage: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::profile::bundled_profile;
    use proptest::prelude::*;

    fn x_axis() -> AxisParameters {
        bundled_profile().axis("X").unwrap().clone()
    }

    #[test]
    fn d1_of_ramp_and_constant() {
        assert_eq!(
            euler_d1(&[0.0, 1.0, 2.0, 3.0], 1.0),
            vec![0.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(euler_d1(&[4.0; 5], 0.5), vec![0.0; 5]);
        assert!(euler_d1(&[], 1.0).is_empty());
    }

    #[test]
    fn d1_of_quadratic_is_backward_difference() {
        // k t² sampled at T: (k (nT)² - k ((n-1)T)²)/T = k T (2n - 1), not 2 k n T
        let (k, tps) = (3.0, 0.1);
        let x: Vec<f64> = (0..10).map(|n| k * (n as f64 * tps).powi(2)).collect();
        let d = euler_d1(&x, tps);
        for n in 1..10 {
            let backward = k * tps * (2.0 * n as f64 - 1.0);
            let analytic = 2.0 * k * n as f64 * tps;
            assert!((d[n] - backward).abs() < 1e-12);
            assert!((d[n] - analytic).abs() > 0.1);
        }
    }

    #[test]
    fn d2_of_quadratic_and_ramp() {
        let (a, tps) = (2.5, 0.01);
        let x: Vec<f64> = (0..8).map(|n| 0.5 * a * (n as f64 * tps).powi(2)).collect();
        let d = euler_d2(&x, tps);
        for v in &d[2..] {
            assert!((v - a).abs() < 1e-9);
        }
        let ramp: Vec<f64> = (0..8).map(|n| 3.0 + 2.0 * n as f64).collect();
        assert!(euler_d2(&ramp, 1.0)[2..].iter().all(|v| v.abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn d2_is_d1_applied_twice(x in proptest::collection::vec(-100.0f64..100.0, 1..50), tps in 1e-3f64..1.0) {
            let twice = euler_d1(&euler_d1(&x, tps), tps);
            let direct = euler_d2(&x, tps);
            for k in 1..x.len() {
                prop_assert!((twice[k] - direct[k]).abs() <= 1e-9 * (1.0 + direct[k].abs()));
            }
        }
    }

    #[test]
    fn schedule_counts_in_one_position_period() {
        let p = x_axis();
        let s = Schedule::new(&p, 25e-6).unwrap();
        assert_eq!((s.position, s.velocity, s.current), (240, 10, 5));
        assert_eq!((s.alpha, s.beta, s.gamma), (360, 360, 360));
        for start in [0u64, 17, 240, 1000] {
            let window = start..start + 240;
            assert_eq!(window.clone().filter(|&n| s.position_fires(n)).count(), 1);
            assert_eq!(window.clone().filter(|&n| s.velocity_fires(n)).count(), 24);
            assert_eq!(window.filter(|&n| s.current_fires(n)).count(), 48);
        }
    }

    #[test]
    fn schedule_rejects_misaligned_periods() {
        let mut p = x_axis();
        p.t_sv = 260e-6;
        assert!(matches!(
            Schedule::new(&p, 25e-6),
            Err(ScheduleError::NotAMultiple { name: "t_sv", .. })
        ));
    }

    #[test]
    fn delay_line_is_pure_transport() {
        let mut d = DelayLine::new(3, -1.0);
        let out: Vec<f64> = (0..6).map(|k| d.push(k as f64)).collect();
        assert_eq!(out, vec![-1.0, -1.0, -1.0, 0.0, 1.0, 2.0]);
        let mut z = DelayLine::new(0, 0.0);
        assert_eq!(z.push(5.0), 5.0);
    }

    #[test]
    fn position_gain_units() {
        let p = x_axis();
        // 1 mm error at 1.5 (m/min)/mm is 1.5 m/min
        let omega = position_tick(&p, 1e-3, 0.0, None);
        let v_m_per_min = omega * p.transmission * 60.0;
        assert!((v_m_per_min - 1.5).abs() < 1e-12);
        assert_eq!(position_tick(&p, 0.2, 0.2, None), 0.0);
        let with_ff = position_tick(&p, 0.0, 0.0, Some(0.1));
        assert!((with_ff * p.transmission - 0.1).abs() < 1e-15);
    }

    #[test]
    fn velocity_pi_doubles_after_integration_time() {
        let p = x_axis();
        let mut v = VelocityLoop::new(&p);
        assert_eq!(v.tick(0.0, 0.0, 0.0), 0.0);
        let e = 2.0;
        let first = v.tick(e, 0.0, 0.0);
        assert!((first - p.k_v * e / p.k_t).abs() < 1e-12);
        let ticks = (p.t_v / p.t_sv).round() as usize;
        let mut out = first;
        for _ in 0..ticks {
            out = v.tick(e, 0.0, 0.0);
        }
        assert!((out - 2.0 * first).abs() < 1e-9);
    }

    #[test]
    fn current_pi_first_output_and_integral() {
        let p = x_axis();
        let mut c = CurrentLoop::new(&p);
        assert_eq!(c.tick(0.0, 0.0), 0.0);
        assert!((c.tick(1.0, 0.0) - 13.0).abs() < 1e-12);
        let mut c = CurrentLoop::new(&p);
        let ticks = (p.t_i / p.t_si).round() as usize;
        for _ in 0..ticks {
            c.tick(1.0, 0.0);
        }
        // integral term equals the proportional term after T_i
        assert!((c.tick(1.0, 0.0) - 2.0 * 13.0).abs() < 1e-9);
    }

    #[test]
    fn clamps_and_freezes_integral() {
        let mut pi = Pi::new(10.0, 1e-3, 1e-4, 5.0);
        for _ in 0..100 {
            assert_eq!(pi.tick(1.0, 0.0), 5.0);
        }
        assert!(pi.saturated());
        assert_eq!(pi.integral(), 0.0);
        // error reversal integrates immediately
        pi.tick(-0.1, 0.0);
        assert!(pi.integral() < 0.0);
    }

    #[test]
    fn circular_tffw_amplitude() {
        // PSEC = R cos(ω t): second derivative amplitude R ω²
        let p = x_axis();
        let (r, omega) = (0.15, 0.25 / 0.15);
        let torque = tffw_torque(&p, r * omega * omega);
        assert!((torque - p.tffw * r * omega * omega / p.transmission).abs() < 1e-15);
    }
}
