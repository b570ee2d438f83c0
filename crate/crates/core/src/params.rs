//! Axis parameter records and their validation.

use std::fmt;

use crate::units::AxisKind;

/// Default plant integration step, s. Divides 125 µs, 250 µs and 6 ms, and
/// makes a 9 ms delay exactly 360 steps.
pub const DEFAULT_PLANT_STEP: f64 = 25e-6;

/// Relative tolerance of the continuity check `a + c ≈ i0`.
pub const FRICTION_CONTINUITY_TOL: f64 = 5e-3;

/// Double-exponential friction law, expressed as equivalent motor current.
///
/// Velocities are in the axis display feed unit (m/min for linear axes,
/// rpm for rotary axes); `b` and `d` are per that unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Half-width of the zero-velocity (Coulomb) band, A.
    pub i0: f64,
    /// Upper bound of the velocity range the law was fitted on.
    pub v_fit_max: f64,
}

impl FrictionParams {
    /// Kinetic branch of the law, odd in `v`. Returns 0 at `v == 0`.
    pub fn kinetic_current(&self, v: f64) -> f64 {
        if v > 0.0 {
            self.a * (self.b * v).exp() + self.c * (self.d * v).exp()
        } else if v < 0.0 {
            -self.a * (-self.b * v).exp() - self.c * (-self.d * v).exp()
        } else {
            0.0
        }
    }

    /// Limit of the kinetic branch at `v → 0⁺`.
    pub fn breakaway_current(&self) -> f64 {
        self.a + self.c
    }

    /// A law with no friction at all.
    pub fn frictionless() -> Self {
        FrictionParams {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
            i0: 0.0,
            v_fit_max: f64::INFINITY,
        }
    }
}

/// Position-dependent resistant torque, e.g. gravity on a tilting table.
///
/// Piecewise linear through `points` (axis position in SI, torque in N·m),
/// held constant outside the tabulated range.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticLoadLaw {
    points: Vec<(f64, f64)>,
}

impl StaticLoadLaw {
    pub fn new(mut points: Vec<(f64, f64)>) -> Option<Self> {
        if points.is_empty() || points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return None;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return None;
        }
        Some(StaticLoadLaw { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn torque_at(&self, pos: f64) -> f64 {
        let pts = &self.points;
        if pos <= pts[0].0 {
            return pts[0].1;
        }
        if pos >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let k = pts.partition_point(|p| p.0 <= pos);
        let (x0, y0) = pts[k - 1];
        let (x1, y1) = pts[k];
        y0 + (y1 - y0) * (pos - x0) / (x1 - x0)
    }
}

/// Everything needed to simulate one feed drive, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisParameters {
    pub name: String,
    pub kind: AxisKind,
    /// Equivalent inertia at the motor shaft, kg·m².
    pub j_eq: f64,
    /// Position-loop gain, 1/s.
    pub k_p: f64,
    /// Velocity-loop proportional gain, N·m/(rad/s).
    pub k_v: f64,
    /// Velocity-loop integration time, s.
    pub t_v: f64,
    /// Current-loop proportional gain, V/A.
    pub k_i: f64,
    /// Current-loop integration time, s.
    pub t_i: f64,
    pub t_sp: f64,
    pub t_sv: f64,
    pub t_si: f64,
    pub friction: FrictionParams,
    /// Adjustment delay on the position setpoint path, s.
    pub alpha: f64,
    /// Adjustment delay on the velocity feedforward path, s.
    pub beta: f64,
    /// Adjustment delay on the torque feedforward path, s.
    pub gamma: f64,
    pub vffw: f64,
    /// Torque feedforward constant, kg·m² (multiplies motor-side acceleration).
    pub tffw: f64,
    pub k_t: f64,
    pub k_e: f64,
    pub r_arm: f64,
    pub l_arm: f64,
    /// Axis displacement per motor radian (m/rad or rad/rad).
    pub transmission: f64,
    /// Constant resistant torque, N·m.
    pub static_load: f64,
    pub static_load_law: Option<StaticLoadLaw>,
    /// Armature voltage clamp, V.
    pub voltage_limit: f64,
    /// Current setpoint clamp, A.
    pub current_limit: f64,
}

impl AxisParameters {
    /// Total position-independent plus position-dependent resistant torque.
    pub fn static_torque_at(&self, axis_pos: f64) -> f64 {
        self.static_load
            + self
                .static_load_law
                .as_ref()
                .map_or(0.0, |law| law.torque_at(axis_pos))
    }

    /// Axis velocity (SI) to the friction law's velocity unit.
    pub fn friction_velocity(&self, axis_velocity: f64) -> f64 {
        axis_velocity / self.kind.velocity_to_si()
    }

    /// Number of plant steps in `period`, if it is an exact multiple of `dt`.
    pub fn steps_of(period: f64, dt: f64) -> Option<usize> {
        exact_multiple(period, dt)
    }
}

/// One violated invariant of an [`AxisParameters`] record.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn exact_multiple(period: f64, dt: f64) -> Option<usize> {
    if !(period >= 0.0) || !(dt > 0.0) || !period.is_finite() {
        return None;
    }
    let ratio = period / dt;
    let n = ratio.round();
    if (ratio - n).abs() <= 1e-9 * n.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// Checks every invariant of `p` against the default plant step.
pub fn validate_profile(p: &AxisParameters) -> Result<(), Vec<Violation>> {
    validate_profile_for_step(p, DEFAULT_PLANT_STEP)
}

/// Checks every invariant of `p`; all cycle times and delays must be exact
/// multiples of `plant_step`.
pub fn validate_profile_for_step(
    p: &AxisParameters,
    plant_step: f64,
) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut push = |field: &'static str, message: String| out.push(Violation { field, message });

    let positive = [
        ("j_eq", p.j_eq),
        ("k_p", p.k_p),
        ("k_v", p.k_v),
        ("t_v", p.t_v),
        ("k_i", p.k_i),
        ("t_i", p.t_i),
        ("k_t", p.k_t),
        ("r_arm", p.r_arm),
        ("l_arm", p.l_arm),
        ("voltage_limit", p.voltage_limit),
        ("current_limit", p.current_limit),
    ];
    for (field, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            push(field, format!("must be positive and finite, got {v}"));
        }
    }
    for (field, v) in [("k_e", p.k_e), ("vffw", p.vffw), ("tffw", p.tffw)] {
        if !(v >= 0.0) || !v.is_finite() {
            push(field, format!("must be non-negative and finite, got {v}"));
        }
    }
    if p.transmission == 0.0 || !p.transmission.is_finite() {
        push(
            "transmission",
            format!("must be non-zero and finite, got {}", p.transmission),
        );
    }
    if !p.static_load.is_finite() {
        push("static_load", "must be finite".into());
    }

    let mut cycles_ok = true;
    for (field, v) in [("t_sp", p.t_sp), ("t_sv", p.t_sv), ("t_si", p.t_si)] {
        if !(v > 0.0) || !v.is_finite() {
            push(field, format!("cycle time must be positive, got {v}"));
            cycles_ok = false;
        } else if exact_multiple(v, plant_step).is_none() {
            push(
                field,
                format!(
                    "cycle time {v} s is not an integer multiple of the plant step {plant_step} s"
                ),
            );
        }
    }
    if cycles_ok && !(p.t_si <= p.t_sv && p.t_sv <= p.t_sp) {
        push(
            "t_sv",
            "cycle times must satisfy t_si <= t_sv <= t_sp".into(),
        );
    }
    for (field, v) in [("alpha", p.alpha), ("beta", p.beta), ("gamma", p.gamma)] {
        if !(v >= 0.0) || !v.is_finite() {
            push(field, format!("delay must be non-negative, got {v}"));
        } else if exact_multiple(v, plant_step).is_none() {
            push(
                field,
                format!("delay {v} s is not an integer multiple of the plant step {plant_step} s"),
            );
        }
    }

    let fr = &p.friction;
    let finite = [fr.a, fr.b, fr.c, fr.d, fr.i0]
        .iter()
        .all(|x| x.is_finite());
    if !finite {
        push("friction", "all friction constants must be finite".into());
    } else if fr.i0 < 0.0 {
        push(
            "friction.i0",
            format!("must be non-negative, got {}", fr.i0),
        );
    } else {
        let gap = (fr.breakaway_current() - fr.i0).abs();
        let ok = if fr.i0 > 0.0 {
            gap / fr.i0 <= FRICTION_CONTINUITY_TOL
        } else {
            gap == 0.0
        };
        if !ok {
            push(
                "friction.i0",
                format!(
                    "friction continuity: a + c = {:.6} differs from i0 = {:.6} by more than {:.1}%",
                    fr.breakaway_current(),
                    fr.i0,
                    FRICTION_CONTINUITY_TOL * 100.0
                ),
            );
        }
    }
    if !(fr.v_fit_max > 0.0) {
        push("friction.v_fit_max", "must be positive".into());
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::profile::bundled_profile;

    fn x_axis() -> AxisParameters {
        bundled_profile().axis("X").unwrap().clone()
    }

    #[test]
    fn appendix_axes_validate() {
        let prof = bundled_profile();
        for name in ["X", "Y", "Z"] {
            validate_profile(prof.axis(name).unwrap()).unwrap();
        }
    }

    #[test]
    fn zero_position_cycle_is_rejected() {
        let mut p = x_axis();
        p.t_sp = 0.0;
        let errs = validate_profile(&p).unwrap_err();
        assert!(errs
            .iter()
            .any(|v| v.field == "t_sp" && v.message.contains("cycle time must be positive")));
    }

    #[test]
    fn broken_friction_continuity_is_rejected() {
        let mut p = x_axis();
        p.friction.i0 = 0.5;
        // a + c = 1.576 - 0.5332
        assert!((p.friction.breakaway_current() - 1.0428).abs() < 1e-12);
        let errs = validate_profile(&p).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("friction continuity"));
    }

    #[test]
    fn non_multiple_delay_is_rejected() {
        let mut p = x_axis();
        p.alpha = 9.01e-3;
        let errs = validate_profile(&p).unwrap_err();
        assert_eq!(errs[0].field, "alpha");
    }

    #[test]
    fn collects_every_violation() {
        let mut p = x_axis();
        p.j_eq = -1.0;
        p.k_t = 0.0;
        p.transmission = 0.0;
        let errs = validate_profile(&p).unwrap_err();
        let fields: Vec<_> = errs.iter().map(|v| v.field).collect();
        assert_eq!(fields, ["j_eq", "k_t", "transmission"]);
    }

    #[test]
    fn static_load_table_interpolates() {
        let law = StaticLoadLaw::new(vec![(1.0, 4.0), (-1.0, 0.0)]).unwrap();
        assert_eq!(law.torque_at(0.0), 2.0);
        assert_eq!(law.torque_at(-5.0), 0.0);
        assert_eq!(law.torque_at(5.0), 4.0);
        assert!(StaticLoadLaw::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_none());
    }
}
