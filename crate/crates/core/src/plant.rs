//! Continuous-time physics of one feed drive: armature circuit, friction,
//! resistant loads and rigid-body motion, advanced with fixed-step RK4.

use thiserror::Error;

use crate::params::{AxisParameters, FrictionParams};

/// Half-width of the zero-velocity band, in the friction law's velocity unit
/// (m/min or rpm).
pub const ZERO_VELOCITY_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("plant state became non-finite: {quantity} = {value}")]
pub struct PlantFault {
    pub quantity: &'static str,
    pub value: f64,
}

/// Friction expressed as equivalent motor current, A.
///
/// `v` is the axis velocity in the law's unit. Inside the zero-velocity band
/// the friction balances `applied_torque` up to the Coulomb band `±i0`, so
/// static friction never exceeds what is applied.
pub fn friction_current(fp: &FrictionParams, k_t: f64, v: f64, applied_torque: f64) -> f64 {
    if v.abs() > ZERO_VELOCITY_BAND {
        fp.kinetic_current(v)
    } else {
        (applied_torque / k_t).clamp(-fp.i0, fp.i0)
    }
}

/// Electrical and mechanical state of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    /// Armature current, A.
    pub current: f64,
    /// Motor speed, rad/s.
    pub omega: f64,
    /// Motor angle, rad.
    pub theta: f64,
}

impl PlantState {
    /// State at rest with the axis at `axis_pos`.
    pub fn at_rest(p: &AxisParameters, axis_pos: f64) -> Self {
        PlantState {
            current: 0.0,
            omega: 0.0,
            theta: axis_pos / p.transmission,
        }
    }

    pub fn axis_pos(&self, p: &AxisParameters) -> f64 {
        self.theta * p.transmission
    }

    pub fn axis_velocity(&self, p: &AxisParameters) -> f64 {
        self.omega * p.transmission
    }

    /// Motor torque K_t·i.
    pub fn motor_torque(&self, p: &AxisParameters) -> f64 {
        p.k_t * self.current
    }

    /// Electrical power delivered at the armature terminals, W.
    pub fn electrical_power(&self, voltage: f64) -> f64 {
        voltage * self.current
    }

    /// Mechanical power at the motor shaft, W.
    pub fn mechanical_power(&self, p: &AxisParameters) -> f64 {
        self.motor_torque(p) * self.omega
    }
}

/// Torque driving the shaft before friction: motor torque minus static load.
fn applied_torque(p: &AxisParameters, current: f64, theta: f64) -> f64 {
    p.k_t * current - p.static_torque_at(theta * p.transmission)
}

/// Total resistant torque C_r (friction plus static load) at a given state.
pub fn resistant_torque(p: &AxisParameters, s: &PlantState) -> f64 {
    let applied = applied_torque(p, s.current, s.theta);
    let v = p.friction_velocity(s.axis_velocity(p));
    let fric = p.k_t * friction_current(&p.friction, p.k_t, v, applied);
    fric + p.static_torque_at(s.axis_pos(p))
}

/// Time derivatives (di/dt, dΩ/dt, dθ/dt) for terminal voltage `u`.
pub fn derivatives(p: &AxisParameters, s: &PlantState, u: f64) -> [f64; 3] {
    let di = (u - p.r_arm * s.current - p.k_e * s.omega) / p.l_arm;
    let domega = (p.k_t * s.current - resistant_torque(p, s)) / p.j_eq;
    [di, domega, s.omega]
}

fn offset(s: &PlantState, k: &[f64; 3], h: f64) -> PlantState {
    PlantState {
        current: s.current + h * k[0],
        omega: s.omega + h * k[1],
        theta: s.theta + h * k[2],
    }
}

/// Advances the plant by `dt` under constant terminal voltage.
pub fn plant_step(
    p: &AxisParameters,
    s: PlantState,
    u_voltage: f64,
    dt: f64,
) -> Result<PlantState, PlantFault> {
    let k1 = derivatives(p, &s, u_voltage);
    let k2 = derivatives(p, &offset(&s, &k1, dt / 2.0), u_voltage);
    let k3 = derivatives(p, &offset(&s, &k2, dt / 2.0), u_voltage);
    let k4 = derivatives(p, &offset(&s, &k3, dt), u_voltage);
    let mut next = PlantState {
        current: s.current + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        omega: s.omega + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        theta: s.theta + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    };

    for (quantity, value) in [
        ("current", next.current),
        ("omega", next.omega),
        ("theta", next.theta),
    ] {
        if !value.is_finite() {
            return Err(PlantFault { quantity, value });
        }
    }

    // Stick when the shaft stops or reverses inside the Coulomb band.
    let band = ZERO_VELOCITY_BAND * p.kind.velocity_to_si() / p.transmission.abs();
    let reversed = s.omega != 0.0 && next.omega.signum() != s.omega.signum();
    if next.omega.abs() <= band || reversed {
        let applied = applied_torque(p, next.current, next.theta);
        if applied.abs() <= p.k_t * p.friction.i0 {
            next.omega = 0.0;
        }
    }
    Ok(next)
}
