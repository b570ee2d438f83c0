//! Unit conventions.
//!
//! Everything inside the simulator is SI: metres or radians for axis
//! positions, m/s or rad/s for axis velocities, N·m, A, V and seconds.
//! Display units (mm, m/min, degrees, rpm, ms, µs) only appear in files and
//! on the command line; the helpers below are the only place the factors live.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Linear or rotary machine axis.
///
/// Linear axes display positions in mm and velocities in m/min; rotary axes
/// display degrees and rpm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Linear,
    Rotary,
}

impl AxisKind {
    /// Display position unit.
    pub fn position_unit(self) -> Unit {
        match self {
            AxisKind::Linear => Unit::Millimeter,
            AxisKind::Rotary => Unit::Degree,
        }
    }

    /// Display velocity unit (feed).
    pub fn velocity_unit(self) -> Unit {
        match self {
            AxisKind::Linear => Unit::MeterPerMinute,
            AxisKind::Rotary => Unit::Rpm,
        }
    }

    /// SI position unit.
    pub fn si_position_unit(self) -> Unit {
        match self {
            AxisKind::Linear => Unit::Meter,
            AxisKind::Rotary => Unit::Radian,
        }
    }

    /// SI velocity unit.
    pub fn si_velocity_unit(self) -> Unit {
        match self {
            AxisKind::Linear => Unit::MeterPerSecond,
            AxisKind::Rotary => Unit::RadianPerSecond,
        }
    }

    /// Factor from display position unit to SI.
    pub fn position_to_si(self) -> f64 {
        self.position_unit().to_si()
    }

    /// Factor from display velocity unit to SI.
    pub fn velocity_to_si(self) -> f64 {
        self.velocity_unit().to_si()
    }

    /// Factor from the display position-gain unit to 1/s.
    ///
    /// Linear axes: (m/min)/mm. Rotary axes use the same convention with
    /// 1000 deg/min per degree, so a gain of 1.5 means the same loop
    /// bandwidth on both kinds of axis.
    pub fn position_gain_to_si(self) -> f64 {
        1000.0 / 60.0
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisKind::Linear => f.write_str("linear"),
            AxisKind::Rotary => f.write_str("rotary"),
        }
    }
}

/// Physical dimension of a channel or quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Time,
    Position,
    Velocity,
    Acceleration,
    Current,
    Torque,
    Voltage,
    Dimensionless,
}

/// Units accepted in trace headers and files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Second,
    Millisecond,
    Meter,
    Millimeter,
    Radian,
    Degree,
    MeterPerSecond,
    MeterPerMinute,
    MillimeterPerSecond,
    RadianPerSecond,
    Rpm,
    DegreePerSecond,
    DegreePerMinute,
    MeterPerSecondSquared,
    RadianPerSecondSquared,
    Ampere,
    NewtonMeter,
    Volt,
    Dimensionless,
}

const UNIT_TABLE: &[(Unit, &str, Dimension, f64)] = &[
    (Unit::Second, "s", Dimension::Time, 1.0),
    (Unit::Millisecond, "ms", Dimension::Time, 1e-3),
    (Unit::Meter, "m", Dimension::Position, 1.0),
    (Unit::Millimeter, "mm", Dimension::Position, 1e-3),
    (Unit::Radian, "rad", Dimension::Position, 1.0),
    (Unit::Degree, "deg", Dimension::Position, PI / 180.0),
    (Unit::MeterPerSecond, "m/s", Dimension::Velocity, 1.0),
    (
        Unit::MeterPerMinute,
        "m/min",
        Dimension::Velocity,
        1.0 / 60.0,
    ),
    (Unit::MillimeterPerSecond, "mm/s", Dimension::Velocity, 1e-3),
    (Unit::RadianPerSecond, "rad/s", Dimension::Velocity, 1.0),
    (Unit::Rpm, "rpm", Dimension::Velocity, 2.0 * PI / 60.0),
    (
        Unit::DegreePerSecond,
        "deg/s",
        Dimension::Velocity,
        PI / 180.0,
    ),
    (
        Unit::DegreePerMinute,
        "deg/min",
        Dimension::Velocity,
        PI / 180.0 / 60.0,
    ),
    (
        Unit::MeterPerSecondSquared,
        "m/s2",
        Dimension::Acceleration,
        1.0,
    ),
    (
        Unit::RadianPerSecondSquared,
        "rad/s2",
        Dimension::Acceleration,
        1.0,
    ),
    (Unit::Ampere, "A", Dimension::Current, 1.0),
    (Unit::NewtonMeter, "N.m", Dimension::Torque, 1.0),
    (Unit::Volt, "V", Dimension::Voltage, 1.0),
    (Unit::Dimensionless, "1", Dimension::Dimensionless, 1.0),
];

impl Unit {
    fn row(self) -> &'static (Unit, &'static str, Dimension, f64) {
        UNIT_TABLE
            .iter()
            .find(|r| r.0 == self)
            .expect("every unit has a table row")
    }

    pub fn symbol(self) -> &'static str {
        self.row().1
    }

    pub fn dimension(self) -> Dimension {
        self.row().2
    }

    /// Multiplicative factor to the SI unit of the same dimension.
    pub fn to_si(self) -> f64 {
        self.row().3
    }

    /// Whether the unit belongs to the angular family (rad, deg, rpm, ...).
    pub fn is_angular(self) -> bool {
        matches!(
            self,
            Unit::Radian
                | Unit::Degree
                | Unit::RadianPerSecond
                | Unit::Rpm
                | Unit::DegreePerSecond
                | Unit::DegreePerMinute
                | Unit::RadianPerSecondSquared
        )
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let alias = match s {
            "Nm" | "N·m" => "N.m",
            "m/s^2" | "m/s²" => "m/s2",
            "rad/s^2" | "rad/s²" => "rad/s2",
            "°" | "degree" => "deg",
            "" | "-" => "1",
            other => other,
        };
        UNIT_TABLE
            .iter()
            .find(|r| r.1 == alias)
            .map(|r| r.0)
            .ok_or_else(|| format!("unknown unit `{s}`"))
    }
}

/// Converts an axis velocity (SI) to motor shaft speed, rad/s.
pub fn axis_to_motor_velocity(axis_velocity: f64, transmission: f64) -> f64 {
    axis_velocity / transmission
}

/// Converts motor shaft speed, rad/s, to axis velocity (SI).
pub fn motor_to_axis_velocity(omega: f64, transmission: f64) -> f64 {
    omega * transmission
}

pub fn mm_to_m(v: f64) -> f64 {
    v * 1e-3
}

pub fn m_to_mm(v: f64) -> f64 {
    v * 1e3
}

pub fn m_per_min_to_m_per_s(v: f64) -> f64 {
    v / 60.0
}

pub fn m_per_s_to_m_per_min(v: f64) -> f64 {
    v * 60.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symbols_parse_back() {
        for row in UNIT_TABLE {
            assert_eq!(row.1.parse::<Unit>().unwrap(), row.0);
        }
        assert_eq!("Nm".parse::<Unit>().unwrap(), Unit::NewtonMeter);
        assert!("furlong".parse::<Unit>().is_err());
    }

    #[test]
    fn display_factors() {
        assert!((AxisKind::Linear.velocity_to_si() - 1.0 / 60.0).abs() < 1e-15);
        assert!((AxisKind::Rotary.velocity_to_si() - 2.0 * PI / 60.0).abs() < 1e-15);
        // 1.5 (m/min)/mm is 25 1/s
        assert!((1.5 * AxisKind::Linear.position_gain_to_si() - 25.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn linear_velocity_round_trip(v in -40.0f64..40.0, tr in 1e-4f64..0.05) {
            let omega = axis_to_motor_velocity(m_per_min_to_m_per_s(v), tr);
            let back = m_per_s_to_m_per_min(motor_to_axis_velocity(omega, tr));
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }
}
