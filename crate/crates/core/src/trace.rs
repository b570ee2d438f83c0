//! Uniformly sampled multi-channel time series.

use thiserror::Error;

use crate::units::{Dimension, Unit};

/// Registered channel base names and the dimension each must carry.
///
/// A channel name is either a base name (`sp`) or a base name qualified by an
/// axis (`sp.X`).
pub const CHANNEL_REGISTRY: &[(&str, Dimension)] = &[
    ("psec", Dimension::Position),
    ("sp", Dimension::Position),
    ("sv", Dimension::Velocity),
    ("smc", Dimension::Current),
    ("vffws", Dimension::Velocity),
    ("tffws", Dimension::Torque),
    ("torque", Dimension::Torque),
    ("pos_err", Dimension::Position),
];

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("sampling period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("channel `{0}` is not in the channel registry")]
    UnknownChannel(String),
    #[error("channel `{name}` has unit {unit} but a {expected:?} unit is required")]
    UnitMismatch {
        name: String,
        unit: Unit,
        expected: Dimension,
    },
    #[error("channel `{name}` has {got} samples, expected {expected}")]
    LengthMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate channel `{0}`")]
    Duplicate(String),
    #[error("missing channel `{0}`")]
    Missing(String),
}

/// Splits `sp.X` into (`sp`, Some(`X`)).
pub fn split_channel_name(name: &str) -> (&str, Option<&str>) {
    match name.split_once('.') {
        Some((base, axis)) => (base, Some(axis)),
        None => (name, None),
    }
}

/// Dimension a registered channel must have.
pub fn registered_dimension(name: &str) -> Option<Dimension> {
    let (base, _) = split_channel_name(name);
    CHANNEL_REGISTRY
        .iter()
        .find(|(n, _)| *n == base)
        .map(|(_, d)| *d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub unit: Unit,
    pub data: Vec<f64>,
}

/// A set of equal-length channels sampled every `dt` seconds from `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    t0: f64,
    channels: Vec<Channel>,
}

impl Trace {
    pub fn new(dt: f64, t0: f64) -> Result<Self, TraceError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(TraceError::BadPeriod(dt));
        }
        Ok(Trace {
            dt,
            t0,
            channels: Vec::new(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.data.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Adds a channel, checking the registry, the unit dimension and the length.
    pub fn push(&mut self, name: &str, unit: Unit, data: Vec<f64>) -> Result<(), TraceError> {
        let expected =
            registered_dimension(name).ok_or_else(|| TraceError::UnknownChannel(name.into()))?;
        if unit.dimension() != expected {
            return Err(TraceError::UnitMismatch {
                name: name.into(),
                unit,
                expected,
            });
        }
        if self.channel(name).is_some() {
            return Err(TraceError::Duplicate(name.into()));
        }
        if let Some(first) = self.channels.first() {
            if first.data.len() != data.len() {
                return Err(TraceError::LengthMismatch {
                    name: name.into(),
                    got: data.len(),
                    expected: first.data.len(),
                });
            }
        }
        self.channels.push(Channel {
            name: name.into(),
            unit,
            data,
        });
        Ok(())
    }

    /// Builder form of [`Trace::push`].
    pub fn with(mut self, name: &str, unit: Unit, data: Vec<f64>) -> Result<Self, TraceError> {
        self.push(name, unit, data)?;
        Ok(self)
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Channel, TraceError> {
        self.channel(name)
            .ok_or_else(|| TraceError::Missing(name.into()))
    }

    /// Channel samples converted to SI.
    pub fn si(&self, name: &str) -> Result<Vec<f64>, TraceError> {
        let c = self.require(name)?;
        let f = c.unit.to_si();
        Ok(c.data.iter().map(|v| v * f).collect())
    }

    /// Copy of the trace with `name` re-expressed in `unit`.
    pub fn convert(&self, name: &str, unit: Unit) -> Result<Trace, TraceError> {
        let mut out = self.clone();
        let c = out
            .channels
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| TraceError::Missing(name.into()))?;
        if c.unit.dimension() != unit.dimension() {
            return Err(TraceError::UnitMismatch {
                name: name.into(),
                unit,
                expected: c.unit.dimension(),
            });
        }
        let f = c.unit.to_si() / unit.to_si();
        for v in &mut c.data {
            *v *= f;
        }
        c.unit = unit;
        Ok(out)
    }

    /// Keeps samples `range` only.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Trace {
        Trace {
            dt: self.dt,
            t0: self.time(range.start),
            channels: self
                .channels
                .iter()
                .map(|c| Channel {
                    name: c.name.clone(),
                    unit: c.unit,
                    data: c.data[range.clone()].to_vec(),
                })
                .collect(),
        }
    }
}
