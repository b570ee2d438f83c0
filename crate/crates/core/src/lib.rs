//! Multi-axis machine-tool feed-drive simulator.
//!
//! Each axis is a DC servo motor with a double-exponential friction law,
//! driven either by an industrial cascade (P position loop, PI velocity and
//! current loops, velocity/torque feedforward, three adjustment delays) or by
//! a GPC-synthesized RST position controller over the same inner loops.
//!
//! All computation is in SI units; display units (mm, m/min, deg, rpm) only
//! appear in files and on the command line.

pub mod cascade;
pub mod engine;
pub mod error;
pub mod gpc;
pub mod identification;
pub mod io;
pub mod params;
pub mod plant;
pub mod trace;
pub mod trajectory;
pub mod units;

pub use error::Error;
pub use params::{AxisParameters, FrictionParams};
pub use trace::Trace;
pub use units::AxisKind;
