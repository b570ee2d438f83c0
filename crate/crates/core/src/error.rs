//! Crate-level error with one exit code per family.

use thiserror::Error;

use crate::engine::EngineError;
use crate::gpc::GpcError;
use crate::identification::IdentError;
use crate::io::{FormatError, IoError};
use crate::params::Violation;
use crate::trace::TraceError;
use crate::trajectory::TrajectoryError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(IoError),
    #[error(transparent)]
    Format(FormatError),
    #[error("invalid parameters:\n{}", .0.iter().map(|(a, v)| format!("  {a}: {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<(String, Violation)>),
    #[error(transparent)]
    Simulation(EngineError),
    #[error(transparent)]
    Gpc(#[from] GpcError),
    #[error(transparent)]
    Identification(#[from] IdentError),
}

impl Error {
    /// Process exit status for this family.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io(_) => 3,
            Error::Format(_) => 4,
            Error::Validation(_) => 5,
            Error::Simulation(_) => 6,
            Error::Gpc(_) => 7,
            Error::Identification(_) => 8,
        }
    }
}

impl From<IoError> for Error {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Format(f) => Error::Format(f),
            other => Error::Io(other),
        }
    }
}

impl From<FormatError> for Error {
    fn from(e: FormatError) -> Self {
        Error::Format(e)
    }
}

impl From<EngineError> for Error {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Controller { source, .. } => Error::Gpc(source),
            other => Error::Simulation(other),
        }
    }
}

impl From<TrajectoryError> for Error {
    fn from(e: TrajectoryError) -> Self {
        Error::Simulation(EngineError::Trajectory(e))
    }
}

impl From<TraceError> for Error {
    fn from(e: TraceError) -> Self {
        Error::Format(FormatError::new("trace", None, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_have_distinct_codes() {
        let errs = [
            Error::Usage("x".into()),
            Error::Io(IoError::io(
                std::path::Path::new("f"),
                std::io::Error::other("x"),
            )),
            Error::Format(FormatError::new("f", Some(1), "x")),
            Error::Validation(vec![]),
            Error::Simulation(EngineError::Scenario("x".into())),
            Error::Gpc(GpcError::InvalidModel("x".into())),
            Error::Identification(IdentError::NoAcceleration),
        ];
        let mut codes: Vec<i32> = errs.iter().map(Error::exit_code).collect();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
        assert!(codes.iter().all(|&c| c > 1));
    }
}
