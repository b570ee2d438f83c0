//! File formats: machine profiles, scenario files, trace CSVs, RST exports and
//! identification reports. Every format carries a `format_version`.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod profile;
pub mod report;
pub mod rst_file;
pub mod scenario_file;
pub mod trace_csv;

pub use profile::{
    bundled_profile, load_profile, parse_profile, profile_to_string, MachineProfile,
};
pub use trace_csv::{read_trace, trace_from_str, trace_to_string, write_trace};

/// A schema violation in a file, with its location when known.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct FormatError {
    pub origin: String,
    pub line: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn new(origin: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        FormatError {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn from_toml(origin: &str, text: &str, e: &toml::de::Error) -> Self {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        FormatError::new(origin, line, e.message().to_string())
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.origin, l, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}
