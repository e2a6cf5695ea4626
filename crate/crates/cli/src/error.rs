use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: {message}")]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] heat_inverse::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Data { .. } => "data",
            CliError::Core(e) => core_kind(e),
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse { .. } | CliError::Data { .. } => 4,
            CliError::Core(_) => 5,
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Parse { path, line, .. } | CliError::Data { path, line, .. } => {
                obj["path"] = path.display().to_string().into();
                obj["line"] = (*line).into();
            }
            CliError::Io { path, .. } => obj["path"] = path.display().to_string().into(),
            CliError::Core(e) => {
                if let heat_inverse::Error::Stage { stage, .. } = e {
                    obj["stage"] = (*stage).into();
                }
                if let Some(u) = unsafe_point(e) {
                    obj["unsafe_mode"] = u.into();
                }
            }
            CliError::Config(_) => {}
        }
        obj
    }
}

fn innermost(e: &heat_inverse::Error) -> &heat_inverse::Error {
    match e {
        heat_inverse::Error::Stage { source, .. } => innermost(source),
        other => other,
    }
}

fn core_kind(e: &heat_inverse::Error) -> &'static str {
    use heat_inverse::Error::*;
    match innermost(e) {
        Domain(_) => "domain",
        Data(_) | GridMismatch(_) => "data",
        Precondition(_) => "precondition",
        UnsafeObservationPoint { .. } => "unsafe_observation_point",
        Schedule(_) => "schedule",
        RankDeficient { .. } => "rank_deficient",
        Stage { .. } => unreachable!(),
    }
}

fn unsafe_point(e: &heat_inverse::Error) -> Option<usize> {
    match innermost(e) {
        heat_inverse::Error::UnsafeObservationPoint { mode, .. } => Some(*mode),
        _ => None,
    }
}
