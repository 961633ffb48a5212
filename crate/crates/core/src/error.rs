use std::path::PathBuf;

use crate::arch::Axis;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid expansion factors: {0}")]
    InvalidFactors(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("architecture spec is invalid: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),

    #[error("activation collapses at {layer}: {detail}")]
    DegenerateShape { layer: String, detail: String },

    #[error("unknown preset `{0}` (expected one of X2D, X3D-XS, X3D-S, X3D-M, X3D-XL)")]
    UnknownPreset(String),

    #[error("tensor shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("axis {axis} is infeasible: {reason}")]
    InfeasibleAxis { axis: Axis, reason: String },

    #[error("no axis could be expanded at step {step}: {}", .reasons.join("; "))]
    AllAxesFailed { step: usize, reasons: Vec<String> },

    #[error("contraction is infeasible: {0}")]
    Contraction(String),

    #[error("criterion failure: {0}")]
    Criterion(String),

    #[error("replay table has no entry for key {0}")]
    MissingReplayKey(String),

    #[error("activation budget exceeded: {needed} elements > {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            what,
            detail: detail.into(),
        }
    }

    /// True for errors caused by infeasible inputs or failed validation, as
    /// opposed to I/O or parse problems.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InvalidFactors(_)
                | Error::InvalidSpec(_)
                | Error::DegenerateShape { .. }
                | Error::InfeasibleAxis { .. }
                | Error::AllAxesFailed { .. }
                | Error::Contraction(_)
                | Error::Criterion(_)
                | Error::MissingReplayKey(_)
                | Error::BudgetExceeded { .. }
        )
    }
}
