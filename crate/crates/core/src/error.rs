use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid joint action: {0}")]
    InvalidJointAction(String),

    #[error("enumeration budget exceeded: {needed} > {budget}; reduce the number of agents or actions")]
    BudgetExceeded { needed: f64, budget: f64 },

    /// The adversarial tie enumeration hit its state cap before finishing.
    /// `best_found` is the smallest final welfare realized by a complete
    /// trajectory (an upper bound on the worst case), `lower_bound` a
    /// welfare no tie resolution can go below.
    #[error(
        "tie enumeration cap {cap} exceeded after {explored} states \
         (worst-case welfare in [{lower_bound}, {}])",
        best_found.map_or("unknown".to_string(), |w| w.to_string())
    )]
    EnumerationCap {
        cap: usize,
        explored: usize,
        lower_bound: f64,
        best_found: Option<f64>,
    },

    #[error("walk did not reach a fixed point within {0} steps")]
    NoFixedPoint(usize),

    #[error("linear program {status}: {detail}")]
    Lp { status: String, detail: String },

    #[error("block sizes not representable with denominator <= {bound}")]
    ScalingBound { bound: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by malformed input rather than resource limits.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidRule(_)
                | Error::InvalidParameter(_)
                | Error::InvalidGame(_)
                | Error::InvalidJointAction(_)
                | Error::Json(_)
                | Error::ScalingBound { .. }
        )
    }

    /// True for budget, enumeration-cap and iteration-ceiling errors.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::EnumerationCap { .. } | Error::NoFixedPoint(_)
        )
    }
}
