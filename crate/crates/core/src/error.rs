use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading, simulating or reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("demand {demand:.3} kW exceeds generation bound {bound:.3} kW at slot {slot}; curtailment required")]
    CurtailmentRequired {
        slot: usize,
        demand: f64,
        bound: f64,
    },

    #[error("household problem infeasible: daily total {daily_total} outside [{min_total}, {max_total}]")]
    Infeasible {
        daily_total: f64,
        min_total: f64,
        max_total: f64,
    },

    #[error("distance {distance} mi exceeds vehicle range {range} mi")]
    DistanceExceedsRange { distance: f64, range: f64 },

    #[error("home window of {window} slots cannot fit {required} charging slots")]
    InfeasibleWindow { required: usize, window: usize },

    #[error("no admissible behavior sample after {0} draws")]
    RejectionBudgetExceeded(usize),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no trial results to report")]
    NoResults,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into().display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
