use thiserror::Error;

/// Errors produced by models, samplers, estimators and trainers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model too large to enumerate: min(n_visible, n_hidden) = {smaller} exceeds {limit}")]
    Intractable { smaller: usize, limit: usize },
    #[error("estimator undefined on empty sample set")]
    EmptySampleSet,
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("degenerate chain: series is constant")]
    DegenerateChain,
    #[error("component collapse: sigma fell to {0:e}")]
    ComponentCollapse(f64),
    #[error("log-likelihood decreased by {decrease:e} at iteration {iteration}")]
    NonMonotone { iteration: usize, decrease: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed sample file at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::DegenerateChain
                | Error::ComponentCollapse(_)
                | Error::NonMonotone { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
