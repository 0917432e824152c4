use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, out-of-range levels, nonpositive scales.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Experiment or fold configuration that cannot be executed.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("coordinate descent did not converge after {iterations} sweeps (last max update {last_update:e})")]
    Convergence { iterations: usize, last_update: f64 },

    /// A quantity that is used as a divisor (e.g. sigma) is zero or negative.
    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {rep}: {source}")]
    Replication {
        rep: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_fold(self, fold: usize) -> Self {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_replication(self, rep: u64) -> Self {
        Error::Replication {
            rep,
            source: Box::new(self),
        }
    }
}

pub(crate) fn ensure_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::InvalidInput(format!(
            "{what}: expected dimension {expected}, got {got}"
        )));
    }
    Ok(())
}
