use thiserror::Error;

use crate::mats::Mat;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("{0}: empty input")]
    Empty(&'static str),

    #[error("matrix is not symmetric (max deviation {deviation:.3e} exceeds tolerance {tol:.3e})")]
    NotSymmetric { deviation: f64, tol: f64 },

    #[error("invalid edge ({from}, {to}) for a graph with {nodes} nodes")]
    InvalidEdge { from: usize, to: usize, nodes: usize },

    #[error("matrix is not Hurwitz: spectral abscissa {abscissa:.6e} (required < {bound:.3e}) in {context}")]
    NotHurwitz {
        context: &'static str,
        abscissa: f64,
        bound: f64,
    },

    #[error("no stabilizing Riccati solution: {0}")]
    NoStabilizingSolution(String),

    #[error("singular matrix in {0}")]
    Singular(String),

    #[error("iteration did not converge within {iters} iterations (last step {last_step:.3e})")]
    MaxIterations {
        iters: usize,
        last_step: f64,
        history: Vec<f64>,
        last_iterate: Box<Mat>,
    },

    #[error("insufficient excitation: data rank {rank} < {required} unknowns ({rows} rows)")]
    InsufficientExcitation {
        rank: usize,
        required: usize,
        rows: usize,
    },

    #[error("group {group}: {source}")]
    Group {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation diverged at t = {time:.4} s (state norm {norm:.3e})")]
    Diverged { time: f64, norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigenvalue computation failed to converge")]
    EigenFailure,

    #[error("trajectory log I/O: {0}")]
    Io(String),
}

impl Error {
    pub fn in_group(self, group: usize) -> Self {
        Error::Group {
            group,
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any group wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Group { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
