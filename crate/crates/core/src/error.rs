use thiserror::Error;

/// Failures raised by the solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("mode {index} is degenerate: |kappa| = {magnitude:.3e} is below tolerance {tol:.3e}")]
    DegenerateMode { index: usize, magnitude: f64, tol: f64 },

    #[error("near resonance: pivot {pivot:.3e} at row {row} is below threshold {threshold:.3e}")]
    NearResonance { row: usize, pivot: f64, threshold: f64 },

    #[error("failed to bracket root {root} of order {order}")]
    RootBracketing { order: usize, root: usize },

    #[error("Gram matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("mode {index}: {source}")]
    InMode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_mode(index: usize, source: Error) -> Self {
        match source {
            e @ Error::DegenerateMode { .. } => e,
            e @ Error::InMode { .. } => e,
            e => Error::InMode { index, source: Box::new(e) },
        }
    }

    /// True for failures caused by the numbers rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Unsupported(_) | Error::Io(_) => false,
            Error::InMode { source, .. } => source.is_numerical(),
            _ => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
