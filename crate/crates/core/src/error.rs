use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polynomial has zero bandwidth and cannot be normalized")]
    NotNormalizable,

    /// Root refinement stopped at the iteration cap. Carries the last iterate.
    #[error("root iteration did not converge after {iterations} iterations (max residual {max_residual:e})")]
    Convergence {
        iterations: usize,
        max_residual: f64,
        best: Vec<num_complex::Complex64>,
    },

    /// Quadrature exhausted its panel budget before meeting the tolerance.
    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels (estimate {estimate}, error {error:e})")]
    Accuracy {
        tol: f64,
        panels: usize,
        estimate: f64,
        error: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of a numerical budget (root iterations, quadrature panels).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::Accuracy { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
