use thiserror::Error;

use crate::conic::ConicSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-range caller input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Input is well-formed but outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Solver(Box<SolverFailure>),

    #[error("rank-one decomposition failed after {steps} pair updates (residual {residual:.3e})")]
    Decomposition { steps: usize, residual: f64 },
}

/// Non-convergence report carrying the best iterate the solver reached.
#[derive(Debug, Clone)]
pub struct SolverFailure {
    pub reason: String,
    pub iterations: usize,
    pub best: Option<ConicSolution>,
}

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver failed after {} iterations: {}", self.iterations, self.reason)?;
        if let Some(best) = &self.best {
            let r = &best.residuals;
            write!(
                f,
                " (best iterate: gap {:.3e}, primal {:.3e}, dual {:.3e})",
                r.r_gap, r.r_primal, r.r_dual
            )?;
        }
        Ok(())
    }
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
