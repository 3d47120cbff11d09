//! Embedded conic interior-point solver and the three beamforming programs
//! built on it: the LMI relaxation, its dual, and the fixed-weight inner
//! problem.

pub mod cone;
pub mod ipm;
mod relaxation;

pub use relaxation::{check_kkt, solve_inner, solve_relaxation, InnerSolution};

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, DEFAULT_PSD_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Absolute tolerance on scaled primal/dual residual norms.
    pub feas_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    /// Accuracy still returned (flagged) when full tolerance is not reached.
    pub degraded_tol: f64,
    /// Lower bound on the centering parameter for the first iteration.
    pub initial_centering: f64,
    /// Fraction of the step to the cone boundary.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 200,
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            degraded_tol: 1e-6,
            initial_centering: 0.1,
            step_fraction: 0.99,
        }
    }
}

/// Data of the LMI relaxation: maximize `tr(R̂_s Y) − ε‖Y‖` subject to
/// `tr(A W) = 1`, `W − Y ⪰ 0`, `W ⪰ 0`.
#[derive(Clone, Debug)]
pub struct RelaxationProblem {
    pub rs_hat: HermitianMatrix,
    /// Denominator matrix `R̂ + γI`.
    pub a: HermitianMatrix,
    pub eps: f64,
}

impl RelaxationProblem {
    pub fn new(rs_hat: HermitianMatrix, a: HermitianMatrix, eps: f64) -> Result<Self> {
        if rs_hat.dim() != a.dim() {
            return Err(Error::input(format!(
                "dimension mismatch: R_s is {}, A is {}",
                rs_hat.dim(),
                a.dim()
            )));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::input(format!("eps must be positive, got {eps}")));
        }
        let amin = a.lambda_min();
        if !(amin > 0.0) {
            return Err(Error::input(format!(
                "denominator matrix is not positive definite (lambda_min = {amin:.3e})"
            )));
        }
        if !rs_hat.is_psd(DEFAULT_PSD_TOL) {
            return Err(Error::input("presumed signal covariance is not PSD"));
        }
        Ok(RelaxationProblem { rs_hat, a, eps })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Residuals of the complementarity conditions and of primal/dual feasibility.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KktReport {
    /// `|ε t + tr(Y(Z − R̂_s))|`
    pub r_comp1: f64,
    /// `|tr((zA − Z) W)|`
    pub r_comp2: f64,
    /// `|tr((W − Y) Z)|`
    pub r_comp3: f64,
    /// Largest pairwise deviation among `z`, `tr(WZ)`, `tr(YZ)`, `tr(YR̂_s) − ε‖Y‖`.
    pub r_compact: f64,
    pub r_primal: f64,
    pub r_dual: f64,
    /// `|primal − dual| / max(1, |primal|)`
    pub r_gap: f64,
}

impl KktReport {
    pub fn max_complementarity(&self) -> f64 {
        self.r_comp1.max(self.r_comp2).max(self.r_comp3).max(self.r_compact)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_complementarity().max(self.r_primal).max(self.r_dual).max(self.r_gap)
    }
}

/// Primal `(W, Y, t)` and dual `(z, Z)` of the relaxation.
#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub w: HermitianMatrix,
    pub y: HermitianMatrix,
    pub t: f64,
    pub z: f64,
    pub z_mat: HermitianMatrix,
    /// `tr(R̂_s Y) − ε t`
    pub primal_value: f64,
    /// `z`
    pub dual_value: f64,
    pub residuals: KktReport,
    pub iterations: usize,
    /// Only the degraded tolerance was reached.
    pub degraded: bool,
}
