//! Sufficient conditions for the relaxation to admit a rank-one optimum, and
//! the explicit construction of that optimum.

use crate::beamformer::{BeamWeights, UncertaintyModel};
use crate::decomposition::{numeric_rank, rank_one_decompose};
use crate::error::Result;
use crate::hermitian::{HermitianMatrix, C64};

/// Relative slack granted to each inequality so that solver roundoff on an
/// equality case does not flip the verdict.
const SLACK: f64 = 1e-8;

/// Tolerance of the `wwᴴ − Y ⪰ 0` test, relative to `tr(W)`.
pub const QMI_TOL: f64 = 1e-7;

/// Relative eigenvalue threshold used for ranks in this module.
pub const RANK_TOL: f64 = 1e-6;

/// Left and right sides of one inequality.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CertificateReport {
    pub rank_one_at_solver: bool,
    /// `tr(W − Y) ≥ tr(W)√(N−1)(1 + λ₁(R̂_s)/ε)`
    pub thm42_holds: bool,
    /// `tr(Y) ≤ 1/(γ + λ₁(R̂)) − √(N−1)/(γ + λ_N(R̂))·(1 + λ₁(R̂_s)/ε)`
    pub cor43_holds: bool,
    /// `tr(W − Y) ≥ tr(W)√(N−1)(1 + λ₁(R̂_s)/ε − v*/(ε tr W))`
    pub cor44_holds: bool,
    pub constructed_optimal: bool,
    /// False when `v* ≤ 0`; the inequalities are then evaluated but carry no
    /// guarantee.
    pub applicable: bool,
    pub thm42: Sides,
    pub cor43: Sides,
    pub cor44: Sides,
}

impl CertificateReport {
    pub fn any_inequality(&self) -> bool {
        self.thm42_holds || self.cor43_holds || self.cor44_holds
    }
}

/// Evaluates the three trace inequalities at a solved `(W, Y)` with value
/// `v_star`. `constructed_optimal` is left false; see
/// [`construct_rank_one_certificate`].
pub fn check_certificates(
    w: &HermitianMatrix,
    y: &HermitianMatrix,
    v_star: f64,
    rs_hat: &HermitianMatrix,
    r_hat: &HermitianMatrix,
    u: UncertaintyModel,
) -> CertificateReport {
    let n = w.dim() as f64;
    let root = (n - 1.0).sqrt();
    let lam_s = rs_hat.lambda_max();
    let re = r_hat.eig();
    let tr_w = w.trace();
    let gap = tr_w - y.trace();

    let thm42 = Sides { lhs: gap, rhs: tr_w * root * (1.0 + lam_s / u.eps) };
    let cor43 = Sides {
        lhs: y.trace(),
        rhs: 1.0 / (u.gamma + re.max()) - root / (u.gamma + re.min()) * (1.0 + lam_s / u.eps),
    };
    let cor44 = Sides {
        lhs: gap,
        rhs: tr_w * root * (1.0 + lam_s / u.eps - v_star / (u.eps * tr_w)),
    };
    let w_scale = tr_w.abs().max(f64::MIN_POSITIVE);
    let y_scale = 1.0 / (u.gamma + re.min());

    CertificateReport {
        rank_one_at_solver: numeric_rank(w, RANK_TOL).map(|r| r == 1).unwrap_or(false),
        thm42_holds: thm42.lhs >= thm42.rhs - SLACK * w_scale,
        cor43_holds: cor43.lhs <= cor43.rhs + SLACK * y_scale,
        cor44_holds: cor44.lhs >= cor44.rhs - SLACK * w_scale,
        constructed_optimal: false,
        applicable: v_star > 0.0,
        thm42,
        cor43,
        cor44,
    }
}

/// Searches the rank-one decompositions `D(W, A, I)` and then `D(W, A, Z)`
/// for a vector `w` with `wᴴw = tr(W)`, `wᴴAw = 1` and `wwᴴ − Y ⪰ 0`. Such a
/// `w` turns `(wwᴴ, Y)` into a feasible point with the same objective.
pub fn construct_rank_one_certificate(
    w: &HermitianMatrix,
    y: &HermitianMatrix,
    a: &HermitianMatrix,
    z: &HermitianMatrix,
) -> Result<Option<BeamWeights>> {
    let n = w.dim();
    let tol = QMI_TOL * w.trace().abs().max(f64::MIN_POSITIVE);
    for b in [HermitianMatrix::identity(n), z.clone()] {
        let d = rank_one_decompose(w, a, &b, RANK_TOL)?;
        let root = (d.rank as f64).sqrt();
        for v in d.vectors {
            let cand: Vec<C64> = v.into_iter().map(|x| x * root).collect();
            let Ok(bw) = BeamWeights::canonical(cand, a) else { continue };
            if bw.outer().sub(y).lambda_min() >= -tol {
                return Ok(Some(bw));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sensor_always_satisfies_trace_condition() {
        let w = HermitianMatrix::diag(&[0.5]);
        let y = HermitianMatrix::diag(&[0.5]);
        let u = UncertaintyModel::new(1.0, 1.0).unwrap();
        let r = check_certificates(&w, &y, 1.0, &HermitianMatrix::diag(&[3.0]), &HermitianMatrix::diag(&[1.0]), u);
        assert!(r.thm42_holds);
        assert!(r.rank_one_at_solver);
        assert_eq!(r.thm42.rhs, 0.0);
    }

    #[test]
    fn cor43_arithmetic() {
        let u = UncertaintyModel::new(1.0, 1.0).unwrap();
        let r_hat = HermitianMatrix::diag(&[2.0, 1.0]);
        let rs = HermitianMatrix::diag(&[1.0, 0.0]);
        let w = HermitianMatrix::diag(&[0.2, 0.1]);
        let y = HermitianMatrix::diag(&[0.1, 0.0]);
        let r = check_certificates(&w, &y, 0.05, &rs, &r_hat, u);
        assert!((r.cor43.rhs - (1.0 / 3.0 - 1.0)).abs() < 1e-12);
        assert!(!r.cor43_holds);
    }

    #[test]
    fn rank_one_w_returns_its_vector() {
        let v = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.3)];
        let w = HermitianMatrix::outer(&v);
        let a = HermitianMatrix::identity(2).scale(1.0 / w.trace());
        let y = w.scale(0.5);
        let got = construct_rank_one_certificate(&w, &y, &a, &HermitianMatrix::identity(2))
            .unwrap()
            .expect("rank-one W certifies itself");
        assert!(got.outer().sub(&w).frob_norm() < 1e-12);
    }
}
