//! Beamvectors, SINR evaluation and the non-robust reference beamformers.

use crate::conic::{solve_inner, SolverOptions};
use crate::decomposition::canonical_phase;
use crate::error::{Error, Result};
use crate::hermitian::{norm_sqr, HermitianMatrix, C64};

/// Nonzero, finite complex weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamWeights {
    w: Vec<C64>,
}

impl BeamWeights {
    pub fn new(w: Vec<C64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::input("empty weight vector"));
        }
        if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("non-finite weight entry"));
        }
        if w.iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Err(Error::input("all-zero weight vector"));
        }
        Ok(BeamWeights { w })
    }

    /// Rescales so that `wᴴ A w = 1` and rotates the first nonzero entry onto
    /// the positive real axis. SINR is unaffected by either operation.
    pub fn canonical(w: Vec<C64>, a: &HermitianMatrix) -> Result<Self> {
        let bw = BeamWeights::new(w)?;
        let q = a.quad_form(&bw.w);
        if !(q > 0.0) {
            return Err(Error::domain("normalizing form is not positive at w"));
        }
        let s = 1.0 / q.sqrt();
        let w = canonical_phase(bw.w.into_iter().map(|z| z * s).collect());
        Ok(BeamWeights { w })
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.w
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.w)
    }

    pub fn outer(&self) -> HermitianMatrix {
        HermitianMatrix::outer(&self.w)
    }
}

/// Radii of the two Frobenius uncertainty balls: `gamma` around the sample
/// covariance (equivalently the diagonal loading), `eps` around the presumed
/// signal covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncertaintyModel {
    pub gamma: f64,
    pub eps: f64,
}

impl UncertaintyModel {
    pub fn new(gamma: f64, eps: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::input(format!("gamma must be positive, got {gamma}")));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::input(format!("eps must be positive, got {eps}")));
        }
        Ok(UncertaintyModel { gamma, eps })
    }

    /// `R̂ + γI`
    pub fn loaded(&self, r_hat: &HermitianMatrix) -> HermitianMatrix {
        r_hat.add_identity(self.gamma)
    }
}

fn check_dim(w: &BeamWeights, m: &HermitianMatrix) -> Result<()> {
    if w.dim() != m.dim() {
        return Err(Error::input(format!(
            "weight length {} does not match matrix dimension {}",
            w.dim(),
            m.dim()
        )));
    }
    Ok(())
}

/// `wᴴR_s w / wᴴR_in w`
pub fn output_sinr(w: &BeamWeights, rs: &HermitianMatrix, r_in: &HermitianMatrix) -> Result<f64> {
    check_dim(w, rs)?;
    check_dim(w, r_in)?;
    let den = r_in.quad_form(w.as_slice());
    if !(den > 0.0) {
        return Err(Error::domain("interference-plus-noise power is not positive"));
    }
    Ok(rs.quad_form(w.as_slice()) / den)
}

/// Maximum SINR and its beamvector: the principal generalized eigenpair of
/// `(R_s, R_in)`.
pub fn optimal_sinr(rs: &HermitianMatrix, r_in: &HermitianMatrix) -> Result<(f64, BeamWeights)> {
    if rs.dim() != r_in.dim() {
        return Err(Error::input("dimension mismatch"));
    }
    let isq = r_in.inv_sqrt_pd()?;
    let whitened = isq.to_cmatrix().congruence(rs);
    let e = whitened.eig();
    let w = isq.mul_vec(&e.vectors[0]);
    Ok((e.values[0], BeamWeights::canonical(w, r_in)?))
}

/// Principal generalized eigenvector of `(R̂_s, R̂ + γI)`: the beamformer that
/// trusts the presumed matrices.
pub fn plugin_beamformer(r_hat: &HermitianMatrix, rs_hat: &HermitianMatrix, gamma: f64) -> Result<BeamWeights> {
    if !(gamma >= 0.0) {
        return Err(Error::input("gamma must be nonnegative"));
    }
    Ok(optimal_sinr(rs_hat, &r_hat.add_identity(gamma))?.1)
}

/// `min wᴴ(R̂_s + Δ)w` over `‖Δ‖ ≤ ε`, `R̂_s + Δ ⪰ 0`.
pub fn worst_case_numerator(w: &BeamWeights, rs_hat: &HermitianMatrix, eps: f64) -> Result<f64> {
    worst_case_numerator_with(w, rs_hat, eps, &SolverOptions::default())
}

pub fn worst_case_numerator_with(
    w: &BeamWeights,
    rs_hat: &HermitianMatrix,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    check_dim(w, rs_hat)?;
    let sol = solve_inner(&w.outer(), rs_hat, eps, opts)?;
    // The minimizer keeps R̂_s + Δ PSD, so the exact value is never negative.
    Ok(sol.value.max(0.0))
}

/// Worst-case numerator over the worst-case denominator `wᴴR̂w + γ‖w‖²`.
pub fn worst_case_sinr(
    w: &BeamWeights,
    r_hat: &HermitianMatrix,
    rs_hat: &HermitianMatrix,
    u: UncertaintyModel,
) -> Result<f64> {
    check_dim(w, r_hat)?;
    let den = r_hat.quad_form(w.as_slice()) + u.gamma * w.norm_sqr();
    if !(den > 0.0) {
        return Err(Error::domain("worst-case denominator is not positive"));
    }
    Ok(worst_case_numerator(w, rs_hat, u.eps)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sinr_identity_and_invariance() {
        let w = BeamWeights::new(vec![c(1.0, 2.0), c(-0.5, 0.1), c(0.0, 3.0)]).unwrap();
        let i3 = HermitianMatrix::identity(3);
        assert!((output_sinr(&w, &i3, &i3).unwrap() - 1.0).abs() < 1e-15);

        let mut rng = random::rng_for(3);
        let rs = random::psd_of_rank(&mut rng, 3, 2);
        let rin = random::positive_definite(&mut rng, 3, 0.5);
        let rot = C64::from_polar(5.0, std::f64::consts::FRAC_PI_3);
        let w2 = BeamWeights::new(w.as_slice().iter().map(|z| z * rot).collect()).unwrap();
        let a = output_sinr(&w, &rs, &rin).unwrap();
        let b = output_sinr(&w2, &rs, &rin).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn sinr_of_matched_filter() {
        let a = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let n = norm_sqr(&a).sqrt();
        let w = BeamWeights::new(a.iter().map(|z| z / n).collect()).unwrap();
        let v = output_sinr(&w, &HermitianMatrix::outer(&a), &HermitianMatrix::identity(4)).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_weights() {
        assert!(BeamWeights::new(vec![c(0.0, 0.0); 3]).is_err());
        assert!(BeamWeights::new(vec![c(f64::NAN, 0.0)]).is_err());
        let w = BeamWeights::new(vec![c(1.0, 0.0)]).unwrap();
        let zero = HermitianMatrix::zeros(1);
        assert!(matches!(output_sinr(&w, &zero, &zero), Err(Error::Domain(_))));
    }

    #[test]
    fn optimal_sinr_examples() {
        let (v, w) = optimal_sinr(&HermitianMatrix::diag(&[2.0, 1.0]), &HermitianMatrix::identity(2)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((w.as_slice()[0] - c(1.0, 0.0)).norm() < 1e-12 && w.as_slice()[1].norm() < 1e-12);

        let (v, _) = optimal_sinr(&HermitianMatrix::identity(2), &HermitianMatrix::diag(&[1.0, 4.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let a: Vec<C64> = (0..5).map(|k| C64::from_polar(1.0, 0.7 * k as f64)).collect();
        let (v, w) = optimal_sinr(&HermitianMatrix::outer(&a), &HermitianMatrix::identity(5)).unwrap();
        assert!((v - 5.0).abs() < 1e-10);
        let got = output_sinr(&w, &HermitianMatrix::outer(&a), &HermitianMatrix::identity(5)).unwrap();
        assert!((got - v).abs() < 1e-8);

        assert!(optimal_sinr(&HermitianMatrix::identity(2), &HermitianMatrix::diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn plugin_for_rank_one_pencil() {
        let mut rng = random::rng_for(11);
        let r_hat = random::psd_of_rank(&mut rng, 4, 4);
        let a = random::complex_normal_vec(&mut rng, 4);
        let gamma = 0.3;
        let w = plugin_beamformer(&r_hat, &HermitianMatrix::outer(&a), gamma).unwrap();
        let loaded = r_hat.add_identity(gamma);
        let expect = loaded.inverse_pd().unwrap().mul_vec(&a);
        let expect = BeamWeights::canonical(expect, &loaded).unwrap();
        for (x, y) in w.as_slice().iter().zip(expect.as_slice()) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn canonical_form() {
        let a = HermitianMatrix::diag(&[2.0, 3.0]);
        let w = BeamWeights::canonical(vec![c(0.0, 0.0), c(0.0, -2.0)], &a).unwrap();
        assert!((a.quad_form(w.as_slice()) - 1.0).abs() < 1e-14);
        assert_eq!(w.as_slice()[1].im, 0.0);
        assert!(w.as_slice()[1].re > 0.0);
    }

    #[test]
    fn scalar_worst_case() {
        let w = BeamWeights::new(vec![c(1.0, 0.0)]).unwrap();
        let rs = HermitianMatrix::diag(&[3.0]);
        assert!((worst_case_numerator(&w, &rs, 1.0).unwrap() - 2.0).abs() < 1e-7);
        assert!(worst_case_numerator(&w, &rs, 5.0).unwrap().abs() < 1e-7);

        let r_hat = HermitianMatrix::diag(&[0.5]);
        let u = UncertaintyModel::new(0.5, 1.0).unwrap();
        assert!((worst_case_sinr(&w, &r_hat, &rs, u).unwrap() - 2.0).abs() < 1e-7);
    }

    #[test]
    fn tiny_eps_recovers_nominal_numerator() {
        let mut rng = random::rng_for(5);
        let rs = random::psd_of_rank(&mut rng, 3, 2);
        let w = BeamWeights::new(random::complex_normal_vec(&mut rng, 3)).unwrap();
        let got = worst_case_numerator(&w, &rs, 1e-8).unwrap();
        let nominal = rs.quad_form(w.as_slice());
        assert!((got - nominal).abs() <= 1e-6 * nominal.max(1.0));
    }

    #[test]
    fn uncertainty_validation() {
        assert!(UncertaintyModel::new(0.0, 1.0).is_err());
        assert!(UncertaintyModel::new(1.0, -1.0).is_err());
        assert!(UncertaintyModel::new(1.0, f64::INFINITY).is_err());
    }
}
