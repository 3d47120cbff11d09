//! The robust beamformer: solve the relaxation, then recover a rank-one
//! solution either directly, from a certificate, or by decomposition followed
//! by a per-branch inner solve.

use rayon::prelude::*;

use crate::beamformer::{BeamWeights, UncertaintyModel};
use crate::certificate::{check_certificates, construct_rank_one_certificate, CertificateReport};
use crate::conic::{check_kkt, solve_inner, solve_relaxation, ConicSolution, RelaxationProblem, SolverOptions};
use crate::decomposition::{numeric_rank, rank_one_decompose};
use crate::error::Result;
use crate::hermitian::{HermitianMatrix, C64};

#[derive(Clone, Debug)]
pub struct Algorithm1Options {
    pub solver: SolverOptions,
    /// Relative eigenvalue threshold for the rank of `W*`.
    pub rank_tol: f64,
    /// `λ₂/λ₁` inside this interval counts as borderline: both the direct and
    /// the decomposition path run.
    pub borderline: (f64, f64),
    /// Absolute tie window (scaled by `max(1, |best|)`) when picking a branch.
    pub tie_tol: f64,
    pub parallel: bool,
}

impl Default for Algorithm1Options {
    fn default() -> Self {
        Algorithm1Options {
            solver: SolverOptions::default(),
            rank_tol: 1e-6,
            borderline: (1e-7, 1e-5),
            tie_tol: 1e-9,
            parallel: true,
        }
    }
}

/// How the returned beamvector was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recovery {
    /// Principal eigenvector of a rank-one `W*`.
    Direct,
    /// A decomposition vector passing the certificate test.
    Certificate,
    /// Best branch of the decomposition of `W*`.
    Branch,
}

#[derive(Clone, Debug)]
pub struct Algorithm1Diagnostics {
    pub relaxation_value: f64,
    pub rank_of_w: usize,
    /// `λ₂(W*)/λ₁(W*)`
    pub eig_ratio: f64,
    /// Inner-problem value for each decomposition branch; empty when the
    /// decomposition path did not run.
    pub per_branch_values: Vec<f64>,
    pub selected_index: usize,
    /// Compact complementarity residual of each branch against `(z*, Z*)`.
    pub branch_residuals: Vec<f64>,
    pub certificate: CertificateReport,
    pub achieved_value: f64,
    pub recovery: Recovery,
    pub relaxation: ConicSolution,
}

struct Candidate {
    w: BeamWeights,
    value: f64,
    recovery: Recovery,
}

/// Runs the full procedure for sample covariance `r_hat` and presumed signal
/// covariance `rs_hat`. The result is canonical: `wᴴ(R̂ + γI)w = 1`.
pub fn algorithm1(
    r_hat: &HermitianMatrix,
    rs_hat: &HermitianMatrix,
    u: UncertaintyModel,
    opts: &Algorithm1Options,
) -> Result<(BeamWeights, Algorithm1Diagnostics)> {
    let a = u.loaded(r_hat);
    let problem = RelaxationProblem::new(rs_hat.clone(), a.clone(), u.eps)?;
    let sol = solve_relaxation(&problem, &opts.solver)?;
    let v_star = sol.primal_value;

    let e = sol.w.eig();
    let rank = numeric_rank(&sol.w, opts.rank_tol)?;
    let ratio = if e.values.len() > 1 && e.values[0] > 0.0 { e.values[1].max(0.0) / e.values[0] } else { 0.0 };
    let borderline = ratio >= opts.borderline.0 && ratio <= opts.borderline.1;

    let mut candidates: Vec<Candidate> = Vec::new();

    if rank == 1 || borderline {
        let v: Vec<C64> = e.vectors[0].iter().map(|z| z * e.values[0].sqrt()).collect();
        let w = BeamWeights::canonical(v, &a)?;
        let value = inner_value(&w, rs_hat, u.eps, &opts.solver)?;
        candidates.push(Candidate { w, value, recovery: Recovery::Direct });
    }

    let mut certificate = check_certificates(&sol.w, &sol.y, v_star, rs_hat, r_hat, u);
    if rank >= 2 {
        if let Some(w) = construct_rank_one_certificate(&sol.w, &sol.y, &a, &sol.z_mat)? {
            certificate.constructed_optimal = true;
            let value = inner_value(&w, rs_hat, u.eps, &opts.solver)?;
            candidates.push(Candidate { w, value, recovery: Recovery::Certificate });
        }
    } else {
        certificate.constructed_optimal = true;
    }

    let mut per_branch_values = Vec::new();
    let mut branch_residuals = Vec::new();
    let mut selected_index = 0;
    let need_branches = (rank >= 2 && !certificate.constructed_optimal) || borderline;
    if need_branches {
        let tol = if borderline { opts.borderline.0 } else { opts.rank_tol };
        let d = rank_one_decompose(&sol.w, &a, &sol.z_mat, tol)?;
        let r = d.rank as f64;
        let eval = |v: &Vec<C64>| -> Result<(Vec<C64>, f64, f64)> {
            let scaled: Vec<C64> = v.iter().map(|z| z * r.sqrt()).collect();
            let wf = HermitianMatrix::outer(&scaled);
            let inner = solve_inner(&wf, rs_hat, u.eps, &opts.solver)?;
            let probe = ConicSolution {
                t: inner.y.frob_norm(),
                w: wf,
                y: inner.y,
                z: sol.z,
                z_mat: sol.z_mat.clone(),
                primal_value: inner.value,
                dual_value: sol.z,
                residuals: Default::default(),
                iterations: 0,
                degraded: false,
            };
            let compact = check_kkt(&probe, &problem).r_compact;
            Ok((scaled, inner.value, compact))
        };
        let results: Vec<Result<(Vec<C64>, f64, f64)>> = if opts.parallel {
            d.vectors.par_iter().map(eval).collect()
        } else {
            d.vectors.iter().map(eval).collect()
        };
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;
        per_branch_values = results.iter().map(|r| r.1).collect();
        branch_residuals = results.iter().map(|r| r.2).collect();
        selected_index = pick(&per_branch_values, opts.tie_tol);
        let (vec, value, _) = results.into_iter().nth(selected_index).expect("nonempty branch list");
        // The value is homogeneous in W; rescale it to the canonical norm.
        let q = a.quad_form(&vec);
        let w = BeamWeights::canonical(vec, &a)?;
        candidates.push(Candidate { w, value: value / q, recovery: Recovery::Branch });
    }

    let best = pick(&candidates.iter().map(|c| c.value).collect::<Vec<_>>(), opts.tie_tol);
    let chosen = candidates.swap_remove(best);
    let diag = Algorithm1Diagnostics {
        relaxation_value: v_star,
        rank_of_w: rank,
        eig_ratio: ratio,
        per_branch_values,
        selected_index,
        branch_residuals,
        certificate,
        achieved_value: chosen.value.max(0.0),
        recovery: chosen.recovery,
        relaxation: sol,
    };
    Ok((chosen.w, diag))
}

fn inner_value(w: &BeamWeights, rs_hat: &HermitianMatrix, eps: f64, opts: &SolverOptions) -> Result<f64> {
    Ok(solve_inner(&w.outer(), rs_hat, eps, opts)?.value)
}

/// Lowest index whose value is within the tie window of the maximum.
fn pick(values: &[f64], tie_tol: f64) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let window = tie_tol * best.abs().max(1.0);
    values.iter().position(|&v| v >= best - window).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamformer::optimal_sinr;
    use crate::random;

    #[test]
    fn scalar_case() {
        let u = UncertaintyModel::new(0.5, 1.0).unwrap();
        let (w, d) = algorithm1(
            &HermitianMatrix::diag(&[0.5]),
            &HermitianMatrix::diag(&[3.0]),
            u,
            &Algorithm1Options::default(),
        )
        .unwrap();
        assert!((w.as_slice()[0].re - 1.0).abs() < 1e-8);
        assert!((d.achieved_value - 2.0).abs() < 1e-6);
        assert!((d.relaxation_value - 2.0).abs() < 1e-6);
        assert_eq!(d.rank_of_w, 1);
        assert!(d.certificate.thm42_holds);
    }

    #[test]
    fn vanishing_eps_gives_generalized_eigenvector() {
        let mut rng = random::rng_for(21);
        let r_hat = random::psd_of_rank(&mut rng, 4, 6);
        let rs = random::psd_of_rank(&mut rng, 4, 2);
        let u = UncertaintyModel::new(0.2, 1e-8).unwrap();
        let (w, d) = algorithm1(&r_hat, &rs, u, &Algorithm1Options::default()).unwrap();
        let (best, wopt) = optimal_sinr(&rs, &u.loaded(&r_hat)).unwrap();
        assert_eq!(d.rank_of_w, 1);
        assert!((d.achieved_value - best).abs() <= 1e-5 * best);
        let overlap = crate::hermitian::dot(w.as_slice(), wopt.as_slice()).norm();
        let scale = (w.norm_sqr() * wopt.norm_sqr()).sqrt();
        assert!((overlap / scale - 1.0).abs() < 1e-5);
    }

    #[test]
    fn branch_selection_is_deterministic() {
        assert_eq!(pick(&[1.0, 2.0, 2.0 - 1e-12, 0.5], 1e-9), 1);
        assert_eq!(pick(&[2.0 - 1e-12, 2.0], 1e-9), 0);
        assert_eq!(pick(&[-3.0], 1e-9), 0);
    }

    #[test]
    fn achieved_never_exceeds_relaxation() {
        let mut rng = random::rng_for(8);
        for n in [3, 5] {
            let r_hat = random::psd_of_rank(&mut rng, n, 2 * n);
            let rs = random::psd_of_rank(&mut rng, n, 3);
            let u = UncertaintyModel::new(0.5, 0.3 * rs.frob_norm()).unwrap();
            let (w, d) = algorithm1(&r_hat, &rs, u, &Algorithm1Options::default()).unwrap();
            assert!(d.achieved_value <= d.relaxation_value + 1e-6);
            assert!((u.loaded(&r_hat).quad_form(w.as_slice()) - 1.0).abs() < 1e-8);
            if !d.per_branch_values.is_empty() {
                let m = d.per_branch_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert!(d.per_branch_values[d.selected_index] >= m - 1e-9 * m.abs().max(1.0));
            }
        }
    }
}
