//! Rank-one decomposition of a PSD matrix that equalizes two quadratic forms.
//!
//! Given `X ⪰ 0` of rank `R` and Hermitian `A`, `B`, produce
//! `X = Σ x_r x_rᴴ` with `x_rᴴ A x_r = tr(AX)/R` and `x_rᴴ B x_r = tr(BX)/R`.
//!
//! Writing `X = V Vᴴ` with `V` of full column rank, every decomposition is
//! `x_r = V u_r` for an orthonormal basis `{u_r}` of `ℂᴿ`. The construction
//! works on the compressed, trace-shifted forms `Ã = VᴴAV − a·I` and
//! `B̃ = VᴴBV − b·I` and rotates pairs of basis vectors:
//!
//! 1. while some `u_i` has `u_iᴴÃu_i > 0` and some `u_j` has `u_jᴴÃu_j < 0`,
//!    replace the pair by `(u_i + c u_j, −c̄ u_i + u_j)/√(1+|c|²)` with `c`
//!    chosen so the first vector has zero `Ã`-form; that vector is then fixed.
//! 2. repeat with `B̃`, now restricting the phase of `c` so the `Ã`-form of
//!    the new pair stays zero.
//!
//! Each update fixes one vector, so at most `2(R − 1)` updates are needed.

use crate::error::{Error, Result};
use crate::hermitian::{dot, norm, HermitianMatrix, C64, DEFAULT_PSD_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionResult {
    pub vectors: Vec<Vec<C64>>,
    pub rank: usize,
}

impl DecompositionResult {
    pub fn reconstruct(&self, n: usize) -> HermitianMatrix {
        self.vectors
            .iter()
            .fold(HermitianMatrix::zeros(n), |acc, v| acc.add(&HermitianMatrix::outer(v)))
    }
}

/// Number of eigenvalues above `rel_tol · λ₁(X)`; zero for `X = 0`.
pub fn numeric_rank(x: &HermitianMatrix, rel_tol: f64) -> Result<usize> {
    let e = x.eig();
    check_psd(&e.values)?;
    Ok(rank_of(&e.values, rel_tol))
}

fn check_psd(values: &[f64]) -> Result<()> {
    let top = values[0].abs().max(values.last().unwrap().abs());
    if *values.last().unwrap() < -1e-8 * top.max(f64::MIN_POSITIVE) && top > 0.0 {
        return Err(Error::domain(format!(
            "matrix is not PSD (lambda_min = {:.3e})",
            values.last().unwrap()
        )));
    }
    Ok(())
}

fn rank_of(values: &[f64], rel_tol: f64) -> usize {
    let top = values[0];
    if !(top > 0.0) {
        return 0;
    }
    values.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Small dense R×R compressed form with an explicit basis.
struct Compressed {
    r: usize,
    /// Row-major R×R Hermitian entries.
    a: Vec<C64>,
    b: Vec<C64>,
}

impl Compressed {
    fn form(m: &[C64], r: usize, u: &[C64], v: &[C64]) -> C64 {
        // uᴴ M v
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..r {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..r {
                row += m[i * r + j] * v[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }
}

/// Which compressed form a pass equalizes.
#[derive(Clone, Copy)]
enum Pass {
    A,
    B,
}

/// `D(X, A, B)`. `rank_tol` is the relative eigenvalue threshold defining the
/// rank of `X`.
pub fn rank_one_decompose(
    x: &HermitianMatrix,
    a: &HermitianMatrix,
    b: &HermitianMatrix,
    rank_tol: f64,
) -> Result<DecompositionResult> {
    let n = x.dim();
    if a.dim() != n || b.dim() != n {
        return Err(Error::input("dimension mismatch in rank-one decomposition"));
    }
    let e = x.eig();
    if !x.is_psd(DEFAULT_PSD_TOL.max(1e-8)) {
        return Err(Error::domain("matrix to decompose is not PSD"));
    }
    let r = rank_of(&e.values, rank_tol);
    if r == 0 {
        return Err(Error::domain("matrix to decompose is zero"));
    }

    // Columns of V: √λ_k v_k.
    let cols: Vec<Vec<C64>> = (0..r)
        .map(|k| e.vectors[k].iter().map(|z| z * e.values[k].sqrt()).collect())
        .collect();
    let compress = |m: &HermitianMatrix| -> Vec<C64> {
        let mcols: Vec<Vec<C64>> = cols.iter().map(|c| m.mul_vec(c)).collect();
        let mut out = vec![C64::new(0.0, 0.0); r * r];
        for i in 0..r {
            for j in 0..r {
                out[i * r + j] = dot(&cols[i], &mcols[j]);
            }
        }
        out
    };
    let mut ca = compress(a);
    let mut cb = compress(b);
    let ta: f64 = (0..r).map(|i| ca[i * r + i].re).sum::<f64>() / r as f64;
    let tb: f64 = (0..r).map(|i| cb[i * r + i].re).sum::<f64>() / r as f64;
    for i in 0..r {
        ca[i * r + i] -= ta;
        cb[i * r + i] -= tb;
    }
    let scale_a = ca.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() + ta.abs();
    let scale_b = cb.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() + tb.abs();
    let comp = Compressed { r, a: ca, b: cb };

    let mut basis: Vec<Vec<C64>> = (0..r)
        .map(|k| {
            let mut v = vec![C64::new(0.0, 0.0); r];
            v[k] = C64::new(1.0, 0.0);
            v
        })
        .collect();

    let cap = 4 * r;
    let mut steps = 0;
    for (pass, scale) in [(Pass::A, scale_a), (Pass::B, scale_b)] {
        equalize(&comp, &mut basis, pass, 1e-13 * scale.max(f64::MIN_POSITIVE), &mut steps, cap)?;
    }

    let vectors: Vec<Vec<C64>> = basis
        .iter()
        .map(|u| {
            let mut xv = vec![C64::new(0.0, 0.0); n];
            for (k, uk) in u.iter().enumerate() {
                for (xi, ci) in xv.iter_mut().zip(&cols[k]) {
                    *xi += ci * uk;
                }
            }
            canonical_phase(xv)
        })
        .collect();

    // Post-condition check on the original data.
    let ta_full = a.inner(x) / r as f64;
    let tb_full = b.inner(x) / r as f64;
    let xscale = x.trace() / r as f64;
    let ra = spectral_radius(a) * xscale;
    let rb = spectral_radius(b) * xscale;
    let mut worst = 0.0f64;
    for v in &vectors {
        worst = worst.max((a.quad_form(v) - ta_full).abs() / ra.max(ta_full.abs()).max(1e-300));
        worst = worst.max((b.quad_form(v) - tb_full).abs() / rb.max(tb_full.abs()).max(1e-300));
    }
    if worst > 1e-8 && (ra > 0.0 || rb > 0.0) {
        return Err(Error::Decomposition { steps, residual: worst });
    }
    Ok(DecompositionResult { vectors, rank: r })
}

fn spectral_radius(m: &HermitianMatrix) -> f64 {
    let e = m.eig();
    e.max().abs().max(e.min().abs())
}

/// First entry with non-negligible modulus made real and positive.
pub(crate) fn canonical_phase(mut v: Vec<C64>) -> Vec<C64> {
    let scale = norm(&v);
    if scale == 0.0 {
        return v;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let rot = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        // Exact zero imaginary part on the pivot entry.
        if let Some(p) = v.iter_mut().find(|z| z.norm() > 1e-12 * scale) {
            *p = C64::new(p.norm(), 0.0);
        }
    }
    v
}

fn equalize(
    comp: &Compressed,
    basis: &mut [Vec<C64>],
    pass: Pass,
    tol: f64,
    steps: &mut usize,
    cap: usize,
) -> Result<()> {
    let r = comp.r;
    let (m, other) = match pass {
        Pass::A => (&comp.a, None),
        Pass::B => (&comp.b, Some(&comp.a)),
    };
    let mut active: Vec<usize> = (0..r).collect();
    loop {
        if active.len() < 2 {
            return Ok(());
        }
        let vals: Vec<f64> =
            active.iter().map(|&k| Compressed::form(m, r, &basis[k], &basis[k]).re).collect();
        // Already-equalized vectors leave the active set.
        let (hi_pos, hi) = argmax(&vals);
        let (lo_pos, lo) = argmin(&vals);
        if hi <= tol && lo >= -tol {
            return Ok(());
        }
        if !(hi > 0.0 && lo < 0.0) {
            // Roundoff left one side empty; the residual is below reach.
            return Ok(());
        }
        if *steps >= cap {
            return Err(Error::Decomposition { steps: *steps, residual: hi.max(-lo) });
        }
        let (i, j) = (active[hi_pos], active[lo_pos]);
        let alpha = Compressed::form(m, r, &basis[i], &basis[j]);
        let c = match other {
            None => solve_free_phase(hi, lo, alpha),
            Some(a) => {
                let alpha_a = Compressed::form(a, r, &basis[i], &basis[j]);
                solve_restricted_phase(hi, lo, alpha, alpha_a)
            }
        };
        let s = 1.0 / (1.0 + c.norm_sqr()).sqrt();
        let ui = basis[i].clone();
        let uj = basis[j].clone();
        basis[i] = ui.iter().zip(&uj).map(|(p, q)| (p + c * q) * s).collect();
        basis[j] = ui.iter().zip(&uj).map(|(p, q)| (-c.conj() * p + q) * s).collect();
        *steps += 1;
        active.retain(|&k| k != i);
    }
}

/// `c` with `hi + |c|² lo + 2 Re(c α) = 0`, smallest modulus.
fn solve_free_phase(hi: f64, lo: f64, alpha: C64) -> C64 {
    let mag = alpha.norm();
    // Phase making Re(cα) = −|c||α| yields the smaller positive root.
    let phase = if mag > 0.0 { -(alpha.conj() / mag) } else { C64::new(1.0, 0.0) };
    let r = positive_root(hi, lo, -mag);
    phase * r
}

/// Same equation for the second form, with the phase of `c` constrained so
/// that `Re(c α_a) = 0` keeps the first form at zero.
fn solve_restricted_phase(hi: f64, lo: f64, alpha: C64, alpha_a: C64) -> C64 {
    let ma = alpha_a.norm();
    if ma <= 1e-300 {
        return solve_free_phase(hi, lo, alpha);
    }
    // Candidates: c ∝ ±j·conj(α_a)/|α_a|.
    let base = C64::new(0.0, 1.0) * alpha_a.conj() / ma;
    let mut best: Option<(f64, C64)> = None;
    for phase in [base, -base] {
        let rho = (phase * alpha).re;
        let r = positive_root(hi, lo, rho);
        let better = match best {
            None => true,
            Some((br, bp)) => r < br || (r == br && phase.arg() < bp.arg()),
        };
        if better {
            best = Some((r, phase));
        }
    }
    let (r, phase) = best.expect("two candidates");
    phase * r
}

/// Positive root of `lo·r² + 2ρ r + hi = 0` for `hi > 0 > lo`.
fn positive_root(hi: f64, lo: f64, rho: f64) -> f64 {
    let l = -lo;
    let disc = (rho * rho + l * hi).sqrt();
    // r = (ρ + √(ρ² + l·hi)) / l, written stably for ρ < 0.
    if rho >= 0.0 {
        (rho + disc) / l
    } else {
        hi / (disc - rho)
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, x)| if x > b.1 { (i, x) } else { b })
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, x)| if x < b.1 { (i, x) } else { b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numeric_rank(&HermitianMatrix::identity(4), 1e-6).unwrap(), 4);
        let w = [c(1.0, 1.0), c(0.0, -2.0), c(0.5, 0.0)];
        assert_eq!(numeric_rank(&HermitianMatrix::outer(&w), 1e-6).unwrap(), 1);
        assert_eq!(numeric_rank(&HermitianMatrix::diag(&[1.0, 1e-12]), 1e-6).unwrap(), 1);
        assert_eq!(numeric_rank(&HermitianMatrix::zeros(3), 1e-6).unwrap(), 0);
        assert!(numeric_rank(&HermitianMatrix::diag(&[1.0, -0.5]), 1e-6).is_err());
    }

    #[test]
    fn rank_one_input_returns_its_vector() {
        let v = vec![c(0.5, 0.5), c(1.0, -2.0)];
        let x = HermitianMatrix::outer(&v);
        let a = HermitianMatrix::diag(&[1.0, -3.0]);
        let d = rank_one_decompose(&x, &a, &HermitianMatrix::identity(2), 1e-9).unwrap();
        assert_eq!(d.rank, 1);
        let got = &d.vectors[0];
        assert!(HermitianMatrix::outer(got).sub(&x).frob_norm() < 1e-12);
        assert_eq!(got[0].im, 0.0);
        assert!(got[0].re > 0.0);
    }

    #[test]
    fn identity_with_indefinite_form() {
        let x = HermitianMatrix::identity(2);
        let a = HermitianMatrix::diag(&[1.0, -1.0]);
        let b = HermitianMatrix::identity(2);
        let d = rank_one_decompose(&x, &a, &b, 1e-9).unwrap();
        assert_eq!(d.rank, 2);
        for v in &d.vectors {
            assert!(a.quad_form(v).abs() < 1e-12);
            assert!((b.quad_form(v) - 1.0).abs() < 1e-12);
        }
        assert!(d.reconstruct(2).sub(&x).frob_norm() < 1e-12);
    }

    #[test]
    fn random_instances_meet_postconditions() {
        let mut rng = random::rng_for(17);
        for trial in 0..40 {
            let n = 2 + trial % 7;
            let rank = 1 + trial % n;
            let x = random::psd_of_rank(&mut rng, n, rank);
            let a = random::hermitian(&mut rng, n);
            let b = random::hermitian(&mut rng, n);
            let d = rank_one_decompose(&x, &a, &b, 1e-10).unwrap();
            assert_eq!(d.rank, rank);
            assert!(d.reconstruct(n).sub(&x).frob_norm() <= 1e-8 * x.frob_norm().max(1.0));
            let ta = a.inner(&x) / rank as f64;
            let tb = b.inner(&x) / rank as f64;
            for v in &d.vectors {
                assert!((a.quad_form(v) - ta).abs() <= 1e-8 * x.frob_norm().max(1.0) * a.frob_norm());
                assert!((b.quad_form(v) - tb).abs() <= 1e-8 * x.frob_norm().max(1.0) * b.frob_norm());
            }
        }
    }

    #[test]
    fn root_solver_satisfies_equation() {
        for (hi, lo, rho) in [(1.0, -2.0, 0.3), (0.5, -0.1, -4.0), (3.0, -3.0, 0.0)] {
            let r = positive_root(hi, lo, rho);
            assert!(r > 0.0);
            assert!((lo * r * r + 2.0 * rho * r + hi).abs() < 1e-12);
        }
    }
}
