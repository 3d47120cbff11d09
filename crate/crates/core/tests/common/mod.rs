#![allow(dead_code)]

use qmi_beamforming::random::{self, SimRng};
use qmi_beamforming::{HermitianMatrix, C64};
use rand::Rng;

/// Random relaxation instance: sample covariance, presumed signal
/// covariance, loading and radius.
pub struct Instance {
    pub r_hat: HermitianMatrix,
    pub rs_hat: HermitianMatrix,
    pub gamma: f64,
    pub eps: f64,
}

pub fn instance(rng: &mut SimRng, n: usize, eps_factor: f64) -> Instance {
    let r_rank = rng.random_range(1..=2 * n);
    let r_hat = random::psd_of_rank(rng, n, r_rank);
    let s_rank = rng.random_range(1..=n);
    let rs_hat = random::psd_of_rank(rng, n, s_rank);
    let gamma = rng.random_range(0.1..1.0);
    let eps = eps_factor * rs_hat.frob_norm();
    Instance { r_hat, rs_hat, gamma, eps }
}

/// Eigenpairs of a 2×2 Hermitian matrix in closed form, descending.
pub fn eig2(m: &HermitianMatrix) -> [(f64, [C64; 2]); 2] {
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = m.get(0, 1);
    let mid = (a + d) / 2.0;
    let rad = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
    let mut out = [(mid + rad, [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]), (mid - rad, [C64::new(0.0, 0.0), C64::new(1.0, 0.0)])];
    if b.norm() > 1e-300 {
        for (lam, v) in out.iter_mut() {
            // (A − λI)v = 0 with v = (b, λ − a)
            let x = [b, C64::new(*lam - a, 0.0)];
            let nrm = (x[0].norm_sqr() + x[1].norm_sqr()).sqrt();
            *v = [x[0] / nrm, x[1] / nrm];
        }
    } else if d > a {
        out.swap(0, 1);
        out[0].0 = d;
        out[1].0 = a;
    }
    out
}

fn proj_psd(m: &HermitianMatrix) -> HermitianMatrix {
    match m.dim() {
        1 => HermitianMatrix::diag(&[m.get(0, 0).re.max(0.0)]),
        2 => eig2(m).iter().fold(HermitianMatrix::zeros(2), |acc, (lam, v)| {
            acc.add(&HermitianMatrix::outer(v).scale(lam.max(0.0)))
        }),
        _ => panic!("oracle handles N ≤ 2"),
    }
}

/// `min wᴴZw` over `‖Z − R_s‖ ≤ ε`, `Z ⪰ 0`, by bisection on the multiplier
/// of the ball constraint: `Z(μ) = P₊(R_s − wwᴴ/(2μ))`.
pub fn worst_case_oracle(w: &[C64], rs: &HermitianMatrix, eps: f64) -> f64 {
    let ww = HermitianMatrix::outer(w);
    let z_of = |mu: f64| proj_psd(&rs.sub(&ww.scale(1.0 / (2.0 * mu))));
    let dist = |mu: f64| z_of(mu).sub(rs).frob_norm();
    let mut lo = 1e-14;
    if dist(lo) <= eps {
        // The ball reaches matrices annihilating w.
        return ww.inner(&z_of(lo)).max(0.0);
    }
    let mut hi = 1.0;
    while dist(hi) > eps {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if dist(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ww.inner(&z_of(hi))
}

/// Dense grid over `δ ∈ [−ε, ε]` with `r_s + δ ≥ 0`, plus the feasible
/// interval's left endpoint.
pub fn scalar_grid_oracle(w: C64, rs: f64, eps: f64) -> f64 {
    let steps = 200_000;
    (0..=steps)
        .map(|k| -eps + 2.0 * eps * k as f64 / steps as f64)
        .chain(std::iter::once((-eps).max(-rs)))
        .filter(|d| rs + d >= 0.0)
        .map(|d| (rs + d) * w.norm_sqr())
        .fold(f64::INFINITY, f64::min)
}
