//! Seeded random generators for complex test data and snapshot synthesis.
//!
//! All randomness in the crate flows through [`rng_for`], a ChaCha8 stream
//! keyed by a 64-bit seed, so results are reproducible across runs and
//! platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{HermitianMatrix, C64};

pub type SimRng = ChaCha8Rng;

pub fn rng_for(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circular complex Gaussian with unit variance (`E|z|² = 1`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

/// Hermitian matrix with i.i.d. standard entries.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> HermitianMatrix {
    let g: Vec<C64> = (0..n * n).map(|_| complex_normal(rng)).collect();
    HermitianMatrix::from_fn(n, |i, j| (g[i * n + j] + g[j * n + i].conj()) * 0.5)
        .expect("symmetrized Gaussian is Hermitian")
}

/// PSD matrix `G Gᴴ` of the given rank from a Gaussian `N × rank` factor.
pub fn psd_of_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> HermitianMatrix {
    let mut acc = HermitianMatrix::zeros(n);
    for _ in 0..rank {
        acc = acc.add(&HermitianMatrix::outer(&complex_normal_vec(rng, n)));
    }
    acc
}

/// Positive definite matrix with eigenvalues spread over `[lo, lo + spread]`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64) -> HermitianMatrix {
    let m = psd_of_rank(rng, n, n);
    let scale = m.trace() / n as f64;
    m.scale(1.0 / scale).add_identity(lo)
}
