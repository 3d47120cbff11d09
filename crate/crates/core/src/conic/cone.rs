//! Cone blocks of the product cone, their Nesterov–Todd scalings, and the
//! Jordan-algebra operations the path-following loop needs.
//!
//! Hermitian PSD blocks are vectorized with the isometry `hvec`: diagonal
//! entries first, then `√2·Re` and `√2·Im` of each strict upper entry, so that
//! `⟨hvec(A), hvec(B)⟩ = tr(AB)`.

use std::f64::consts::SQRT_2;

use crate::hermitian::{CMatrix, HermitianMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// Hermitian PSD matrices of the given order, `order²` reals.
    Psd(usize),
    /// Second-order cone `{(t, u) : ‖u‖ ≤ t}` of the given total dimension.
    Soc(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Psd(n) => n * n,
            Cone::Soc(d) => d,
        }
    }

    /// Barrier degree.
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Psd(n) => n,
            Cone::Soc(_) => 1,
        }
    }

    /// Identity element `e`.
    pub fn identity(&self) -> Vec<f64> {
        match *self {
            Cone::Psd(n) => hvec(&HermitianMatrix::identity(n)),
            Cone::Soc(d) => {
                let mut e = vec![0.0; d];
                e[0] = 1.0;
                e
            }
        }
    }
}

pub fn hvec(m: &HermitianMatrix) -> Vec<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m.get(i, i).re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let z = m.get(i, j);
            out.push(SQRT_2 * z.re);
            out.push(SQRT_2 * z.im);
        }
    }
    out
}

pub fn hmat(v: &[f64], n: usize) -> HermitianMatrix {
    debug_assert_eq!(v.len(), n * n);
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        data[i * n + i] = C64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(v[k], v[k + 1]) / SQRT_2;
            data[i * n + j] = z;
            data[j * n + i] = z.conj();
            k += 2;
        }
    }
    HermitianMatrix::from_raw_symmetrize(n, data)
}

/// Nesterov–Todd scaling of one block: `W s = W⁻ᵀ x = λ`.
#[derive(Clone, Debug)]
pub enum BlockScaling {
    /// `W(U) = Rᴴ U R`, `Wᵀ(U) = R U Rᴴ`; `λ = diag(lambda)`.
    Psd { r: CMatrix, lambda: Vec<f64> },
    /// `W = η (2 v vᵀ − J)`, symmetric.
    Soc { eta: f64, v: Vec<f64>, lambda: Vec<f64> },
}

impl BlockScaling {
    /// `None` when `x` or `s` is not in the interior of the cone.
    pub fn new(cone: Cone, x: &[f64], s: &[f64]) -> Option<Self> {
        match cone {
            Cone::Psd(n) => psd_scaling(n, x, s),
            Cone::Soc(_) => soc_scaling(x, s),
        }
    }

    /// Scaled point `λ` as a cone vector.
    pub fn lambda_vec(&self) -> Vec<f64> {
        match self {
            BlockScaling::Psd { lambda, .. } => hvec(&HermitianMatrix::diag(lambda)),
            BlockScaling::Soc { lambda, .. } => lambda.clone(),
        }
    }

    /// `W u` (applied to dual-space vectors).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BlockScaling::Psd { r, lambda } => hvec(&r.congruence_adj(&hmat(u, lambda.len()))),
            BlockScaling::Soc { eta, v, .. } => soc_w(*eta, v, u),
        }
    }

    /// `Wᵀ u` (maps scaled primal directions back).
    pub fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BlockScaling::Psd { r, lambda } => hvec(&r.congruence(&hmat(u, lambda.len()))),
            BlockScaling::Soc { eta, v, .. } => soc_w(*eta, v, u),
        }
    }

    /// Jordan product `λ ∘ u` with this block's scaled point.
    pub fn lambda_prod(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BlockScaling::Psd { lambda, .. } => {
                let n = lambda.len();
                let um = hmat(u, n);
                let out = HermitianMatrix::from_fn(n, |i, j| um.get(i, j) * (0.5 * (lambda[i] + lambda[j])))
                    .expect("scaled Jordan product stays Hermitian");
                hvec(&out)
            }
            BlockScaling::Soc { lambda, .. } => soc_prod(lambda, u),
        }
    }

    /// Solves `λ ∘ u = r` for `u`.
    pub fn lambda_div(&self, r: &[f64]) -> Vec<f64> {
        match self {
            BlockScaling::Psd { lambda, .. } => {
                let n = lambda.len();
                let rm = hmat(r, n);
                let out = HermitianMatrix::from_fn(n, |i, j| rm.get(i, j) * (2.0 / (lambda[i] + lambda[j])))
                    .expect("scaled Jordan quotient stays Hermitian");
                hvec(&out)
            }
            BlockScaling::Soc { lambda, .. } => {
                let det = lambda[0] * lambda[0] - lambda[1..].iter().map(|x| x * x).sum::<f64>();
                let l1r1: f64 = lambda[1..].iter().zip(&r[1..]).map(|(a, b)| a * b).sum();
                let u0 = (lambda[0] * r[0] - l1r1) / det;
                let mut out = Vec::with_capacity(r.len());
                out.push(u0);
                out.extend(r[1..].iter().zip(&lambda[1..]).map(|(ri, li)| (ri - u0 * li) / lambda[0]));
                out
            }
        }
    }

    /// Largest `α` with `λ + α d` in the cone (`f64::INFINITY` if unbounded).
    pub fn max_step(&self, d: &[f64]) -> f64 {
        match self {
            BlockScaling::Psd { lambda, .. } => {
                let n = lambda.len();
                let dm = hmat(d, n);
                let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
                let scaled = HermitianMatrix::from_fn(n, |i, j| dm.get(i, j) * (inv[i] * inv[j]))
                    .expect("diagonal congruence stays Hermitian");
                let m = scaled.lambda_min();
                if m >= 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / m
                }
            }
            BlockScaling::Soc { lambda, .. } => soc_max_step(lambda, d),
        }
    }
}

fn psd_scaling(n: usize, x: &[f64], s: &[f64]) -> Option<BlockScaling> {
    let xm = hmat(x, n);
    let sm = hmat(s, n);
    let l = xm.cholesky()?;
    // Lᴴ S L = V Σ² Vᴴ, R = L V Σ^{-1/2}.
    let inner = l.congruence_adj(&sm);
    let e = inner.eig();
    if !(e.min() > 0.0) {
        return None;
    }
    let sigma: Vec<f64> = e.values.iter().map(|v| v.sqrt()).collect();
    let mut vmat = CMatrix::zeros(n);
    for (k, vec) in e.vectors.iter().enumerate() {
        let f = 1.0 / sigma[k].sqrt();
        for i in 0..n {
            vmat.set(i, k, vec[i] * f);
        }
    }
    Some(BlockScaling::Psd { r: l.matmul(&vmat), lambda: sigma })
}

fn jdot(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] - a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y).sum::<f64>()
}

fn soc_scaling(x: &[f64], s: &[f64]) -> Option<BlockScaling> {
    let xjx = jdot(x, x);
    let sjs = jdot(s, s);
    if !(x[0] > 0.0 && s[0] > 0.0 && xjx > 0.0 && sjs > 0.0) {
        return None;
    }
    let xn = xjx.sqrt();
    let sn = sjs.sqrt();
    let xb: Vec<f64> = x.iter().map(|v| v / xn).collect();
    let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
    let gamma = ((1.0 + xb.iter().zip(&sb).map(|(a, b)| a * b).sum::<f64>()) / 2.0).sqrt();
    // Normalized NT point w̄ = (x̄ + J s̄) / (2γ).
    let mut wb: Vec<f64> = xb.iter().zip(&sb).map(|(a, b)| (a - b) / (2.0 * gamma)).collect();
    wb[0] = (xb[0] + sb[0]) / (2.0 * gamma);
    let denom = (2.0 * (wb[0] + 1.0)).sqrt();
    let mut v: Vec<f64> = wb.iter().map(|w| w / denom).collect();
    v[0] = (wb[0] + 1.0) / denom;
    let eta = (xjx / sjs).powf(0.25);
    let lambda = soc_w(eta, &v, s);
    Some(BlockScaling::Soc { eta, v, lambda })
}

/// `η (2 v vᵀ − J) u`
fn soc_w(eta: f64, v: &[f64], u: &[f64]) -> Vec<f64> {
    let vu: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
    let mut out: Vec<f64> = v.iter().zip(u).map(|(vi, ui)| eta * (2.0 * vu * vi + ui)).collect();
    out[0] = eta * (2.0 * vu * v[0] - u[0]);
    out
}

fn soc_prod(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    out.push(a.iter().zip(b).map(|(x, y)| x * y).sum());
    out.extend(a[1..].iter().zip(&b[1..]).map(|(ai, bi)| a[0] * bi + b[0] * ai));
    out
}

fn soc_max_step(lambda: &[f64], d: &[f64]) -> f64 {
    // q(α) = a α² + 2 b α + c = J-norm² of λ + α d, c > 0.
    let a = jdot(d, d);
    let b = jdot(lambda, d);
    let c = jdot(lambda, lambda);
    let mut best = f64::INFINITY;
    if a == 0.0 {
        if b < 0.0 {
            best = -c / (2.0 * b);
        }
    } else {
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let q = -(b + b.signum() * disc.sqrt());
            for root in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
                if root > 0.0 && root < best {
                    best = root;
                }
            }
        }
    }
    // The leading coordinate must stay positive as well.
    if d[0] < 0.0 {
        best = best.min(-lambda[0] / d[0]);
    }
    best
}
