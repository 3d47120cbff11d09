//! Dense complex Hermitian linear algebra.
//!
//! Everything downstream (solver blocks, covariances, certificates) is carried
//! in [`HermitianMatrix`]. Eigendecomposition is cyclic Jacobi with a fixed
//! sweep order, so results are bitwise reproducible for identical inputs.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative asymmetry above which construction is rejected.
const ASYMMETRY_REJECT: f64 = 1e-8;

/// Default relative tolerance for PSD tests.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;

/// `Σ conj(a_i) b_i`
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Dense square complex matrix, row-major. Used where products leave the
/// Hermitian space (scaling factors, Cholesky factors).
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        mul_raw(self.n, &self.data, &other.data).into_cmatrix(self.n)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    /// `Bᴴ H B` for Hermitian `H`, symmetrized.
    pub fn congruence_adj(&self, h: &HermitianMatrix) -> HermitianMatrix {
        let hb = mul_raw(self.n, &h.data, &self.data);
        let bh = self.adjoint();
        HermitianMatrix::from_raw_symmetrize(self.n, mul_raw(self.n, &bh.data, &hb))
    }

    /// `B H Bᴴ` for Hermitian `H`, symmetrized.
    pub fn congruence(&self, h: &HermitianMatrix) -> HermitianMatrix {
        let bh = mul_raw(self.n, &self.data, &h.data);
        let badj = self.adjoint();
        HermitianMatrix::from_raw_symmetrize(self.n, mul_raw(self.n, &bh, &badj.data))
    }
}

trait IntoCMatrix {
    fn into_cmatrix(self, n: usize) -> CMatrix;
}

impl IntoCMatrix for Vec<C64> {
    fn into_cmatrix(self, n: usize) -> CMatrix {
        CMatrix { n, data: self }
    }
}

fn mul_raw(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, bkj) in dst.iter_mut().zip(row) {
                *d += aik * bkj;
            }
        }
    }
    out
}

/// Dense N×N complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

impl EigenPair {
    pub fn max(&self) -> f64 {
        self.values[0]
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("dim >= 1")
    }

    /// `Σ f(λ_k) v_k v_kᴴ`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.values.len();
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            let s = f(*lam);
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v[i] * s;
                for j in 0..n {
                    out[i * n + j] += vi * v[j].conj();
                }
            }
        }
        HermitianMatrix::from_raw_symmetrize(n, out)
    }
}

impl HermitianMatrix {
    /// Builds from row-major entries. Rejects non-finite entries and relative
    /// asymmetry above 1e-8, then symmetrizes.
    pub fn new(n: usize, data: Vec<C64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("matrix dimension must be at least 1"));
        }
        if data.len() != n * n {
            return Err(Error::input(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("matrix has non-finite entries"));
        }
        let scale = data.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in i..n {
                asym = asym.max((data[i * n + j] - data[j * n + i].conj()).norm());
            }
        }
        if asym > ASYMMETRY_REJECT * scale {
            return Err(Error::input(format!(
                "matrix is not Hermitian (asymmetry {asym:.3e})"
            )));
        }
        Ok(Self::from_raw_symmetrize(n, data))
    }

    pub(crate) fn from_raw_symmetrize(n: usize, mut data: Vec<C64>) -> Self {
        for i in 0..n {
            data[i * n + i] = C64::new(data[i * n + i].re, 0.0);
            for j in (i + 1)..n {
                let avg = (data[i * n + j] + data[j * n + i].conj()) * 0.5;
                data[i * n + j] = avg;
                data[j * n + i] = avg.conj();
            }
        }
        HermitianMatrix { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::new(n, data)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("rows must form a square matrix"));
        }
        Self::from_fn(n, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        HermitianMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(s, 0.0);
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = C64::new(*v, 0.0);
        }
        m
    }

    /// `v vᴴ`
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(v[i] * v[j].conj());
            }
        }
        Self::from_raw_symmetrize(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix { n: self.n, data: self.data.clone() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// `vᴴ M v`
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        dot(v, &self.mul_vec(v)).re
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(v.len(), n, "dimension mismatch");
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Product of two Hermitian matrices (generally not Hermitian).
    pub fn matmul(&self, other: &HermitianMatrix) -> CMatrix {
        mul_raw(self.n, &self.data, &other.data).into_cmatrix(self.n)
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        self.axpy(-1.0, other)
    }

    /// `self + a·other`
    pub fn axpy(&self, a: f64, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        HermitianMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + y * a).collect(),
        }
    }

    pub fn add_identity(&self, s: f64) -> HermitianMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += s;
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Cyclic Jacobi eigendecomposition, eigenvalues descending.
    pub fn eig(&self) -> EigenPair {
        jacobi_eig(self)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig().max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig().min()
    }

    /// `λ_min(M) ≥ −tol · max(1, λ_max(|M|))`, where `λ_max(|M|)` is the
    /// spectral radius.
    pub fn is_psd(&self, tol: f64) -> bool {
        let e = self.eig();
        let radius = e.max().abs().max(e.min().abs());
        e.min() >= -tol * radius.max(1.0)
    }

    /// Principal square root of a PSD matrix. Tiny negative eigenvalues
    /// within the default tolerance are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<HermitianMatrix> {
        let e = self.eig();
        let radius = e.max().abs().max(e.min().abs());
        if e.min() < -DEFAULT_PSD_TOL * radius.max(1.0) {
            return Err(Error::domain(format!(
                "matrix is not PSD (lambda_min = {:.3e})",
                e.min()
            )));
        }
        Ok(e.reconstruct_with(|l| l.max(0.0).sqrt()))
    }

    /// Inverse square root of a positive definite matrix.
    pub fn inv_sqrt_pd(&self) -> Result<HermitianMatrix> {
        let e = self.eig();
        if e.min() <= 0.0 {
            return Err(Error::domain(format!(
                "matrix is not positive definite (lambda_min = {:.3e})",
                e.min()
            )));
        }
        Ok(e.reconstruct_with(|l| 1.0 / l.sqrt()))
    }

    pub fn inverse_pd(&self) -> Result<HermitianMatrix> {
        let e = self.eig();
        if e.min() <= 0.0 {
            return Err(Error::domain(format!(
                "matrix is not positive definite (lambda_min = {:.3e})",
                e.min()
            )));
        }
        Ok(e.reconstruct_with(|l| 1.0 / l))
    }

    /// Lower-triangular `L` with `M = L Lᴴ`; `None` unless positive definite.
    pub fn cholesky(&self) -> Option<CMatrix> {
        let n = self.n;
        let mut l = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l.get(j, k).norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l.set(j, j, C64::new(djj, 0.0));
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k).conj();
                }
                l.set(i, j, s / djj);
            }
        }
        Some(l)
    }
}

fn jacobi_eig(m: &HermitianMatrix) -> EigenPair {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = CMatrix::identity(n).data;
    let total: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    if n > 1 && total > 0.0 {
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * 1e-2 * total {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    // Stable sort keeps index order among ties.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    EigenPair {
        values: order.iter().map(|&k| diag[k]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|i| v[i * n + k]).collect()).collect(),
    }
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[p * n + q] = C64::new(0.0, 0.0);
        a[q * n + p] = C64::new(0.0, 0.0);
        return;
    }
    // Phase e^{-iφ} makes the (p,q) entry real, then a real rotation.
    let phase = (apq / r).conj();
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // J = [[c, s], [-s·e^{-iφ}, c·e^{-iφ}]] on columns (p, q): A ← Jᴴ A J.
    let j_pp = C64::new(c, 0.0);
    let j_pq = C64::new(s, 0.0);
    let j_qp = -phase * s;
    let j_qq = phase * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * j_pp + akq * j_qp;
        a[k * n + q] = akp * j_pq + akq * j_qq;
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * j_pp + vkq * j_qp;
        v[k * n + q] = vkp * j_pq + vkq * j_qq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = j_pp.conj() * apk + j_qp.conj() * aqk;
        a[q * n + k] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    a[p * n + q] = C64::new(0.0, 0.0);
    a[q * n + p] = C64::new(0.0, 0.0);
    a[p * n + p] = C64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = C64::new(a[q * n + q].re, 0.0);
}

/// Formats one entry as `re+imj` using shortest round-trip exponent notation.
pub fn format_complex(z: C64) -> String {
    format!("{:e}{:+e}j", z.re, z.im)
}

/// Parses `re+imj`, `re`, or `imj` (e.g. `1.5e0-2e-3j`, `3`, `-2j`).
pub fn parse_complex(tok: &str) -> std::result::Result<C64, String> {
    let t = tok.trim();
    if t.is_empty() {
        return Err("empty entry".into());
    }
    let bad = || format!("malformed complex entry '{tok}'");
    let Some(body) = t.strip_suffix(['j', 'i']) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "+" | "" => "1",
        "-" => "-1",
        s => s,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(C64::new(re, im))
}

impl fmt::Display for HermitianMatrix {
    /// Matrix text format: dimension line, then one whitespace-separated row per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format_complex(self.get(i, j))).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for HermitianMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_matrix_lines(&mut s.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }
}

/// Reads one matrix block from numbered lines, skipping blank lines and `#`
/// comments before the header.
pub(crate) fn parse_matrix_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<HermitianMatrix> {
    let mut header = None;
    for (no, line) in lines.by_ref() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        header = Some((no, l));
        break;
    }
    let (hno, h) = header.ok_or_else(|| Error::parse(0, "missing dimension line"))?;
    let n: usize = h
        .parse()
        .map_err(|_| Error::parse(hno, format!("expected matrix dimension, got '{h}'")))?;
    if n == 0 {
        return Err(Error::parse(hno, "matrix dimension must be at least 1"));
    }
    let mut data = Vec::with_capacity(n * n);
    let mut last = hno;
    for row in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::parse(last + 1, format!("expected {n} rows, got {row}")))?;
        last = no;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != n {
            return Err(Error::parse(no, format!("expected {n} entries, got {}", toks.len())));
        }
        for t in toks {
            data.push(parse_complex(t).map_err(|m| Error::parse(no, m))?);
        }
    }
    HermitianMatrix::new(n, data).map_err(|e| Error::parse(hno, e.to_string()))
}
