//! Primal-dual path-following for small dense conic programs
//!
//! ```text
//! minimize cᵀx  s.t.  A x = b,  x ∈ K        maximize bᵀy  s.t.  Aᵀy + s = c,  s ∈ K
//! ```
//!
//! with `K` a product of Hermitian PSD and second-order cones. Each iteration
//! takes a Mehrotra predictor-corrector step in Nesterov–Todd scaled space and
//! solves the normal equations `A WᵀW Aᵀ Δy = r` by dense Cholesky.

use super::cone::{BlockScaling, Cone};
use super::SolverOptions;

/// Dense conic program in standard form.
#[derive(Clone, Debug)]
pub struct ConeProgram {
    pub c: Vec<f64>,
    /// Constraint matrix, one dense row per equality.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct IpmOutcome {
    pub iterate: Iterate,
    pub iterations: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// Converged only to the degraded tolerance.
    pub degraded: bool,
    /// Reached at least the degraded tolerance.
    pub converged: bool,
    pub reason: String,
    /// Per-iteration `(μ, primal_obj, dual_obj, step)` trace.
    pub trace: Vec<(f64, f64, f64, f64)>,
}

impl ConeProgram {
    fn n(&self) -> usize {
        self.c.len()
    }

    fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    fn blocks(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = (off, off + c.dim());
                off += c.dim();
                r
            })
            .collect()
    }

    fn mul_a(&self, x: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| dotf(row, x)).collect()
    }

    fn mul_at(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (row, yi) in self.a.iter().zip(y) {
            if *yi != 0.0 {
                for (o, r) in out.iter_mut().zip(row) {
                    *o += r * yi;
                }
            }
        }
        out
    }

    fn validate(&self, it: &Iterate) {
        let total: usize = self.cones.iter().map(Cone::dim).sum();
        assert_eq!(total, self.n(), "cone dimensions must cover c");
        assert!(self.a.iter().all(|r| r.len() == self.n()), "A rows must match c");
        assert_eq!(self.b.len(), self.a.len());
        assert_eq!(it.x.len(), self.n());
        assert_eq!(it.s.len(), self.n());
        assert_eq!(it.y.len(), self.b.len());
    }
}

fn dotf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Scaling {
    blocks: Vec<(usize, usize)>,
    parts: Vec<BlockScaling>,
}

impl Scaling {
    fn new(prog: &ConeProgram, x: &[f64], s: &[f64]) -> Option<Self> {
        let blocks = prog.blocks();
        let parts = prog
            .cones
            .iter()
            .zip(&blocks)
            .map(|(cone, &(lo, hi))| BlockScaling::new(*cone, &x[lo..hi], &s[lo..hi]))
            .collect::<Option<Vec<_>>>()?;
        Some(Scaling { blocks, parts })
    }

    fn map(&self, u: &[f64], f: impl Fn(&BlockScaling, &[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(u.len());
        for (sc, &(lo, hi)) in self.parts.iter().zip(&self.blocks) {
            out.extend(f(sc, &u[lo..hi]));
        }
        out
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.map(u, BlockScaling::apply)
    }

    fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        self.map(u, BlockScaling::apply_t)
    }

    fn lambda(&self) -> Vec<f64> {
        self.parts.iter().flat_map(BlockScaling::lambda_vec).collect()
    }

    fn prod(&self, u: &[f64]) -> Vec<f64> {
        self.map(u, BlockScaling::lambda_prod)
    }

    fn div(&self, r: &[f64]) -> Vec<f64> {
        self.map(r, BlockScaling::lambda_div)
    }

    fn max_step(&self, d: &[f64]) -> f64 {
        self.parts
            .iter()
            .zip(&self.blocks)
            .map(|(sc, &(lo, hi))| sc.max_step(&d[lo..hi]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Jordan product of two scaled-space vectors block by block.
fn jordan(prog: &ConeProgram, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(u.len());
    for (cone, (lo, hi)) in prog.cones.iter().zip(prog.blocks()) {
        let (a, b) = (&u[lo..hi], &v[lo..hi]);
        match *cone {
            Cone::Psd(n) => {
                let am = super::cone::hmat(a, n);
                let bm = super::cone::hmat(b, n);
                let ab = am.matmul(&bm);
                let sym = crate::hermitian::HermitianMatrix::from_fn(n, |i, j| {
                    (ab.get(i, j) + ab.get(j, i).conj()) * 0.5
                })
                .expect("symmetrized product is Hermitian");
                out.extend(super::cone::hvec(&sym));
            }
            Cone::Soc(_) => {
                out.push(dotf(a, b));
                out.extend(a[1..].iter().zip(&b[1..]).map(|(ai, bi)| a[0] * bi + b[0] * ai));
            }
        }
    }
    out
}

/// Dense Cholesky of an SPD matrix in place (lower triangle). Returns false on
/// breakdown.
fn cholesky_in_place(m: &mut [Vec<f64>]) -> bool {
    let k = m.len();
    for j in 0..k {
        let mut d = m[j][j];
        for p in 0..j {
            d -= m[j][p] * m[j][p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        m[j][j] = d;
        for i in (j + 1)..k {
            let mut s = m[i][j];
            for p in 0..j {
                s -= m[i][p] * m[j][p];
            }
            m[i][j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut z = rhs.to_vec();
    for i in 0..k {
        for p in 0..i {
            z[i] -= l[i][p] * z[p];
        }
        z[i] /= l[i][i];
    }
    for i in (0..k).rev() {
        for p in (i + 1)..k {
            z[i] -= l[p][i] * z[p];
        }
        z[i] /= l[i][i];
    }
    z
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dx_scaled: Vec<f64>,
    ds_scaled: Vec<f64>,
}

struct NewtonSystem<'a> {
    prog: &'a ConeProgram,
    scaling: &'a Scaling,
    chol: Vec<Vec<f64>>,
}

impl<'a> NewtonSystem<'a> {
    fn new(prog: &'a ConeProgram, scaling: &'a Scaling) -> Option<Self> {
        let g: Vec<Vec<f64>> = prog.a.iter().map(|row| scaling.apply(row)).collect();
        let m = g.len();
        let mut mat = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v = dotf(&g[i], &g[j]);
                mat[i][j] = v;
                mat[j][i] = v;
            }
        }
        let scale = (0..m).map(|i| mat[i][i]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut attempt = mat.clone();
        if !cholesky_in_place(&mut attempt) {
            // Tiny diagonal regularization when the scaled system is numerically singular.
            attempt = mat;
            for (i, row) in attempt.iter_mut().enumerate() {
                row[i] += 1e-14 * scale;
            }
            if !cholesky_in_place(&mut attempt) {
                return None;
            }
        }
        Some(NewtonSystem { prog, scaling, chol: attempt })
    }

    /// Solves `A dx = rp`, `Aᵀdy + ds = rd`, `λ ∘ (W⁻ᵀdx + W ds) = rc`.
    fn solve(&self, rp: &[f64], rd: &[f64], rc: &[f64]) -> Direction {
        let g = self.scaling.div(rc);
        let w_rd = self.scaling.apply(rd);
        let h = self.scaling.apply_t(&g.iter().zip(&w_rd).map(|(a, b)| a - b).collect::<Vec<_>>());
        let ah = self.prog.mul_a(&h);
        let rhs: Vec<f64> = rp.iter().zip(&ah).map(|(a, b)| a - b).collect();
        let dy = cholesky_solve(&self.chol, &rhs);
        let aty = self.prog.mul_at(&dy);
        let ds: Vec<f64> = rd.iter().zip(&aty).map(|(a, b)| a - b).collect();
        let ds_scaled = self.scaling.apply(&ds);
        let dx_scaled: Vec<f64> = g.iter().zip(&ds_scaled).map(|(a, b)| a - b).collect();
        let dx = self.scaling.apply_t(&dx_scaled);
        Direction { dx, dy, ds, dx_scaled, ds_scaled }
    }
}

/// Runs the path-following method from a strictly interior starting point.
pub fn solve(prog: &ConeProgram, start: Iterate, opts: &SolverOptions) -> IpmOutcome {
    prog.validate(&start);
    let nu = prog.degree() as f64;
    let e: Vec<f64> = prog.cones.iter().flat_map(Cone::identity).collect();
    let b_scale = 1.0 + norm_inf(&prog.b);
    let c_scale = 1.0 + norm_inf(&prog.c);

    let mut it = start;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Iterate, f64, f64)> = None;
    let mut sigma0 = opts.initial_centering;

    let status = |it: &Iterate| {
        let ax = prog.mul_a(&it.x);
        let rp: Vec<f64> = prog.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = prog.mul_at(&it.y);
        let rd: Vec<f64> =
            prog.c.iter().zip(&aty).zip(&it.s).map(|((c, a), s)| c - a - s).collect();
        let pobj = dotf(&prog.c, &it.x);
        let dobj = dotf(&prog.b, &it.y);
        let pinf = norm_inf(&rp) / b_scale;
        let dinf = norm_inf(&rd) / c_scale;
        let comp = dotf(&it.x, &it.s);
        let rel_gap = (pobj - dobj).abs().max(comp.abs()) / pobj.abs().max(1.0);
        (rp, rd, pobj, dobj, pinf, dinf, rel_gap, comp)
    };

    let finish = |it: Iterate, iterations: usize, reason: String, trace, conv: (bool, bool)| {
        let pobj = dotf(&prog.c, &it.x);
        let dobj = dotf(&prog.b, &it.y);
        IpmOutcome {
            iterate: it,
            iterations,
            primal_obj: pobj,
            dual_obj: dobj,
            converged: conv.0,
            degraded: conv.1,
            reason,
            trace,
        }
    };

    for k in 0..=opts.max_iterations {
        let (rp, rd, pobj, dobj, pinf, dinf, rel_gap, comp) = status(&it);
        let merit = pinf.max(dinf).max(rel_gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, it.clone(), pobj, dobj));
        }
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && rel_gap <= opts.gap_tol {
            return finish(it, k, "converged".into(), trace, (true, false));
        }
        if k == opts.max_iterations {
            break;
        }
        let mu = comp / nu;

        let Some(scaling) = Scaling::new(prog, &it.x, &it.s) else {
            break;
        };
        let Some(system) = NewtonSystem::new(prog, &scaling) else {
            break;
        };
        let lambda = scaling.lambda();

        // Affine-scaling predictor.
        let lam_sq = scaling.prod(&lambda);
        let rc_aff: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
        let aff = system.solve(&rp, &rd, &rc_aff);
        let alpha_aff = scaling
            .max_step(&aff.dx_scaled)
            .min(scaling.max_step(&aff.ds_scaled))
            .min(1.0);
        let lx: Vec<f64> =
            lambda.iter().zip(&aff.dx_scaled).map(|(l, d)| l + alpha_aff * d).collect();
        let ls: Vec<f64> =
            lambda.iter().zip(&aff.ds_scaled).map(|(l, d)| l + alpha_aff * d).collect();
        let ratio = (dotf(&lx, &ls) / dotf(&lambda, &lambda)).max(0.0);
        let sigma = (ratio.powi(3)).max(sigma0).min(1.0);
        sigma0 = 0.0;

        // Combined corrector.
        let cross = jordan(prog, &aff.dx_scaled, &aff.ds_scaled);
        let rc: Vec<f64> = lam_sq
            .iter()
            .zip(&cross)
            .zip(&e)
            .map(|((l2, c), ei)| -l2 - c + sigma * mu * ei)
            .collect();
        let dir = system.solve(&rp, &rd, &rc);
        let alpha_max = scaling.max_step(&dir.dx_scaled).min(scaling.max_step(&dir.ds_scaled));
        let alpha = (opts.step_fraction * alpha_max).min(1.0);
        trace.push((mu, pobj, dobj, alpha));
        if !(alpha > 1e-12) {
            break;
        }

        for (x, d) in it.x.iter_mut().zip(&dir.dx) {
            *x += alpha * d;
        }
        for (s, d) in it.s.iter_mut().zip(&dir.ds) {
            *s += alpha * d;
        }
        for (y, d) in it.y.iter_mut().zip(&dir.dy) {
            *y += alpha * d;
        }
    }

    // No full convergence: fall back to the best iterate seen.
    let (merit, best_it, _, _) = best.expect("at least one status evaluation");
    let iterations = trace.len();
    if merit <= opts.degraded_tol {
        finish(best_it, iterations, "converged to degraded tolerance".into(), trace, (true, true))
    } else {
        finish(
            best_it,
            iterations,
            format!("no convergence (best merit {merit:.3e})"),
            trace,
            (false, false),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min x₀ s.t. x₁ = 1, (x₀, x₁) ∈ SOC ⇒ x₀ = 1.
    #[test]
    fn tiny_soc_program() {
        let prog = ConeProgram {
            c: vec![1.0, 0.0],
            a: vec![vec![0.0, 1.0]],
            b: vec![1.0],
            cones: vec![Cone::Soc(2)],
        };
        let start = Iterate { x: vec![2.0, 1.0], y: vec![0.0], s: vec![1.0, 0.0] };
        let out = solve(&prog, start, &SolverOptions::default());
        assert!(out.converged && !out.degraded, "{}", out.reason);
        assert!((out.primal_obj - 1.0).abs() < 1e-7);
        assert!((out.dual_obj - 1.0).abs() < 1e-7);
    }

    /// min tr(C X) s.t. tr(X) = 1, X ⪰ 0 ⇒ λ_min(C).
    #[test]
    fn tiny_psd_program() {
        use crate::conic::cone::hvec;
        use crate::hermitian::{HermitianMatrix, C64};
        let cm = HermitianMatrix::new(
            2,
            vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        )
        .unwrap();
        let prog = ConeProgram {
            c: hvec(&cm),
            a: vec![hvec(&HermitianMatrix::identity(2))],
            b: vec![1.0],
            cones: vec![Cone::Psd(2)],
        };
        let start = Iterate {
            x: hvec(&HermitianMatrix::scaled_identity(2, 0.5)),
            y: vec![0.0],
            s: hvec(&cm),
        };
        let out = solve(&prog, start, &SolverOptions::default());
        assert!(out.converged, "{}", out.reason);
        assert!((out.primal_obj - 1.0).abs() < 1e-7, "{}", out.primal_obj);
    }
}
