use super::cone::{hmat, hvec, Cone};
use super::ipm::{self, ConeProgram, Iterate};
use super::{ConicSolution, KktReport, RelaxationProblem, SolverOptions};
use crate::error::{Error, Result, SolverFailure};
use crate::hermitian::HermitianMatrix;

fn data_scale(m: &HermitianMatrix) -> f64 {
    let s = m.lambda_max();
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Solves the LMI relaxation and its dual.
///
/// Data are rescaled internally (`A/a`, `R̂_s/r`, `ε/r`) so the embedded
/// solver sees unit-magnitude blocks; the solution is mapped back before the
/// residuals are evaluated on the original data.
pub fn solve_relaxation(problem: &RelaxationProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    let n = problem.dim();
    let n2 = n * n;
    let a_scale = problem.a.trace() / n as f64;
    let r_scale = data_scale(&problem.rs_hat);
    let a = problem.a.scale(1.0 / a_scale);
    let rs = problem.rs_hat.scale(1.0 / r_scale);
    let eps = problem.eps / r_scale;

    // x = [W | S = W − Y | t | Y]
    let dim = 3 * n2 + 1;
    let mut c = vec![0.0; dim];
    c[2 * n2] = eps;
    for (k, v) in hvec(&rs).into_iter().enumerate() {
        c[2 * n2 + 1 + k] = -v;
    }
    let mut rows = Vec::with_capacity(n2 + 1);
    let mut row0 = vec![0.0; dim];
    row0[..n2].copy_from_slice(&hvec(&a));
    rows.push(row0);
    for k in 0..n2 {
        let mut row = vec![0.0; dim];
        row[k] = 1.0;
        row[n2 + k] = -1.0;
        row[2 * n2 + 1 + k] = -1.0;
        rows.push(row);
    }
    let mut b = vec![0.0; n2 + 1];
    b[0] = 1.0;
    let prog = ConeProgram { c, a: rows, b, cones: vec![Cone::Psd(n), Cone::Psd(n), Cone::Soc(n2 + 1)] };

    // Strictly feasible start: W = I/tr(A), Y = 0, t = 1; Z = R̂_s + εI/√(N+1), z large.
    let w0 = HermitianMatrix::scaled_identity(n, 1.0 / a.trace());
    let z0_mat = rs.add_identity(eps / ((n + 1) as f64).sqrt());
    let z0 = 2.0 * z0_mat.lambda_max() / a.lambda_min();
    let mut x = hvec(&w0);
    x.extend(hvec(&w0));
    x.push(1.0);
    x.extend(vec![0.0; n2]);
    let mut y = vec![-z0];
    y.extend(hvec(&z0_mat));
    let mut s = hvec(&a.scale(z0).sub(&z0_mat));
    s.extend(hvec(&z0_mat));
    s.push(eps);
    s.extend(hvec(&z0_mat.sub(&rs)));

    let out = ipm::solve(&prog, Iterate { x, y, s }, opts);
    let it = &out.iterate;
    let w = hmat(&it.x[..n2], n).scale(1.0 / a_scale);
    let ymat = hmat(&it.x[2 * n2 + 1..], n).scale(1.0 / a_scale);
    let t = it.x[2 * n2] / a_scale;
    let z = -it.y[0] * r_scale / a_scale;
    let z_mat = hmat(&it.y[1..], n).scale(r_scale);
    let primal_value = problem.rs_hat.inner(&ymat) - problem.eps * t;

    let mut sol = ConicSolution {
        w,
        y: ymat,
        t,
        z,
        z_mat,
        primal_value,
        dual_value: z,
        residuals: KktReport::default(),
        iterations: out.iterations,
        degraded: out.degraded,
    };
    sol.residuals = check_kkt(&sol, problem);
    if out.converged {
        Ok(sol)
    } else {
        Err(Error::Solver(Box::new(SolverFailure {
            reason: out.reason,
            iterations: out.iterations,
            best: Some(sol),
        })))
    }
}

/// Optimal `Y` of the fixed-weight inner problem together with its dual.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    pub y: HermitianMatrix,
    /// `tr(R̂_s Y) − ε‖Y‖` at the returned `Y`.
    pub value: f64,
    /// Minimizer `Z = R̂_s + Δ₂` of `tr(W Z)` over the uncertainty set.
    pub z_mat: HermitianMatrix,
    /// `tr(W Z)`
    pub dual_value: f64,
    pub iterations: usize,
    pub degraded: bool,
}

/// Maximizes `tr(R̂_s Y) − ε‖Y‖` subject to `W − Y ⪰ 0` for fixed `W`.
pub fn solve_inner(
    w_fixed: &HermitianMatrix,
    rs_hat: &HermitianMatrix,
    eps: f64,
    opts: &SolverOptions,
) -> Result<InnerSolution> {
    let n = w_fixed.dim();
    if rs_hat.dim() != n {
        return Err(Error::input("dimension mismatch between W and R_s"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    if !w_fixed.is_psd(1e-8) {
        return Err(Error::input("fixed weight matrix is not PSD"));
    }
    let n2 = n * n;
    let w_scale = match w_fixed.trace() {
        t if t > 0.0 => t,
        _ => 1.0,
    };
    let r_scale = data_scale(rs_hat);
    let wf = w_fixed.scale(1.0 / w_scale);
    let rs = rs_hat.scale(1.0 / r_scale);
    let eps_s = eps / r_scale;

    // x = [S = W − Y | t | Y]
    let dim = 2 * n2 + 1;
    let mut c = vec![0.0; dim];
    c[n2] = eps_s;
    for (k, v) in hvec(&rs).into_iter().enumerate() {
        c[n2 + 1 + k] = -v;
    }
    let rows: Vec<Vec<f64>> = (0..n2)
        .map(|k| {
            let mut row = vec![0.0; dim];
            row[k] = 1.0;
            row[n2 + 1 + k] = 1.0;
            row
        })
        .collect();
    let prog = ConeProgram { c, a: rows, b: hvec(&wf), cones: vec![Cone::Psd(n), Cone::Soc(n2 + 1)] };

    let y0 = wf.add_identity(-1.0);
    let z0 = rs.add_identity(eps_s / ((n + 1) as f64).sqrt());
    let mut x = hvec(&HermitianMatrix::identity(n));
    x.push(y0.frob_norm() + 1.0);
    x.extend(hvec(&y0));
    let y: Vec<f64> = hvec(&z0).into_iter().map(|v| -v).collect();
    let mut s = hvec(&z0);
    s.push(eps_s);
    s.extend(hvec(&z0.sub(&rs)));

    let out = ipm::solve(&prog, Iterate { x, y, s }, opts);
    let it = &out.iterate;
    let ymat = hmat(&it.x[n2 + 1..], n).scale(w_scale);
    let z_mat = hmat(&it.y, n).scale(-r_scale);
    let value = rs_hat.inner(&ymat) - eps * ymat.frob_norm();
    let sol = InnerSolution {
        dual_value: w_fixed.inner(&z_mat),
        y: ymat,
        value,
        z_mat,
        iterations: out.iterations,
        degraded: out.degraded,
    };
    if out.converged {
        Ok(sol)
    } else {
        Err(Error::Solver(Box::new(SolverFailure {
            reason: format!("inner problem: {}", out.reason),
            iterations: out.iterations,
            best: None,
        })))
    }
}

fn neg_part(x: f64) -> f64 {
    (-x).max(0.0)
}

/// Evaluates the complementarity conditions and feasibility of a candidate
/// primal-dual pair against the problem data.
pub fn check_kkt(sol: &ConicSolution, problem: &RelaxationProblem) -> KktReport {
    let rs = &problem.rs_hat;
    let a = &problem.a;
    let eps = problem.eps;
    let (w, y, zm, z, t) = (&sol.w, &sol.y, &sol.z_mat, sol.z, sol.t);

    let r_comp1 = (eps * t + y.inner(&zm.sub(rs))).abs();
    let slack = a.scale(z).sub(zm);
    let r_comp2 = slack.inner(w).abs();
    let r_comp3 = w.sub(y).inner(zm).abs();
    let quantities = [z, w.inner(zm), y.inner(zm), y.inner(rs) - eps * y.frob_norm()];
    let mut r_compact = 0.0f64;
    for i in 0..quantities.len() {
        for j in (i + 1)..quantities.len() {
            r_compact = r_compact.max((quantities[i] - quantities[j]).abs());
        }
    }

    let r_primal = (a.inner(w) - 1.0)
        .abs()
        .max(neg_part(w.lambda_min()))
        .max(neg_part(w.sub(y).lambda_min()))
        .max((y.frob_norm() - t).max(0.0));
    let r_dual = (zm.sub(rs).frob_norm() - eps)
        .max(0.0)
        .max(neg_part(slack.lambda_min()))
        .max(neg_part(zm.lambda_min()));
    let r_gap = (sol.primal_value - sol.dual_value).abs() / sol.primal_value.abs().max(1.0);

    KktReport { r_comp1, r_comp2, r_comp3, r_compact, r_primal, r_dual, r_gap }
}
