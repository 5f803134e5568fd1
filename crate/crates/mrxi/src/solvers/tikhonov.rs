//! Tikhonov (ridge) reconstruction, optionally with a positivity constraint.
//!
//! Unconstrained, the minimizer of `1/2 ‖Kc - g‖² + α‖c‖²` solves the
//! normal equations `(K^T K + 2α I) c = K^T g` directly. With positivity the
//! same ADMM machinery as the TV solver runs with `E = I` and
//! `Ψ = χ_{≥0}`, i.e. the v-update is a plain projection.

use std::time::Instant;

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::solvers::linear::{col_to_vec, norm, vec_to_col, CUpdateSolver, LinOp, DIRECT_SOLVE_MAX_DIM};
use crate::solvers::{AdmmParams, SolverReport, Termination};

/// Relative residual the direct normal-equation solve must reach.
const DIRECT_RESIDUAL_TOL: f64 = 1e-10;

/// Tikhonov solver with a cached Gram matrix, reusable across a
/// regularization sweep (each new `α` refactorizes, the Gram product is
/// shared).
pub struct TikhonovSolver {
    k: Mat<f64>,
    gram: Mat<f64>,
}

impl TikhonovSolver {
    pub fn new(k: &impl LinOp) -> TikhonovSolver {
        let kd = k.to_dense();
        let gram = kd.transpose() * &kd;
        TikhonovSolver { k: kd, gram }
    }

    /// Direct normal-equation solve of the unconstrained problem.
    pub fn solve_unconstrained(&self, g: &[f64], alpha: f64) -> Result<SolverReport> {
        let t0 = Instant::now();
        validate_alpha(alpha)?;
        let (m, n) = (self.k.nrows(), self.k.ncols());
        if g.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "data has {} entries, operator has {m} rows",
                g.len()
            )));
        }
        let mut a = self.gram.clone();
        for i in 0..n {
            a[(i, i)] += 2.0 * alpha;
        }
        let llt: Llt<f64> = a
            .llt(Side::Lower)
            .map_err(|_| Error::SingularSystem("normal equations not positive definite".into()))?;
        let ktg = self.k.transpose() * vec_to_col(g);
        let c_col = llt.solve(&ktg);
        let c = col_to_vec(&c_col);

        // verify the solve really met the residual contract
        let resid = &a * &c_col - &ktg;
        let rel = resid.norm_l2() / ktg.norm_l2().max(1e-300);
        if rel > DIRECT_RESIDUAL_TOL {
            return Err(Error::SingularSystem(format!(
                "normal-equation solve stalled at relative residual {rel:.3e}"
            )));
        }

        let kc = self.k.as_ref() * &c_col;
        let mut mf = 0.0;
        for i in 0..m {
            let d = kc[(i, 0)] - g[i];
            mf += d * d;
        }
        let mf = mf.sqrt();
        let c_norm2: f64 = c.iter().map(|v| v * v).sum();
        Ok(SolverReport {
            method: "tikhonov".into(),
            alpha,
            rho: None,
            iterate: c,
            iterations: 1,
            termination: Termination::Direct,
            objective: vec![0.5 * mf * mf + alpha * c_norm2],
            primal_residual: vec![],
            dual_residual: vec![],
            data_misfit: vec![mf],
            outer_data_misfit: None,
            wall_time: t0.elapsed(),
        })
    }

    /// ADMM with `E = I`: projection onto the nonnegative orthant as the
    /// only prox step; `params.alpha` is the Tikhonov weight.
    pub fn solve_positivity(&self, g: &[f64], params: &AdmmParams) -> Result<SolverReport> {
        let t0 = Instant::now();
        validate_alpha(params.alpha)?;
        params.validate()?;
        let (m, n) = (self.k.nrows(), self.k.ncols());
        if g.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "data has {} entries, operator has {m} rows",
                g.len()
            )));
        }
        let rho = params.rho;
        let alpha = params.alpha;
        let solver = CUpdateSolver::new(
            &self.k,
            &self.gram,
            2.0 * alpha,
            rho,
            None,
            DIRECT_SOLVE_MAX_DIM,
        )?;
        let ktg = col_to_vec(&(self.k.transpose() * vec_to_col(g)));

        let mut c = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut v_prev = vec![0.0; n];
        let mut lambda = vec![0.0; n];
        let mut rhs = vec![0.0; n];

        let mut objective = Vec::new();
        let mut primal_res = Vec::new();
        let mut dual_res = Vec::new();
        let mut misfit = Vec::new();
        let mut termination = Termination::MaxIterations;
        let mut iterations = 0;

        for it in 0..params.max_iterations {
            iterations = it + 1;
            for i in 0..n {
                rhs[i] = ktg[i] + rho * v[i] - lambda[i];
            }
            c = solver.solve(&rhs, &c)?;
            v_prev.copy_from_slice(&v);
            for i in 0..n {
                v[i] = (c[i] + lambda[i] / rho).max(0.0);
            }
            for i in 0..n {
                lambda[i] += rho * (c[i] - v[i]);
            }

            let mut r2 = 0.0;
            let mut s2 = 0.0;
            for i in 0..n {
                let d = c[i] - v[i];
                r2 += d * d;
                let e = v[i] - v_prev[i];
                s2 += e * e;
            }
            let r_norm = r2.sqrt();
            let s_norm = rho * s2.sqrt();

            let kc = self.k.as_ref() * vec_to_col(&c);
            let mut mf = 0.0;
            for i in 0..m {
                let d = kc[(i, 0)] - g[i];
                mf += d * d;
            }
            let mf = mf.sqrt();
            let c_norm2: f64 = c.iter().map(|x| x * x).sum();
            objective.push(0.5 * mf * mf + alpha * c_norm2);
            primal_res.push(r_norm);
            dual_res.push(s_norm);
            misfit.push(mf);

            let primal_ok = r_norm <= params.primal_tolerance * norm(&c).max(norm(&v)).max(1e-12);
            let dual_ok = s_norm <= params.dual_tolerance * norm(&lambda).max(1e-12);
            if primal_ok && dual_ok {
                termination = Termination::Converged;
                break;
            }
        }

        let iterate = v;
        let kc = self.k.as_ref() * vec_to_col(&iterate);
        let mut mf = 0.0;
        for i in 0..m {
            let d = kc[(i, 0)] - g[i];
            mf += d * d;
        }
        let mf = mf.sqrt();
        let c_norm2: f64 = iterate.iter().map(|x| x * x).sum();
        objective.push(0.5 * mf * mf + alpha * c_norm2);
        misfit.push(mf);

        Ok(SolverReport {
            method: "tikhonov_pos".into(),
            alpha,
            rho: Some(rho),
            iterate,
            iterations,
            termination,
            objective,
            primal_residual: primal_res,
            dual_residual: dual_res,
            data_misfit: misfit,
            outer_data_misfit: None,
            wall_time: t0.elapsed(),
        })
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tikhonov alpha must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Tikhonov reconstruction; `positivity` switches between the direct
/// normal-equation solve and the constrained ADMM run with default
/// parameters at the given `α`.
pub fn solve_tikhonov(
    k: &impl LinOp,
    g: &[f64],
    alpha: f64,
    positivity: bool,
) -> Result<SolverReport> {
    let solver = TikhonovSolver::new(k);
    if positivity {
        solver.solve_positivity(g, &AdmmParams::new(alpha))
    } else {
        solver.solve_unconstrained(g, alpha)
    }
}
