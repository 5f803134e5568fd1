//! Reconstruction methods: Tikhonov and total-variation regularization with
//! a positivity constraint, solved by ADMM, plus Bregman iteration.
//!
//! The variational model is `min 1/2 ‖Kc - g‖² + α R(c) + χ_{≥0}(c)` with
//! `R` either `‖c‖²` (Tikhonov) or the discrete total variation. The ADMM
//! splitting introduces `v = E c` with `E = [∇; I]` (or `E = I` when only
//! positivity is enforced); the `c` update solves one symmetric linear
//! system per iteration through a cached factorization.

mod admm;
mod bregman;
mod gradient;
mod linear;
mod tikhonov;

pub use admm::{soft_threshold, solve_tv_admm, TvAdmmSolver};
pub use bregman::{solve_bregman, BregmanParams, BregmanStopping, ReturnPolicy};
pub use gradient::GradientOperator;
pub use linear::{DenseMatrix, LinOp, CG_TOLERANCE, DIRECT_SOLVE_MAX_DIM};
pub use tikhonov::{solve_tikhonov, TikhonovSolver};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which discrete total variation the shrinkage step realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TvFlavor {
    /// `‖∇c‖_1` of the stacked axis differences.
    Anisotropic,
    /// Per-cell Euclidean norm of the axis differences (grouped shrinkage).
    Isotropic,
}

/// ADMM parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdmmParams {
    /// Regularization weight (may be zero: pure constraint projection).
    pub alpha: f64,
    /// Augmentation weight of the Lagrangian; must be positive.
    pub rho: f64,
    pub max_iterations: usize,
    /// Relative primal residual tolerance.
    pub primal_tolerance: f64,
    /// Relative dual residual tolerance.
    pub dual_tolerance: f64,
    pub tv_flavor: TvFlavor,
}

impl AdmmParams {
    pub fn new(alpha: f64) -> AdmmParams {
        AdmmParams {
            alpha,
            rho: 1.0,
            max_iterations: 2000,
            primal_tolerance: 1e-6,
            dual_tolerance: 1e-6,
            tv_flavor: TvFlavor::Anisotropic,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> AdmmParams {
        self.rho = rho;
        self
    }

    pub fn with_max_iterations(mut self, it: usize) -> AdmmParams {
        self.max_iterations = it;
        self
    }

    pub fn with_tolerances(mut self, primal: f64, dual: f64) -> AdmmParams {
        self.primal_tolerance = primal;
        self.dual_tolerance = dual;
        self
    }

    pub fn with_flavor(mut self, flavor: TvFlavor) -> AdmmParams {
        self.tv_flavor = flavor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.primal_tolerance > 0.0) || !(self.dual_tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Both residuals fell below their tolerances.
    Converged,
    /// The iteration budget ran out; the report is still returned.
    MaxIterations,
    /// Closed-form solve (no iteration).
    Direct,
    /// Bregman outer loop met the discrepancy threshold.
    Discrepancy,
}

/// Full record of one reconstruction run.
///
/// Wall time is diagnostic only and intentionally left out of the serialized
/// form so identical inputs serialize identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub method: String,
    pub alpha: f64,
    pub rho: Option<f64>,
    /// Final iterate; exactly nonnegative when positivity was enforced.
    pub iterate: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective value per iteration (at the c-update).
    pub objective: Vec<f64>,
    /// `‖Ec - v‖` per iteration.
    pub primal_residual: Vec<f64>,
    /// `ρ‖E^T (v^{k+1} - v^k)‖` per iteration.
    pub dual_residual: Vec<f64>,
    /// `‖Kc - g‖` per iteration.
    pub data_misfit: Vec<f64>,
    /// Outer-loop data misfits for Bregman runs.
    pub outer_data_misfit: Option<Vec<f64>>,
    #[serde(skip, default)]
    pub wall_time: std::time::Duration,
}

impl SolverReport {
    /// Final data misfit `‖Kc - g‖` of the returned iterate.
    pub fn final_misfit(&self) -> f64 {
        self.data_misfit.last().copied().unwrap_or(f64::NAN)
    }

    /// Final objective value of the returned iterate.
    pub fn final_objective(&self) -> f64 {
        self.objective.last().copied().unwrap_or(f64::NAN)
    }
}
