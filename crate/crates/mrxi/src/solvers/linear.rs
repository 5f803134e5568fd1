//! Dense linear maps and the cached solver for the ADMM quadratic update.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::forward::ForwardOperator;
use crate::solvers::gradient::GradientOperator;

/// Problems larger than this fall back to conjugate gradients instead of a
/// dense factorization.
pub const DIRECT_SOLVE_MAX_DIM: usize = 20_000;

/// Relative residual target of the conjugate-gradient fallback.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Minimal interface the solvers need from a measurement operator.
pub trait LinOp: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`.
    fn apply_to(&self, x: &[f64], out: &mut [f64]);
    /// `out = A^T y`.
    fn apply_transpose_to(&self, y: &[f64], out: &mut [f64]);
    /// Dense column-major copy.
    fn to_dense(&self) -> Mat<f64>;
}

impl LinOp for ForwardOperator {
    fn rows(&self) -> usize {
        ForwardOperator::rows(self)
    }

    fn cols(&self) -> usize {
        ForwardOperator::cols(self)
    }

    fn apply_to(&self, x: &[f64], out: &mut [f64]) {
        let n = self.cols();
        for (o, row) in out.iter_mut().zip(self.entries().chunks(n)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose_to(&self, y: &[f64], out: &mut [f64]) {
        let n = self.cols();
        out.fill(0.0);
        for (row, &yi) in self.entries().chunks(n).zip(y) {
            if yi != 0.0 {
                for (o, &a) in out.iter_mut().zip(row) {
                    *o += a * yi;
                }
            }
        }
    }

    fn to_dense(&self) -> Mat<f64> {
        self.to_faer()
    }
}

/// Plain row-major dense matrix, for solver tests and small problems.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<DenseMatrix> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(DenseMatrix { data, rows, cols })
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix { data, rows: n, cols: n }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> DenseMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { data, rows, cols }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

impl LinOp for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply_to(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.data.chunks(self.cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose_to(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (row, &yi) in self.data.chunks(self.cols).zip(y) {
            if yi != 0.0 {
                for (o, &a) in out.iter_mut().zip(row) {
                    *o += a * yi;
                }
            }
        }
    }

    fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.entry(i, j))
    }
}

// ---------------------------------------------------------------------------
// Quadratic-update solver
// ---------------------------------------------------------------------------

/// Describes the symmetric system `K^T K + diag_shift * I + rho * E^T E`,
/// where `E` is either `[∇; I]` (total variation splitting) or `I`.
pub(crate) struct QuadraticSystem<'a> {
    pub k: &'a Mat<f64>,
    pub diag_shift: f64,
    pub rho: f64,
    pub grad: Option<&'a GradientOperator>,
}

impl QuadraticSystem<'_> {
    fn dim(&self) -> usize {
        self.k.ncols()
    }

    /// `out = (K^T K + diag_shift I + rho E^T E) x` without forming the matrix.
    fn apply(&self, x: &[f64], out: &mut [f64], scratch: &mut Scratch) {
        let n = self.dim();
        // K^T (K x)
        let xm = Mat::from_fn(n, 1, |i, _| x[i]);
        let kx = self.k * &xm;
        let ktkx = self.k.transpose() * &kx;
        for i in 0..n {
            out[i] = ktkx[(i, 0)] + self.diag_shift * x[i];
        }
        match self.grad {
            Some(grad) => {
                grad.apply(x, &mut scratch.grad_out);
                grad.apply_transpose(&scratch.grad_out, &mut scratch.cell);
                for i in 0..n {
                    // E^T E = ∇^T ∇ + I
                    out[i] += self.rho * (scratch.cell[i] + x[i]);
                }
            }
            None => {
                for i in 0..n {
                    out[i] += self.rho * x[i];
                }
            }
        }
    }
}

pub(crate) struct Scratch {
    grad_out: Vec<f64>,
    cell: Vec<f64>,
}

/// Cached solver for the ADMM c-update: a Cholesky factorization up to
/// `DIRECT_SOLVE_MAX_DIM`, conjugate gradients beyond it.
pub(crate) enum SystemSolver {
    Direct { llt: Llt<f64>, n: usize },
    Cg,
}

pub(crate) struct CUpdateSolver<'a> {
    solver: SystemSolver,
    system: QuadraticSystem<'a>,
    scratch: std::cell::RefCell<Scratch>,
}

impl<'a> CUpdateSolver<'a> {
    /// Builds the cached solver. `gram` must equal `K^T K`.
    pub fn new(
        k: &'a Mat<f64>,
        gram: &Mat<f64>,
        diag_shift: f64,
        rho: f64,
        grad: Option<&'a GradientOperator>,
        direct_threshold: usize,
    ) -> Result<CUpdateSolver<'a>> {
        let n = k.ncols();
        let system = QuadraticSystem { k, diag_shift, rho, grad };
        let solver = if n <= direct_threshold {
            let mut mat = gram.clone();
            // E always carries an identity block, so E^T E contributes rho
            // on the diagonal in both splitting modes.
            for i in 0..n {
                mat[(i, i)] += diag_shift + rho;
            }
            if let Some(g) = grad {
                g.add_laplacian_stencil(&mut mat, rho);
            }
            let llt = mat.llt(Side::Lower).map_err(|_| {
                Error::SingularSystem(format!(
                    "Cholesky failed for n = {n}, diag shift {diag_shift}, rho {rho}"
                ))
            })?;
            SystemSolver::Direct { llt, n }
        } else {
            SystemSolver::Cg
        };
        let scratch = Scratch {
            grad_out: vec![0.0; grad.map_or(0, |g| g.output_len())],
            cell: vec![0.0; if grad.is_some() { n } else { 0 }],
        };
        Ok(CUpdateSolver {
            solver,
            system,
            scratch: std::cell::RefCell::new(scratch),
        })
    }

    /// Solves the quadratic system; `warm` seeds the CG path.
    pub fn solve(&self, rhs: &[f64], warm: &[f64]) -> Result<Vec<f64>> {
        match &self.solver {
            SystemSolver::Direct { llt, n } => {
                let b = Mat::from_fn(*n, 1, |i, _| rhs[i]);
                let x = llt.solve(&b);
                Ok((0..*n).map(|i| x[(i, 0)]).collect())
            }
            SystemSolver::Cg => {
                let mut scratch = self.scratch.borrow_mut();
                cg_solve(&self.system, rhs, warm, &mut scratch)
            }
        }
    }
}

/// Plain conjugate gradients on the (SPD) quadratic system to the relative
/// residual `CG_TOLERANCE`.
fn cg_solve(
    system: &QuadraticSystem<'_>,
    rhs: &[f64],
    warm: &[f64],
    scratch: &mut Scratch,
) -> Result<Vec<f64>> {
    let n = system.dim();
    let b_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = warm.to_vec();
    let mut ax = vec![0.0; n];
    system.apply(&x, &mut ax, scratch);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut rs_old: f64 = r.iter().map(|v| v * v).sum();
    let mut ap = vec![0.0; n];
    let max_iters = 20 * n;
    for _ in 0..max_iters {
        if rs_old.sqrt() <= CG_TOLERANCE * b_norm {
            return Ok(x);
        }
        system.apply(&p, &mut ap, scratch);
        let p_ap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if p_ap <= 0.0 {
            return Err(Error::SingularSystem(
                "conjugate gradients met a non-positive curvature direction".into(),
            ));
        }
        let alpha = rs_old / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    if rs_old.sqrt() <= CG_TOLERANCE * b_norm * 10.0 {
        return Ok(x);
    }
    Err(Error::SingularSystem(format!(
        "conjugate gradients stalled at relative residual {:.3e}",
        rs_old.sqrt() / b_norm
    )))
}

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn col_to_vec(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

pub(crate) fn vec_to_col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn uniform(rng: &mut ChaCha12Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[test]
    fn dense_matrix_roundtrip_and_apply() {
        let m = DenseMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut out = vec![0.0; 2];
        m.apply_to(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, vec![-2.0, -2.0]);
        let mut tout = vec![0.0; 3];
        m.apply_transpose_to(&[1.0, 1.0], &mut tout);
        assert_eq!(tout, vec![5.0, 7.0, 9.0]);
        assert!(DenseMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn direct_and_cg_solvers_agree() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let n = 24;
        let k = DenseMatrix::from_fn(30, n, |_, _| uniform(&mut rng) - 0.5);
        let kd = k.to_dense();
        let gram = kd.transpose() * &kd;
        let grad = GradientOperator::new(6, 4).unwrap();
        let rhs: Vec<f64> = (0..n).map(|_| uniform(&mut rng) - 0.5).collect();
        let zero = vec![0.0; n];

        let direct = CUpdateSolver::new(&kd, &gram, 0.3, 0.7, Some(&grad), DIRECT_SOLVE_MAX_DIM)
            .unwrap()
            .solve(&rhs, &zero)
            .unwrap();
        // threshold of zero forces the CG path
        let via_cg = CUpdateSolver::new(&kd, &gram, 0.3, 0.7, Some(&grad), 0)
            .unwrap()
            .solve(&rhs, &zero)
            .unwrap();
        for i in 0..n {
            assert!(
                (direct[i] - via_cg[i]).abs() < 1e-8,
                "component {i}: {} vs {}",
                direct[i],
                via_cg[i]
            );
        }
    }

    #[test]
    fn direct_solver_residual_is_tiny() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let n = 16;
        let k = DenseMatrix::from_fn(20, n, |_, _| uniform(&mut rng) - 0.5);
        let kd = k.to_dense();
        let gram = kd.transpose() * &kd;
        let grad = GradientOperator::new(4, 4).unwrap();
        let rhs: Vec<f64> = (0..n).map(|_| uniform(&mut rng)).collect();
        let solver = CUpdateSolver::new(&kd, &gram, 0.1, 1.0, Some(&grad), usize::MAX).unwrap();
        let x = solver.solve(&rhs, &vec![0.0; n]).unwrap();
        let mut ax = vec![0.0; n];
        let mut scratch = Scratch { grad_out: vec![0.0; grad.output_len()], cell: vec![0.0; n] };
        solver.system.apply(&x, &mut ax, &mut scratch);
        let resid = ax
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(resid < 1e-10 * norm(&rhs), "residual {resid}");
    }
}
