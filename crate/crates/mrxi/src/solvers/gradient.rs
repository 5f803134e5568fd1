//! Discrete gradient with homogeneous Neumann boundary.
//!
//! Forward differences are taken along every axis of extent greater than one;
//! the difference at the far boundary is zero. The stacked difference vector
//! is the `∇` block of the ADMM splitting operator `E = [∇; I]`, and
//! `‖∇c‖_1` is the discrete total variation.

use crate::error::{Error, Result};
use crate::geometry::PixelGrid;

/// Forward-difference gradient on an `nx x ny` grid (row-major, x fastest).
#[derive(Debug, Clone)]
pub struct GradientOperator {
    nx: usize,
    ny: usize,
    diff_x: bool,
    diff_y: bool,
}

impl GradientOperator {
    pub fn new(nx: usize, ny: usize) -> Result<GradientOperator> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid dims must be >= 1".into()));
        }
        Ok(GradientOperator {
            nx,
            ny,
            diff_x: nx > 1,
            diff_y: ny > 1,
        })
    }

    /// Gradient matching a planar pixel grid.
    pub fn for_grid(grid: &PixelGrid) -> Result<GradientOperator> {
        if !grid.is_planar() {
            return Err(Error::InvalidArgument(
                "gradient operator expects a planar grid".into(),
            ));
        }
        GradientOperator::new(grid.nx(), grid.ny())
    }

    pub fn input_len(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of stacked difference axes (0, 1 or 2).
    pub fn num_axes(&self) -> usize {
        self.diff_x as usize + self.diff_y as usize
    }

    pub fn output_len(&self) -> usize {
        self.num_axes() * self.input_len()
    }

    /// `out = ∇c`, one block of `nx*ny` entries per active axis.
    pub fn apply(&self, c: &[f64], out: &mut [f64]) {
        let n = self.input_len();
        debug_assert_eq!(c.len(), n);
        debug_assert_eq!(out.len(), self.output_len());
        let mut offset = 0;
        if self.diff_x {
            for iy in 0..self.ny {
                let row = iy * self.nx;
                for ix in 0..self.nx {
                    out[offset + row + ix] = if ix + 1 < self.nx {
                        c[row + ix + 1] - c[row + ix]
                    } else {
                        0.0
                    };
                }
            }
            offset += n;
        }
        if self.diff_y {
            for iy in 0..self.ny {
                let row = iy * self.nx;
                for ix in 0..self.nx {
                    out[offset + row + ix] = if iy + 1 < self.ny {
                        c[row + self.nx + ix] - c[row + ix]
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    /// `out = ∇^T v`.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        let n = self.input_len();
        debug_assert_eq!(v.len(), self.output_len());
        debug_assert_eq!(out.len(), n);
        out.fill(0.0);
        let mut offset = 0;
        if self.diff_x {
            for iy in 0..self.ny {
                let row = iy * self.nx;
                for ix in 0..self.nx {
                    let k = row + ix;
                    if ix + 1 < self.nx {
                        out[k] -= v[offset + k];
                        out[k + 1] += v[offset + k];
                    }
                }
            }
            offset += n;
        }
        if self.diff_y {
            for iy in 0..self.ny {
                let row = iy * self.nx;
                for ix in 0..self.nx {
                    let k = row + ix;
                    if iy + 1 < self.ny {
                        out[k] -= v[offset + k];
                        out[k + self.nx] += v[offset + k];
                    }
                }
            }
        }
    }

    /// Anisotropic total variation `‖∇c‖_1`.
    pub fn tv_anisotropic(&self, c: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.output_len()];
        self.apply(c, &mut buf);
        buf.iter().map(|v| v.abs()).sum()
    }

    /// Isotropic total variation: per-cell Euclidean norm of the stacked
    /// axis differences.
    pub fn tv_isotropic(&self, c: &[f64]) -> f64 {
        let n = self.input_len();
        let mut buf = vec![0.0; self.output_len()];
        self.apply(c, &mut buf);
        match self.num_axes() {
            0 => 0.0,
            1 => buf.iter().map(|v| v.abs()).sum(),
            _ => (0..n)
                .map(|k| (buf[k] * buf[k] + buf[n + k] * buf[n + k]).sqrt())
                .sum(),
        }
    }

    /// Adds `weight * ∇^T∇` (the Neumann difference Laplacian) to a dense
    /// matrix.
    pub fn add_laplacian_stencil(&self, mat: &mut faer::Mat<f64>, weight: f64) {
        debug_assert_eq!(mat.nrows(), self.input_len());
        debug_assert_eq!(mat.ncols(), self.input_len());
        if self.diff_x {
            for iy in 0..self.ny {
                let row = iy * self.nx;
                for ix in 0..self.nx.saturating_sub(1) {
                    let k = row + ix;
                    mat[(k, k)] += weight;
                    mat[(k + 1, k + 1)] += weight;
                    mat[(k, k + 1)] -= weight;
                    mat[(k + 1, k)] -= weight;
                }
            }
        }
        if self.diff_y {
            for iy in 0..self.ny.saturating_sub(1) {
                let row = iy * self.nx;
                for ix in 0..self.nx {
                    let k = row + ix;
                    mat[(k, k)] += weight;
                    mat[(k + self.nx, k + self.nx)] += weight;
                    mat[(k, k + self.nx)] -= weight;
                    mat[(k + self.nx, k)] -= weight;
                }
            }
        }
    }
}
