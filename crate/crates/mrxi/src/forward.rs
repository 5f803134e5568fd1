//! Measurement kernel and the dense discrete forward operator.
//!
//! A measurement pairs one activation with one directional sensor: the
//! activation field magnetizes the density, and the sensor reads one
//! component of the resulting dipole response. Stacking all (activation,
//! sensor) pairs over all grid cells yields a dense matrix mapping the
//! cell-averaged density to the measurement vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Activation, PixelGrid, SensorSpec, Vec3, DEGENERACY_TOL};

// ---------------------------------------------------------------------------
// Density fields
// ---------------------------------------------------------------------------

/// Cell-averaged nanoparticle density on a pixel grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityField {
    pub grid: PixelGrid,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: PixelGrid, values: Vec<f64>) -> Result<DensityField> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("density contains non-finite values".into()));
        }
        Ok(DensityField { grid, values })
    }

    pub fn zeros(grid: PixelGrid) -> DensityField {
        let n = grid.len();
        DensityField { grid, values: vec![0.0; n] }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integral of the density over the grid.
    pub fn mass(&self) -> f64 {
        self.grid.mass(&self.values)
    }
}

// ---------------------------------------------------------------------------
// Langevin response
// ---------------------------------------------------------------------------

/// Equilibrium magnetization response `coth(x) - 1/x`.
///
/// Odd, with range (-1, 1); near the origin the series `x/3 - x^3/45` is used
/// to avoid cancellation. The weak-field operating regime of the forward
/// model uses the linearization `x/3`, applied as a global factor of 1/3.
pub fn langevin(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x / 3.0 - x * x * x / 45.0
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// Linearized Langevin slope at the origin.
pub const LANGEVIN_SLOPE: f64 = 1.0 / 3.0;

// ---------------------------------------------------------------------------
// Kernel
// ---------------------------------------------------------------------------

/// Kernel of the measurement process: the sensor-direction component of the
/// dipole response at the sensor to a unit density at `w` magnetized by the
/// activation field.
///
/// With `d = sensor.position - w` and `B` the activation field at `w`:
/// `k = σ_n · (3 (d·B) d / |d|^5 - B / |d|^3) * λ`, where `λ = 1/3` when the
/// linearized Langevin factor is enabled and 1 otherwise.
pub fn measurement_kernel(
    activation: &Activation,
    sensor: &SensorSpec,
    w: Vec3,
    langevin_linearized: bool,
) -> Result<f64> {
    let b = activation.field_at(w)?;
    let d = sensor.position - w;
    let nd = d.norm();
    if nd < DEGENERACY_TOL {
        return Err(Error::DegenerateGeometry(
            "sensor position coincides with the evaluation point".into(),
        ));
    }
    let n3 = nd * nd * nd;
    let n5 = n3 * nd * nd;
    let response = d * (3.0 * d.dot(b) / n5) - b * (1.0 / n3);
    let lambda = if langevin_linearized { LANGEVIN_SLOPE } else { 1.0 };
    Ok(sensor.orientation.dot(response) * lambda)
}

/// One operator row: kernel at every cell midpoint, weighted by the cell
/// measure so that the row against a density is a midpoint Riemann sum of
/// the measurement integral.
pub fn assemble_row(
    activation: &Activation,
    sensor: &SensorSpec,
    grid: &PixelGrid,
    langevin_linearized: bool,
) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("cannot assemble a row on an empty grid".into()));
    }
    let measure = grid.cell_measure();
    (0..grid.len())
        .map(|k| {
            measurement_kernel(activation, sensor, grid.midpoint(k), langevin_linearized)
                .map(|v| v * measure)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Forward operator
// ---------------------------------------------------------------------------

/// Dense forward operator with row provenance.
///
/// Rows are ordered activation-major, sensor-minor: row `a * s + j` holds the
/// measurement of activation `a` at sensor `j`. Entries are stored row-major.
#[derive(Debug, Clone)]
pub struct ForwardOperator {
    data: Vec<f64>,
    num_activations: usize,
    num_sensors: usize,
    grid: PixelGrid,
    row_map: Vec<(usize, usize)>,
    langevin_applied: bool,
}

impl ForwardOperator {
    /// Builds the operator from raw parts; `data` is row-major with
    /// `rows * grid.len()` entries and `row_map[r] = (activation, sensor)`.
    pub fn from_parts(
        data: Vec<f64>,
        num_activations: usize,
        num_sensors: usize,
        grid: PixelGrid,
        row_map: Vec<(usize, usize)>,
        langevin_applied: bool,
    ) -> Result<ForwardOperator> {
        let m = num_activations * num_sensors;
        if row_map.len() != m || data.len() != m * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "operator parts disagree: {} rows mapped, {} entries, {} cells",
                row_map.len(),
                data.len(),
                grid.len()
            )));
        }
        Ok(ForwardOperator {
            data,
            num_activations,
            num_sensors,
            grid,
            row_map,
            langevin_applied,
        })
    }

    pub fn rows(&self) -> usize {
        self.num_activations * self.num_sensors
    }

    pub fn cols(&self) -> usize {
        self.grid.len()
    }

    pub fn num_activations(&self) -> usize {
        self.num_activations
    }

    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    pub fn grid(&self) -> &PixelGrid {
        &self.grid
    }

    pub fn langevin_applied(&self) -> bool {
        self.langevin_applied
    }

    /// Row index of an (activation, sensor) pair.
    pub fn row_index(&self, activation: usize, sensor: usize) -> usize {
        activation * self.num_sensors + sensor
    }

    /// Provenance of each row as (activation id, sensor id).
    pub fn row_map(&self) -> &[(usize, usize)] {
        &self.row_map
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.cols();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    /// `g = K c`.
    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "density has {} entries, operator has {} columns",
                c.len(),
                self.cols()
            )));
        }
        let n = self.cols();
        Ok(self
            .data
            .par_chunks(n)
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `K c` for a density field on the operator grid.
    pub fn apply_density(&self, c: &DensityField) -> Result<Vec<f64>> {
        if c.grid != self.grid {
            return Err(Error::DimensionMismatch(
                "density grid does not match the operator grid".into(),
            ));
        }
        self.apply(&c.values)
    }

    /// `K^T v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "vector has {} entries, operator has {} rows",
                v.len(),
                self.rows()
            )));
        }
        let n = self.cols();
        let mut out = vec![0.0; n];
        for (row, &vi) in self.data.chunks(n).zip(v) {
            if vi != 0.0 {
                for (o, &a) in out.iter_mut().zip(row) {
                    *o += a * vi;
                }
            }
        }
        Ok(out)
    }

    /// Column-major copy for dense factorization work.
    pub fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows(), self.cols(), |i, j| self.entry(i, j))
    }
}

/// Assembles the full operator over all (activation, sensor) pairs.
///
/// Geometry failures abort the assembly and identify the offending
/// activation, sensor and cell.
pub fn assemble_operator(
    activations: &[Activation],
    sensors: &[SensorSpec],
    grid: &PixelGrid,
    langevin_linearized: bool,
) -> Result<ForwardOperator> {
    if activations.is_empty() || sensors.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one activation and one sensor".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("cannot assemble on an empty grid".into()));
    }
    let s = sensors.len();
    let n = grid.len();
    let m = activations.len() * s;
    let measure = grid.cell_measure();
    let mut data = vec![0.0; m * n];
    data.par_chunks_mut(n)
        .enumerate()
        .try_for_each(|(r, chunk)| -> Result<()> {
            let (ai, si) = (r / s, r % s);
            for (k, out) in chunk.iter_mut().enumerate() {
                let v = measurement_kernel(
                    &activations[ai],
                    &sensors[si],
                    grid.midpoint(k),
                    langevin_linearized,
                )
                .map_err(|e| Error::Assembly {
                    activation: ai,
                    sensor: si,
                    cell: k,
                    source: Box::new(e),
                })?;
                *out = v * measure;
            }
            Ok(())
        })?;
    let row_map = (0..m).map(|r| (r / s, r % s)).collect();
    ForwardOperator::from_parts(
        data,
        activations.len(),
        s,
        grid.clone(),
        row_map,
        langevin_linearized,
    )
}

/// Measurement of a density without materializing the operator: rows are
/// generated and immediately contracted against the density. Produces the
/// same values as `assemble_operator` followed by `apply`.
pub fn simulate(
    activations: &[Activation],
    sensors: &[SensorSpec],
    density: &DensityField,
    langevin_linearized: bool,
) -> Result<Vec<f64>> {
    if activations.is_empty() || sensors.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one activation and one sensor".into(),
        ));
    }
    let s = sensors.len();
    let m = activations.len() * s;
    (0..m)
        .into_par_iter()
        .map(|r| {
            let (ai, si) = (r / s, r % s);
            let row = assemble_row(
                &activations[ai],
                &sensors[si],
                &density.grid,
                langevin_linearized,
            )
            .map_err(|e| match e {
                Error::DegenerateGeometry(_) => Error::Assembly {
                    activation: ai,
                    sensor: si,
                    cell: usize::MAX,
                    source: Box::new(e),
                },
                other => other,
            })?;
            Ok(row.iter().zip(&density.values).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Leading singular values of the operator in descending order, computed
/// from the eigenvalues of `K K^T`. The decay across indices is the
/// practical ill-posedness diagnostic of a given layout: analytic kernels
/// make it fall steeply.
pub fn singular_values(op: &ForwardOperator, count: usize) -> Result<Vec<f64>> {
    let k = op.to_faer();
    let sym = &k * k.transpose();
    let evd = sym
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::SingularSystem("eigendecomposition of K K^T failed".into()))?;
    let s = evd.S();
    let mut eigs: Vec<f64> = (0..op.rows()).map(|i| s[i].max(0.0)).collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs.into_iter().take(count).map(f64::sqrt).collect())
}

// ---------------------------------------------------------------------------
// Activation patterns
// ---------------------------------------------------------------------------

/// Weighted simultaneous activations: each pattern is a nonnegative
/// combination of base activations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActivationPattern {
    /// One entry per pattern: `(base activation id, weight)` pairs.
    patterns: Vec<Vec<(usize, f64)>>,
}

impl ActivationPattern {
    pub fn new(patterns: Vec<Vec<(usize, f64)>>) -> Result<ActivationPattern> {
        if patterns.is_empty() {
            return Err(Error::InvalidArgument("pattern set is empty".into()));
        }
        for (b, pat) in patterns.iter().enumerate() {
            if pat.iter().any(|&(_, w)| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "pattern {b} has a negative or non-finite weight"
                )));
            }
            if !pat.iter().any(|&(_, w)| w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "pattern {b} has no nonzero weight"
                )));
            }
        }
        Ok(ActivationPattern { patterns })
    }

    /// One pattern per base activation with unit weight (consecutive
    /// single-coil activation).
    pub fn identity(num_activations: usize) -> ActivationPattern {
        ActivationPattern {
            patterns: (0..num_activations).map(|a| vec![(a, 1.0)]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn weights(&self) -> &[Vec<(usize, f64)>] {
        &self.patterns
    }
}

/// Rebuilds the operator for a set of activation patterns: pattern block `β`
/// is the weighted sum of the base activation blocks.
pub fn apply_pattern(
    op: &ForwardOperator,
    pattern: &ActivationPattern,
) -> Result<ForwardOperator> {
    let s = op.num_sensors();
    let n = op.cols();
    for pat in pattern.weights() {
        for &(a, _) in pat {
            if a >= op.num_activations() {
                return Err(Error::UnknownActivation(a));
            }
        }
    }
    let mut data = vec![0.0; pattern.len() * s * n];
    for (b, pat) in pattern.weights().iter().enumerate() {
        for j in 0..s {
            let out_row = b * s + j;
            let chunk = &mut data[out_row * n..(out_row + 1) * n];
            for &(a, w) in pat {
                if w == 0.0 {
                    continue;
                }
                let src = op.row(op.row_index(a, j));
                for (o, &v) in chunk.iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        }
    }
    let row_map = (0..pattern.len() * s).map(|r| (r / s, r % s)).collect();
    ForwardOperator::from_parts(
        data,
        pattern.len(),
        s,
        op.grid().clone(),
        row_map,
        op.langevin_applied(),
    )
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
