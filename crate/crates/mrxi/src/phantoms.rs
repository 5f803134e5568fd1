//! Synthetic test densities and grid-to-grid resampling.
//!
//! Three phantom families are provided: a "P" shaped particle cluster with a
//! hole, a transverse slice of the ten-ellipse Shepp-Logan head phantom, and
//! a simplified tumor crossed by a particle-free vein. All geometry lives in
//! unit-square coordinates; rasterization samples the phantom at cell
//! midpoints of a planar grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::DensityField;
use crate::geometry::PixelGrid;

// ---------------------------------------------------------------------------
// Shapes
// ---------------------------------------------------------------------------

/// Rotated ellipse or rectangle with an intensity contribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeSpec {
    Ellipse {
        center: (f64, f64),
        radii: (f64, f64),
        angle_deg: f64,
        intensity: f64,
    },
    Rectangle {
        center: (f64, f64),
        half_extent: (f64, f64),
        angle_deg: f64,
        intensity: f64,
    },
}

impl ShapeSpec {
    pub fn intensity(&self) -> f64 {
        match self {
            ShapeSpec::Ellipse { intensity, .. } => *intensity,
            ShapeSpec::Rectangle { intensity, .. } => *intensity,
        }
    }

    /// Containment test in unit-square coordinates.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (cx, cy, angle) = match self {
            ShapeSpec::Ellipse { center, angle_deg, .. } => (center.0, center.1, *angle_deg),
            ShapeSpec::Rectangle { center, angle_deg, .. } => (center.0, center.1, *angle_deg),
        };
        let theta = angle.to_radians();
        let (s, c) = theta.sin_cos();
        let dx = x - cx;
        let dy = y - cy;
        // rotate into the shape frame
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        match self {
            ShapeSpec::Ellipse { radii, .. } => {
                let (a, b) = *radii;
                (u / a) * (u / a) + (v / b) * (v / b) <= 1.0
            }
            ShapeSpec::Rectangle { half_extent, .. } => {
                let (hx, hy) = *half_extent;
                u.abs() <= hx && v.abs() <= hy
            }
        }
    }
}

/// How overlapping shapes combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposeMode {
    /// Later shapes overwrite earlier ones (region painting).
    Paint,
    /// Contributions add up; the result is clipped at zero.
    Sum,
}

/// Phantom family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    PShape,
    SheppLogan,
    Tumor,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<PhantomKind> {
        match s {
            "p_shape" => Ok(PhantomKind::PShape),
            "shepp_logan" => Ok(PhantomKind::SheppLogan),
            "tumor" => Ok(PhantomKind::Tumor),
            other => Err(Error::UnsupportedPhantom(other.to_string())),
        }
    }
}

impl std::fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PhantomKind::PShape => "p_shape",
            PhantomKind::SheppLogan => "shepp_logan",
            PhantomKind::Tumor => "tumor",
        };
        f.write_str(s)
    }
}

/// Full phantom description: shape list plus composition rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub compose: ComposeMode,
    pub shapes: Vec<ShapeSpec>,
}

impl PhantomSpec {
    /// Default geometry for a phantom family, scaled to a peak intensity.
    pub fn of_kind(kind: PhantomKind, intensity: f64) -> Result<PhantomSpec> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "phantom intensity must be positive, got {intensity}"
            )));
        }
        let spec = match kind {
            PhantomKind::PShape => PhantomSpec::p_shape(intensity),
            PhantomKind::SheppLogan => PhantomSpec::shepp_logan(intensity),
            PhantomKind::Tumor => PhantomSpec::tumor(intensity),
        };
        Ok(spec)
    }

    /// "P" letter: vertical stroke plus a bowl, with an elliptical hole.
    pub fn p_shape(intensity: f64) -> PhantomSpec {
        PhantomSpec {
            kind: PhantomKind::PShape,
            compose: ComposeMode::Paint,
            shapes: vec![
                ShapeSpec::Rectangle {
                    center: (0.36, 0.47),
                    half_extent: (0.065, 0.285),
                    angle_deg: 0.0,
                    intensity,
                },
                ShapeSpec::Ellipse {
                    center: (0.50, 0.615),
                    radii: (0.175, 0.145),
                    angle_deg: 0.0,
                    intensity,
                },
                ShapeSpec::Ellipse {
                    center: (0.53, 0.615),
                    radii: (0.085, 0.07),
                    angle_deg: 0.0,
                    intensity: 0.0,
                },
            ],
        }
    }

    /// Ten-ellipse Shepp-Logan head slice (high-contrast intensity variant),
    /// mapped onto the unit square; summed contributions are clipped at zero.
    pub fn shepp_logan(intensity: f64) -> PhantomSpec {
        // (value, a, b, x0, y0, phi) in the conventional [-1,1]^2 frame
        const TABLE: [(f64, f64, f64, f64, f64, f64); 10] = [
            (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
            (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
            (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
            (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
            (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
            (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
            (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
            (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
            (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
            (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
        ];
        let shapes = TABLE
            .iter()
            .map(|&(v, a, b, x0, y0, phi)| ShapeSpec::Ellipse {
                // map [-1,1]^2 onto [0,1]^2
                center: (0.5 + 0.5 * x0, 0.5 + 0.5 * y0),
                radii: (0.5 * a, 0.5 * b),
                angle_deg: phi,
                intensity: v * intensity,
            })
            .collect();
        PhantomSpec {
            kind: PhantomKind::SheppLogan,
            compose: ComposeMode::Sum,
            shapes,
        }
    }

    /// Filled ellipse with a rotated particle-free channel crossing it.
    pub fn tumor(intensity: f64) -> PhantomSpec {
        PhantomSpec {
            kind: PhantomKind::Tumor,
            compose: ComposeMode::Paint,
            shapes: vec![
                ShapeSpec::Ellipse {
                    center: (0.5, 0.5),
                    radii: (0.27, 0.21),
                    angle_deg: 20.0,
                    intensity,
                },
                ShapeSpec::Rectangle {
                    center: (0.5, 0.5),
                    half_extent: (0.45, 0.035),
                    angle_deg: -35.0,
                    intensity: 0.0,
                },
            ],
        }
    }

    /// Phantom value at a point in unit-square coordinates.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        match self.compose {
            ComposeMode::Paint => {
                let mut v = 0.0;
                for s in &self.shapes {
                    if s.contains(x, y) {
                        v = s.intensity();
                    }
                }
                v
            }
            ComposeMode::Sum => {
                let v: f64 = self
                    .shapes
                    .iter()
                    .filter(|s| s.contains(x, y))
                    .map(|s| s.intensity())
                    .sum();
                v.max(0.0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shapes.is_empty() {
            return Err(Error::InvalidArgument("phantom has no shapes".into()));
        }
        if self.compose == ComposeMode::Paint
            && self.shapes.iter().any(|s| s.intensity() < 0.0)
        {
            return Err(Error::InvalidArgument(
                "painted phantom intensities must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Rasterization and resampling
// ---------------------------------------------------------------------------

/// Samples the phantom at the midpoints of a planar grid.
///
/// Grid coordinates are normalized to the grid extent, so the phantom always
/// fills the covered rectangle.
pub fn rasterize(spec: &PhantomSpec, grid: &PixelGrid) -> Result<DensityField> {
    if !grid.is_planar() {
        return Err(Error::InvalidArgument(
            "phantoms rasterize onto planar grids only".into(),
        ));
    }
    spec.validate()?;
    let ((x0, x1), (y0, y1)) = grid.extent();
    let values = grid
        .midpoints()
        .map(|w| spec.value_at((w.x - x0) / (x1 - x0), (w.y - y0) / (y1 - y0)))
        .collect();
    DensityField::new(grid.clone(), values)
}

/// Conservative (cell-average) resampling between planar grids covering the
/// same slice. Total mass is preserved to rounding.
pub fn resample(field: &DensityField, target: &PixelGrid) -> Result<DensityField> {
    let source = &field.grid;
    if !source.covers_same_slice(target) {
        return Err(Error::NonOverlappingGrids(
            "resampling requires planar grids over the same slice".into(),
        ));
    }
    if source == target {
        return Ok(field.clone());
    }
    let wx = overlap_weights(source.nx(), target.nx());
    let wy = overlap_weights(source.ny(), target.ny());
    let mut values = vec![0.0; target.len()];
    for (ty, row_w) in wy.iter().enumerate() {
        for (tx, col_w) in wx.iter().enumerate() {
            let mut acc = 0.0;
            for &(sy, fy) in row_w {
                for &(sx, fx) in col_w {
                    acc += fy * fx * field.values[sy * source.nx() + sx];
                }
            }
            values[ty * target.nx() + tx] = acc;
        }
    }
    DensityField::new(target.clone(), values)
}

/// For each target cell along one axis, the source cells it overlaps with
/// fractional weights (relative to the target cell width).
fn overlap_weights(n_src: usize, n_tgt: usize) -> Vec<Vec<(usize, f64)>> {
    let ds = 1.0 / n_src as f64;
    let dt = 1.0 / n_tgt as f64;
    (0..n_tgt)
        .map(|t| {
            let t0 = t as f64 * dt;
            let t1 = t0 + dt;
            let first = (t0 / ds).floor() as usize;
            let last = ((t1 / ds).ceil() as usize).min(n_src);
            let mut weights = Vec::new();
            for s in first..last {
                let s0 = s as f64 * ds;
                let s1 = s0 + ds;
                let overlap = (t1.min(s1) - t0.max(s0)).max(0.0);
                if overlap > 0.0 {
                    weights.push((s, overlap / dt));
                }
            }
            weights
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn uniform(rng: &mut ChaCha12Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[test]
    fn shepp_logan_background_is_zero() {
        let spec = PhantomSpec::shepp_logan(1.0);
        let grid = PixelGrid::unit_square_slice(64, 64).unwrap();
        let f = rasterize(&spec, &grid).unwrap();
        // corners lie outside the outer ellipse
        for &k in &[0, 63, 64 * 63, 64 * 64 - 1] {
            assert_eq!(f.values[k], 0.0, "corner cell {k}");
        }
        assert!(f.is_nonnegative());
        assert!(f.max_value() > 0.9, "skull shell should reach peak intensity");
    }

    #[test]
    fn p_shape_hole_is_empty_and_stroke_is_filled() {
        let spec = PhantomSpec::p_shape(2.0);
        assert_eq!(spec.value_at(0.53, 0.615), 0.0, "hole center");
        assert_eq!(spec.value_at(0.36, 0.3), 2.0, "stroke");
        assert_eq!(spec.value_at(0.50, 0.73), 2.0, "bowl rim");
        assert_eq!(spec.value_at(0.05, 0.05), 0.0, "background");
    }

    #[test]
    fn tumor_vein_is_empty() {
        let spec = PhantomSpec::tumor(1.0);
        assert_eq!(spec.value_at(0.5, 0.5), 0.0, "vein through the center");
        assert!(spec.value_at(0.5, 0.62) > 0.0, "tissue above the vein");
        assert!(spec.value_at(0.5, 0.38) > 0.0, "tissue below the vein");
    }

    #[test]
    fn mass_is_stable_under_refinement() {
        for kind in [PhantomKind::PShape, PhantomKind::SheppLogan, PhantomKind::Tumor] {
            let spec = PhantomSpec::of_kind(kind, 1.0).unwrap();
            let coarse = rasterize(&spec, &PixelGrid::unit_square_slice(75, 75).unwrap())
                .unwrap()
                .mass();
            let fine = rasterize(&spec, &PixelGrid::unit_square_slice(197, 197).unwrap())
                .unwrap()
                .mass();
            let rel = (fine - coarse).abs() / fine;
            assert!(rel < 0.02, "{kind}: relative mass drift {rel}");
        }
    }

    #[test]
    fn rasterize_rejects_volume_grids() {
        let spec = PhantomSpec::p_shape(1.0);
        let grid = PixelGrid::unit_cube(8, 8, 8).unwrap();
        assert!(rasterize(&spec, &grid).is_err());
    }

    #[test]
    fn resample_identity_returns_same_field() {
        let spec = PhantomSpec::tumor(1.0);
        let grid = PixelGrid::unit_square_slice(40, 40).unwrap();
        let f = rasterize(&spec, &grid).unwrap();
        let r = resample(&f, &grid).unwrap();
        assert_eq!(f.values, r.values);
    }

    #[test]
    fn resample_preserves_constants() {
        let grid = PixelGrid::unit_square_slice(30, 30).unwrap();
        let f = DensityField::new(grid, vec![2.5; 900]).unwrap();
        let target = PixelGrid::unit_square_slice(7, 11).unwrap();
        let r = resample(&f, &target).unwrap();
        for &v in &r.values {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_tiling_downsample_is_block_mean() {
        let src_grid = PixelGrid::unit_square_slice(150, 150).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let values: Vec<f64> = (0..src_grid.len()).map(|_| uniform(&mut rng)).collect();
        let f = DensityField::new(src_grid, values.clone()).unwrap();
        let target = PixelGrid::unit_square_slice(75, 75).unwrap();
        let r = resample(&f, &target).unwrap();
        for ty in 0..75 {
            for tx in 0..75 {
                let mean = (values[(2 * ty) * 150 + 2 * tx]
                    + values[(2 * ty) * 150 + 2 * tx + 1]
                    + values[(2 * ty + 1) * 150 + 2 * tx]
                    + values[(2 * ty + 1) * 150 + 2 * tx + 1])
                    / 4.0;
                let got = r.values[ty * 75 + tx];
                assert!(
                    (got - mean).abs() < 1e-13,
                    "cell ({tx},{ty}): {got} vs {mean}"
                );
            }
        }
        assert!((f.mass() - r.mass()).abs() < 1e-12);
    }

    #[test]
    fn resample_rejects_mismatched_slices() {
        let a = PixelGrid::unit_square_slice(10, 10).unwrap();
        let f = DensityField::new(a, vec![1.0; 100]).unwrap();
        let other = PixelGrid::slice(10, 10, (0.0, 2.0), (0.0, 1.0), 0.5).unwrap();
        assert!(matches!(
            resample(&f, &other),
            Err(Error::NonOverlappingGrids(_))
        ));
        let volume = PixelGrid::unit_cube(5, 5, 5).unwrap();
        assert!(resample(&f, &volume).is_err());
    }

    #[test]
    fn unsupported_kind_string_is_rejected() {
        let err = "blob".parse::<PhantomKind>();
        assert!(matches!(err, Err(Error::UnsupportedPhantom(_))));
        assert_eq!("tumor".parse::<PhantomKind>().unwrap(), PhantomKind::Tumor);
    }

    proptest! {
        #[test]
        fn rasterize_is_nonnegative(
            res in 8usize..64,
            kind_idx in 0usize..3,
            intensity in 0.1..5.0f64,
        ) {
            let kind = [PhantomKind::PShape, PhantomKind::SheppLogan, PhantomKind::Tumor][kind_idx];
            let spec = PhantomSpec::of_kind(kind, intensity).unwrap();
            let grid = PixelGrid::unit_square_slice(res, res).unwrap();
            let f = rasterize(&spec, &grid).unwrap();
            prop_assert!(f.is_nonnegative());
        }

        #[test]
        fn resample_conserves_mass_and_nonnegativity(
            n_src in 4usize..60,
            n_tgt in 4usize..60,
            seed in 0u64..500,
        ) {
            let src = PixelGrid::unit_square_slice(n_src, n_src).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..src.len()).map(|_| uniform(&mut rng)).collect();
            let f = DensityField::new(src, values).unwrap();
            let target = PixelGrid::unit_square_slice(n_tgt, n_tgt).unwrap();
            let r = resample(&f, &target).unwrap();
            prop_assert!(r.is_nonnegative());
            prop_assert!((f.mass() - r.mass()).abs() < 1e-12 * f.mass().max(1.0));
        }
    }
}
