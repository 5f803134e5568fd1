//! Coil, dipole and sensor geometry, and the magnetic fields they induce
//! inside the reconstruction domain.
//!
//! The domain `Ω` is an axis-aligned box (unit cube by default). Activations
//! (segmented conductor coils or idealized point dipoles) and sensors live in
//! the standoff shell around `Ω` and are evaluated at points inside it. All
//! field evaluations are pure functions of immutable inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator guard below which a field evaluation is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// Default segment count for closed polygonal loops; at unit scale the
/// polygonal field error is then a few parts in 10^4 or better.
pub const DEFAULT_LOOP_SEGMENTS: usize = 64;

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// A point or vector in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction; error for (near-)zero input.
    pub fn normalized(self) -> Result<Vec3> {
        let n = self.norm();
        if n < DEGENERACY_TOL {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero vector".into(),
            ));
        }
        Ok(self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

/// The particle-bearing region `Ω` plus the standoff shell that holds coils
/// and sensors.
///
/// The shell is the box `[min - r, max + r]` with `Ω` removed, where `r` is
/// the standoff.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Domain {
    pub min: Vec3,
    pub max: Vec3,
    pub standoff: f64,
}

impl Domain {
    pub fn new(min: Vec3, max: Vec3, standoff: f64) -> Result<Domain> {
        if !(standoff > 0.0) || !standoff.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "standoff must be positive, got {standoff}"
            )));
        }
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(Error::InvalidArgument(
                "domain box must have positive extent".into(),
            ));
        }
        Ok(Domain { min, max, standoff })
    }

    /// The unit cube `[0,1]^3` with the given standoff.
    pub fn unit(standoff: f64) -> Result<Domain> {
        Domain::new(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), standoff)
    }

    /// Closed-box containment in `Ω`.
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Membership in the standoff shell: inside the enlarged box, strictly
    /// outside `Ω`.
    pub fn shell_contains(&self, p: Vec3) -> bool {
        let r = self.standoff;
        let in_outer = p.x >= self.min.x - r
            && p.x <= self.max.x + r
            && p.y >= self.min.y - r
            && p.y <= self.max.y + r
            && p.z >= self.min.z - r
            && p.z <= self.max.z + r;
        in_outer && !self.contains(p)
    }
}

// ---------------------------------------------------------------------------
// Activations and sensors
// ---------------------------------------------------------------------------

/// A conductor path cut into straight segments carrying unit current.
///
/// Consecutive vertices bound the segments; a closed loop repeats its first
/// vertex at the end. `scale` collects all physical constants (permeability,
/// current) into a single factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentedCoil {
    pub vertices: Vec<Vec3>,
    pub scale: f64,
}

impl SegmentedCoil {
    pub fn new(vertices: Vec<Vec3>, scale: f64) -> Result<SegmentedCoil> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(
                "a segmented coil needs at least two vertices".into(),
            ));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "coil scale must be positive, got {scale}"
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("coil vertex is not finite".into()));
        }
        Ok(SegmentedCoil { vertices, scale })
    }

    /// Closed polygonal approximation of a circular loop around `axis`.
    pub fn circle_loop(
        center: Vec3,
        axis: Vec3,
        radius: f64,
        segments: usize,
        scale: f64,
    ) -> Result<SegmentedCoil> {
        if segments < 3 {
            return Err(Error::InvalidArgument(
                "a circular loop needs at least three segments".into(),
            ));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument("loop radius must be positive".into()));
        }
        let n = axis.normalized()?;
        // Any direction not parallel to the axis works as a seed for the basis.
        let seed = if n.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let u = seed.cross(n).normalized()?;
        let v = n.cross(u);
        let mut vertices = Vec::with_capacity(segments + 1);
        for k in 0..=segments {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / (segments as f64);
            vertices.push(center + radius * (theta.cos() * u + theta.sin() * v));
        }
        SegmentedCoil::new(vertices, scale)
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Segment endpoints `(a_k, b_k)`.
    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        self.vertices.windows(2).map(|p| (p[0], p[1]))
    }

    /// Checks that every vertex lies in the standoff shell of `domain`.
    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !domain.shell_contains(*v) {
                return Err(Error::InvalidArgument(format!(
                    "coil vertex {i} at ({}, {}, {}) is not in the standoff shell",
                    v.x, v.y, v.z
                )));
            }
        }
        Ok(())
    }
}

/// Idealized small-coil activation: a point magnetic dipole with a moment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DipoleActivation {
    pub position: Vec3,
    pub moment: Vec3,
    pub scale: f64,
}

impl DipoleActivation {
    pub fn new(position: Vec3, moment: Vec3, scale: f64) -> Result<DipoleActivation> {
        if moment.norm() <= 0.0 || !moment.is_finite() {
            return Err(Error::InvalidArgument(
                "dipole moment must be nonzero and finite".into(),
            ));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dipole scale must be positive, got {scale}"
            )));
        }
        Ok(DipoleActivation { position, moment, scale })
    }

    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        if !domain.shell_contains(self.position) {
            return Err(Error::InvalidArgument(format!(
                "dipole position ({}, {}, {}) is not in the standoff shell",
                self.position.x, self.position.y, self.position.z
            )));
        }
        Ok(())
    }
}

/// Either kind of excitation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Coil(SegmentedCoil),
    Dipole(DipoleActivation),
}

impl Activation {
    /// Magnetic field of this activation at `w`.
    pub fn field_at(&self, w: Vec3) -> Result<Vec3> {
        match self {
            Activation::Coil(c) => coil_field(c, w),
            Activation::Dipole(d) => dipole_field(d, w),
        }
    }

    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        match self {
            Activation::Coil(c) => c.validate_in(domain),
            Activation::Dipole(d) => d.validate_in(domain),
        }
    }
}

/// A directional point sensor: it reads the field component along its
/// orientation at its position. The orientation is stored normalized.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SensorSpec {
    pub position: Vec3,
    pub orientation: Vec3,
}

impl SensorSpec {
    /// Builds a sensor, normalizing `orientation` (zero vectors are rejected).
    pub fn new(position: Vec3, orientation: Vec3) -> Result<SensorSpec> {
        Ok(SensorSpec {
            position,
            orientation: orientation.normalized()?,
        })
    }

    pub fn validate_in(&self, domain: &Domain) -> Result<()> {
        if !domain.shell_contains(self.position) {
            return Err(Error::InvalidArgument(format!(
                "sensor position ({}, {}, {}) is not in the standoff shell",
                self.position.x, self.position.y, self.position.z
            )));
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "sensor orientation is not a unit vector".into(),
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Field evaluation
// ---------------------------------------------------------------------------

/// Magnetic field at `w` of a straight conductor segment from `a` to `b`
/// carrying unit current (closed-form Biot-Savart for a line segment).
///
/// Degenerate when `w` lies on the segment or coincides with an endpoint.
pub fn segment_field(a: Vec3, b: Vec3, w: Vec3, scale: f64) -> Result<Vec3> {
    let ra = a - w;
    let rb = b - w;
    let na = ra.norm();
    let nb = rb.norm();
    let den = na * nb + ra.dot(rb);
    if den < DEGENERACY_TOL {
        return Err(Error::DegenerateGeometry(format!(
            "segment field denominator {den:.3e} below {DEGENERACY_TOL:.0e} \
             (point on or touching the segment)"
        )));
    }
    let field = ra.cross(rb) * (scale * (na + nb) / (na * nb) / den);
    if !field.is_finite() {
        return Err(Error::DegenerateGeometry(
            "segment field evaluated to a non-finite value".into(),
        ));
    }
    Ok(field)
}

/// Field of a segmented coil: sum of its segment fields.
pub fn coil_field(coil: &SegmentedCoil, w: Vec3) -> Result<Vec3> {
    let mut total = Vec3::ZERO;
    for (a, b) in coil.segments() {
        total = total + segment_field(a, b, w, coil.scale)?;
    }
    Ok(total)
}

/// Field at `w` of a point dipole with moment `η` at `y`:
/// `scale * (3 (r·η) r / |r|^5 - η / |r|^3)` with `r = w - y`.
pub fn dipole_field(act: &DipoleActivation, w: Vec3) -> Result<Vec3> {
    let r = w - act.position;
    let n = r.norm();
    if n < DEGENERACY_TOL {
        return Err(Error::DegenerateGeometry(
            "dipole field evaluated at the dipole position".into(),
        ));
    }
    let n3 = n * n * n;
    let n5 = n3 * n * n;
    let field = (r * (3.0 * r.dot(act.moment) / n5) - act.moment * (1.0 / n3)) * act.scale;
    Ok(field)
}

// ---------------------------------------------------------------------------
// Pixel grids
// ---------------------------------------------------------------------------

/// Uniform cell decomposition of `Ω` (or of a planar slice through it).
///
/// Cells are indexed row-major: `k = (iz * ny + iy) * nx + ix`. For a planar
/// grid all midpoints share a fixed `z` and the cell measure is an area; for
/// a volume grid it is a volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelGrid {
    nx: usize,
    ny: usize,
    nz: usize,
    x0: f64,
    y0: f64,
    z0: f64,
    dx: f64,
    dy: f64,
    dz: f64,
    planar: bool,
}

impl PixelGrid {
    /// Planar grid over `[x0, x1] x [y0, y1]` at height `z`.
    pub fn slice(
        nx: usize,
        ny: usize,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        z: f64,
    ) -> Result<PixelGrid> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::InvalidArgument("grid extent must be positive".into()));
        }
        Ok(PixelGrid {
            nx,
            ny,
            nz: 1,
            x0,
            y0,
            z0: z,
            dx: (x1 - x0) / nx as f64,
            dy: (y1 - y0) / ny as f64,
            dz: 0.0,
            planar: true,
        })
    }

    /// Planar grid over the unit square at the mid-height of the unit cube.
    pub fn unit_square_slice(nx: usize, ny: usize) -> Result<PixelGrid> {
        PixelGrid::slice(nx, ny, (0.0, 1.0), (0.0, 1.0), 0.5)
    }

    /// Volume grid over the unit cube.
    pub fn unit_cube(nx: usize, ny: usize, nz: usize) -> Result<PixelGrid> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
        }
        Ok(PixelGrid {
            nx,
            ny,
            nz,
            x0: 0.0,
            y0: 0.0,
            z0: 0.0,
            dx: 1.0 / nx as f64,
            dy: 1.0 / ny as f64,
            dz: 1.0 / nz as f64,
            planar: false,
        })
    }

    /// 1-D grid: a single row of cells along x over the unit square slice.
    pub fn line(n: usize) -> Result<PixelGrid> {
        PixelGrid::slice(n, 1, (0.0, 1.0), (0.0, 1.0), 0.5)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn is_planar(&self) -> bool {
        self.planar
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Measure of a single cell (area for planar grids, volume otherwise).
    pub fn cell_measure(&self) -> f64 {
        if self.planar {
            self.dx * self.dy
        } else {
            self.dx * self.dy * self.dz
        }
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.ny + iy) * self.nx + ix
    }

    /// Midpoint of cell `k`.
    pub fn midpoint(&self, k: usize) -> Vec3 {
        let ix = k % self.nx;
        let iy = (k / self.nx) % self.ny;
        let iz = k / (self.nx * self.ny);
        let z = if self.planar {
            self.z0
        } else {
            self.z0 + (iz as f64 + 0.5) * self.dz
        };
        Vec3::new(
            self.x0 + (ix as f64 + 0.5) * self.dx,
            self.y0 + (iy as f64 + 0.5) * self.dy,
            z,
        )
    }

    /// All cell midpoints in index order.
    pub fn midpoints(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(|k| self.midpoint(k))
    }

    /// The (x, y) extent covered by the grid.
    pub fn extent(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.x0, self.x0 + self.dx * self.nx as f64),
            (self.y0, self.y0 + self.dy * self.ny as f64),
        )
    }

    /// Plane height for planar grids.
    pub fn plane_z(&self) -> f64 {
        self.z0
    }

    /// True when both grids cover the same planar region at the same height.
    pub fn covers_same_slice(&self, other: &PixelGrid) -> bool {
        const TOL: f64 = 1e-12;
        if !(self.planar && other.planar) {
            return false;
        }
        let ((ax0, ax1), (ay0, ay1)) = self.extent();
        let ((bx0, bx1), (by0, by1)) = other.extent();
        (ax0 - bx0).abs() < TOL
            && (ax1 - bx1).abs() < TOL
            && (ay0 - by0).abs() < TOL
            && (ay1 - by1).abs() < TOL
            && (self.z0 - other.z0).abs() < TOL
    }

    /// Total mass of a cell-averaged density on this grid.
    pub fn mass(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_measure()
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
