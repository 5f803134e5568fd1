//! Simulation and reconstruction toolkit for magnetorelaxometry imaging.
//!
//! The crate builds the linear forward operator that maps a magnetic
//! nanoparticle density to directional sensor readings under configurable
//! coil activations, and recovers densities from (noisy) measurements with
//! variational regularization:
//!
//! * [`geometry`] — coils, dipoles, sensors, pixel grids and the magnetic
//!   fields activations induce inside the domain.
//! * [`forward`] — the measurement kernel and the dense forward operator,
//!   including weighted multi-coil activation patterns.
//! * [`phantoms`] — synthetic test densities (P-shape, Shepp-Logan, tumor)
//!   and conservative resampling between grids.
//! * [`signal`] — seeded Gaussian noise at a prescribed SNR.
//! * [`solvers`] — Tikhonov and total-variation reconstruction with a
//!   positivity constraint (ADMM), plus Bregman iteration.
//! * [`metrics`] — SSIM and error norms against ground truth.
//! * [`config`] / [`pipeline`] — declarative experiment driver: layout,
//!   assembly, simulation, noise, reconstruction, evaluation, export.
//!
//! See the `examples/` directory for a runnable tour of each capability, and
//! the `mrxi` binary for the command-line pipeline.

pub mod config;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod phantoms;
pub mod pipeline;
pub mod signal;
pub mod solvers;

pub use error::{Error, Result};
pub use geometry::{
    Activation, DipoleActivation, Domain, PixelGrid, SegmentedCoil, SensorSpec, Vec3,
};
