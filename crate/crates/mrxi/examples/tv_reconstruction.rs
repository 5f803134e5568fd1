//! Tikhonov versus total-variation reconstruction on a reduced version of
//! the reference setup (fast enough for a quick look).
//!
//! ```bash
//! cargo run --release -p mrxi --example tv_reconstruction
//! ```

use mrxi::config::{CoilOrientation, ExperimentConfig};
use mrxi::forward::assemble_operator;
use mrxi::metrics::ssim;
use mrxi::phantoms::{rasterize, PhantomKind, PhantomSpec};
use mrxi::pipeline::{grid_for, layout, simulate_measurement, GridSelector};
use mrxi::solvers::{AdmmParams, TikhonovSolver, TvAdmmSolver};

fn main() {
    let mut config = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
    config.grids.simulation = (99, 99);
    config.grids.reconstruction = (39, 39);

    let sim = simulate_measurement(&config).unwrap();
    let g = &sim.measurement.data;

    let lay = layout(&config).unwrap();
    let grid = grid_for(&config, GridSelector::Reconstruction).unwrap();
    let op = assemble_operator(&lay.activations, &lay.sensors, &grid, true).unwrap();
    let truth = rasterize(
        &PhantomSpec::of_kind(config.phantom.kind, config.phantom.intensity).unwrap(),
        &grid,
    )
    .unwrap();
    let l = truth.max_value();
    let shape = (grid.nx(), grid.ny());
    println!("operator {} x {}, phantom {}", op.rows(), op.cols(), config.phantom.kind);

    let rho = 1e-6;
    let tikh = TikhonovSolver::new(&op);
    let tv = TvAdmmSolver::new(&op, shape, rho).unwrap();
    println!("\n{:<12} {:>10} {:>8} {:>12}", "method", "alpha", "ssim", "misfit");
    for &alpha in &[1e-9, 1e-8, 1e-7] {
        let params = AdmmParams::new(alpha).with_rho(rho).with_max_iterations(200);
        let rep = tikh.solve_positivity(g, &params).unwrap();
        let s = ssim(&rep.iterate, &truth.values, shape.0, shape.1, l).unwrap();
        println!("{:<12} {:>10.1e} {:>8.4} {:>12.4e}", "tikh+pos", alpha, s, rep.final_misfit());
    }
    for &alpha in &[1e-9, 1e-8, 1e-7] {
        let params = AdmmParams::new(alpha).with_rho(rho).with_max_iterations(200);
        let rep = tv.solve(g, &params, None).unwrap();
        let s = ssim(&rep.iterate, &truth.values, shape.0, shape.1, l).unwrap();
        println!("{:<12} {:>10.1e} {:>8.4} {:>12.4e}", "tv+pos", alpha, s, rep.final_misfit());
    }
}
