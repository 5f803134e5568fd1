//! Scratch calibration driver (temporary).

use std::time::Instant;

use mrxi::config::{CoilOrientation, ExperimentConfig};
use mrxi::forward::assemble_operator;
use mrxi::phantoms::{rasterize, PhantomKind, PhantomSpec};
use mrxi::pipeline::{self, GridSelector};
use mrxi::metrics::ssim;
use mrxi::signal::add_gaussian_noise;
use mrxi::solvers::{AdmmParams, TikhonovSolver, TvAdmmSolver, LinOp};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let phantom: PhantomKind = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(PhantomKind::PShape);
    let orientation = match args.get(2).map(|s| s.as_str()) {
        Some("randomized") => CoilOrientation::Randomized,
        _ => CoilOrientation::Aligned,
    };
    let seed: u64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(1);
    let iters: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(200);

    let mut cfg = ExperimentConfig::reference(phantom, orientation);
    cfg.coils.seed = seed;
    if let Ok(s) = std::env::var("CAL_SNR") {
        cfg.noise.snr_db = Some(s.parse().unwrap());
    }
    if let Ok(s) = std::env::var("CAL_STANDOFF") {
        let s: f64 = s.parse().unwrap();
        cfg.coil_standoff = s;
        cfg.sensor_standoff = s;
    }
    if let Ok(s) = std::env::var("CAL_COIL_STANDOFF") {
        cfg.coil_standoff = s.parse().unwrap();
    }
    if let Ok(s) = std::env::var("CAL_SENSOR_STANDOFF") {
        cfg.sensor_standoff = s.parse().unwrap();
    }

    let t0 = Instant::now();
    let lay = pipeline::layout(&cfg).unwrap();
    let sim = pipeline::simulate_measurement(&cfg).unwrap();
    println!("simulate: {:?}", t0.elapsed());
    let g = &sim.measurement.data;
    let g_norm: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("g norm: {g_norm:.6e}, noise norm: {:?}", sim.measurement.noise_norm());

    let t1 = Instant::now();
    let grid = pipeline::grid_for(&cfg, GridSelector::Reconstruction).unwrap();
    let op = assemble_operator(&lay.activations, &lay.sensors, &grid, true).unwrap();
    println!("assemble {}x{}: {:?}", op.rows(), op.cols(), t1.elapsed());

    // kernel scale: mean column norm^2 of K = trace(K^T K)/N
    let trace: f64 = op.entries().iter().map(|v| v * v).sum();
    let n = op.cols() as f64;
    println!("trace(KtK)/N = {:.6e}, |K|_F = {:.6e}", trace / n, trace.sqrt());

    let spec = PhantomSpec::of_kind(phantom, 1.0).unwrap();
    let truth = rasterize(&spec, &grid).unwrap();
    let l = truth.max_value();

    let shape = (grid.nx(), grid.ny());
    let rho: f64 = std::env::var("CAL_RHO").ok().and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    println!("rho = {rho:.3e}, iters = {iters}");

    let t2 = Instant::now();
    let tv_solver = TvAdmmSolver::new(&op, shape, rho).unwrap();
    println!("tv factorization: {:?}", t2.elapsed());
    let mut warm: Option<Vec<f64>> = None;
    let emin: i32 = std::env::var("CAL_EMIN").ok().and_then(|s| s.parse().ok()).unwrap_or(4);
    let emax: i32 = std::env::var("CAL_EMAX").ok().and_then(|s| s.parse().ok()).unwrap_or(14);
    for e in (emin..=emax).rev() {
        let alpha = 10f64.powi(-e);
        let t = Instant::now();
        let params = AdmmParams::new(alpha).with_rho(rho).with_max_iterations(iters);
        let rep = tv_solver.solve(g, &params, warm.as_deref()).unwrap();
        warm = Some(rep.iterate.clone());
        let s = ssim(&rep.iterate, &truth.values, shape.0, shape.1, l).unwrap();
        println!(
            "tv    alpha=1e-{e:02}: ssim {s:+.4}, iters {} ({:?}), misfit {:.4e}, t {:?}",
            rep.iterations, rep.termination, rep.final_misfit(), t.elapsed()
        );
    }

    let t3 = Instant::now();
    let tikh = TikhonovSolver::new(&op);
    println!("tikhonov gram: {:?}", t3.elapsed());
    for e in (emin..=emax).rev() {
        let alpha = 10f64.powi(-e);
        let t = Instant::now();
        let params = AdmmParams::new(alpha).with_rho(rho).with_max_iterations(iters);
        let rep = tikh.solve_positivity(g, &params).unwrap();
        let s = ssim(&rep.iterate, &truth.values, shape.0, shape.1, l).unwrap();
        println!(
            "tikh  alpha=1e-{e:02}: ssim {s:+.4}, iters {} ({:?}), misfit {:.4e}, t {:?}",
            rep.iterations, rep.termination, rep.final_misfit(), t.elapsed()
        );
    }
    println!("total: {:?}", t0.elapsed());
    let _ = op.rows();
}
