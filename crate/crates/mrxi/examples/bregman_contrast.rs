//! Contrast restoration by Bregman iteration on a blurred 1-D step.
//!
//! A single TV solve with a large weight flattens the step; adding the
//! residual back recovers the lost height while the data misfit shrinks.
//!
//! ```bash
//! cargo run --release -p mrxi --example bregman_contrast
//! ```

use mrxi::signal::add_gaussian_noise;
use mrxi::solvers::{
    solve_bregman, AdmmParams, BregmanParams, BregmanStopping, DenseMatrix, LinOp,
};

fn main() {
    let n = 50;
    // row-normalized Gaussian blur
    let k = DenseMatrix::from_fn(n, n, |i, j| {
        let d = (i as f64 - j as f64) / 2.0;
        (-0.5 * d * d).exp()
    });
    let k = DenseMatrix::from_fn(n, n, |i, j| {
        let row_sum: f64 = (0..n).map(|jj| k.entry(i, jj)).sum();
        k.entry(i, j) / row_sum
    });
    let truth: Vec<f64> = (0..n).map(|i| if i < n / 2 { 0.2 } else { 1.2 }).collect();
    let mut g_clean = vec![0.0; n];
    k.apply_to(&truth, &mut g_clean);
    let measurement = add_gaussian_noise(&g_clean, 50.0, 11).unwrap();
    let g = &measurement.data;
    let delta = measurement.noise_norm().unwrap();

    let step_height = |c: &[f64]| {
        let left: f64 = c[5..20].iter().sum::<f64>() / 15.0;
        let right: f64 = c[30..45].iter().sum::<f64>() / 15.0;
        right - left
    };

    let inner = AdmmParams::new(0.0)
        .with_max_iterations(3000)
        .with_tolerances(1e-9, 1e-9);
    let stopping = BregmanStopping::Discrepancy { tau: 1.02, noise_level: delta };
    println!("true step height: 1.0, noise level {delta:.4e}\n");
    println!("{:>6} {:>12} {:>12} {:>10}", "outer", "misfit", "height", "error");
    for outers in [1usize, 2, 4, 8, 16] {
        let params = BregmanParams::new(0.5, inner, outers, stopping);
        let report = solve_bregman(&k, g, (n, 1), &params).unwrap();
        let h = step_height(&report.iterate);
        println!(
            "{:>6} {:>12.5e} {:>12.6} {:>10.5}",
            report.outer_data_misfit.as_ref().unwrap().len(),
            report.final_misfit(),
            h,
            (h - 1.0).abs()
        );
    }
}
