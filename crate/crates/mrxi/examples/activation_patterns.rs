//! Weighted multi-coil activation patterns: measuring a pattern equals the
//! weighted sum of the single-coil measurements.
//!
//! ```bash
//! cargo run --release -p mrxi --example activation_patterns
//! ```

use mrxi::config::{CoilOrientation, ExperimentConfig};
use mrxi::forward::{apply_pattern, assemble_operator, ActivationPattern};
use mrxi::geometry::PixelGrid;
use mrxi::phantoms::{rasterize, PhantomKind, PhantomSpec};
use mrxi::pipeline::layout;

fn main() {
    let mut config = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
    config.coils.per_side = 3;
    config.sensors.per_side = 5;
    let lay = layout(&config).unwrap();
    let grid = PixelGrid::unit_square_slice(40, 40).unwrap();
    let op = assemble_operator(&lay.activations, &lay.sensors, &grid, true).unwrap();
    println!(
        "base operator: {} rows ({} activations x {} sensors)",
        op.rows(),
        op.num_activations(),
        op.num_sensors()
    );

    // simultaneous activation of two opposite-side coils plus a half-weight
    // third, alongside a plain single-coil pattern
    let pattern = ActivationPattern::new(vec![
        vec![(0, 1.0), (6, 1.0), (3, 0.5)],
        vec![(9, 1.0)],
    ])
    .unwrap();
    let pat_op = apply_pattern(&op, &pattern).unwrap();
    println!(
        "pattern operator: {} rows ({} patterns x {} sensors)",
        pat_op.rows(),
        pat_op.num_activations(),
        pat_op.num_sensors()
    );

    let density = rasterize(&PhantomSpec::of_kind(PhantomKind::PShape, 1.0).unwrap(), &grid).unwrap();
    let g_single = op.apply_density(&density).unwrap();
    let g_pattern = pat_op.apply_density(&density).unwrap();

    // superposition check on the first pattern block
    let s = op.num_sensors();
    let mut max_rel = 0.0f64;
    for j in 0..s {
        let expect = g_single[j] + g_single[6 * s + j] + 0.5 * g_single[3 * s + j];
        let got = g_pattern[j];
        max_rel = max_rel.max((got - expect).abs() / expect.abs().max(1e-300));
    }
    println!("superposition max relative deviation: {max_rel:.3e}");
}
