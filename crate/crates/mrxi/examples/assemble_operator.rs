//! Assembles the reference forward operator (28 dipole activations, 76
//! sensors, 75x75 grid) and writes its binary container.
//!
//! ```bash
//! cargo run --release -p mrxi --example assemble_operator
//! ```

use std::time::Instant;

use mrxi::config::{CoilOrientation, ExperimentConfig};
use mrxi::io;
use mrxi::phantoms::PhantomKind;
use mrxi::pipeline::{assemble, GridSelector};

fn main() {
    let config = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
    let t0 = Instant::now();
    let op = assemble(&config, GridSelector::Reconstruction).unwrap();
    let elapsed = t0.elapsed();
    println!(
        "assembled K: {} x {} ({} activations x {} sensors over {} cells) in {elapsed:?}",
        op.rows(),
        op.cols(),
        op.num_activations(),
        op.num_sensors(),
        op.cols(),
    );
    let frob: f64 = op.entries().iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("Frobenius norm: {frob:.6e}");

    let path = std::path::Path::new("target/operator.bin");
    io::write_operator(path, &op).unwrap();
    let bytes = std::fs::metadata(path).unwrap().len();
    println!("cache written: {} ({:.1} MiB)", path.display(), bytes as f64 / (1 << 20) as f64);

    // round trip check
    let back = io::read_operator(path).unwrap();
    assert_eq!(back.entries(), op.entries());
    println!("container round trip verified");

    // ill-posedness diagnostic: the singular values collapse fast
    let t1 = Instant::now();
    let sv = mrxi::forward::singular_values(&op, 64).unwrap();
    println!("\nsingular value decay (computed in {:?}):", t1.elapsed());
    for i in [0usize, 1, 3, 7, 15, 31, 63] {
        println!("  sigma[{i:2}] = {:.6e} (ratio to sigma[0]: {:.3e})", sv[i], sv[i] / sv[0]);
    }
}
