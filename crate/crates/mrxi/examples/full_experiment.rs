//! The complete pipeline end to end: layout, simulation on the fine grid,
//! noise, assembly, both reconstruction sweeps, evaluation, artifact export.
//!
//! By default a reduced geometry keeps the runtime short; pass `--full` for
//! the reference-scale setup (197x197 simulation, 75x75 reconstruction).
//!
//! ```bash
//! cargo run --release -p mrxi --example full_experiment
//! cargo run --release -p mrxi --example full_experiment -- --full
//! ```

use mrxi::config::{CoilOrientation, ExperimentConfig};
use mrxi::phantoms::PhantomKind;
use mrxi::pipeline::run_experiment;

fn main() {
    let full = std::env::args().any(|a| a == "--full");
    let mut config = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
    if full {
        config.output_dir = "target/full_experiment".into();
    } else {
        config.grids.simulation = (63, 63);
        config.grids.reconstruction = (25, 25);
        config.output_dir = "target/full_experiment_small".into();
    }

    let t0 = std::time::Instant::now();
    let manifest = run_experiment(&config).unwrap();
    println!("finished in {:?}", t0.elapsed());
    println!("setup {}, phantom {}\n", manifest.setup, config.phantom.kind);
    if let Some(table) = &manifest.ssim_table {
        print!("{}", table.to_csv());
    }
    println!("\nartifacts under {}:", config.output_dir.display());
    for a in &manifest.artifacts {
        println!("  {} ({} bytes)", a.path, a.bytes);
    }
}
