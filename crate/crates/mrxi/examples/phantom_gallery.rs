//! Rasterizes the three built-in phantoms and writes them as 16-bit PGM
//! images plus CSV grids.
//!
//! ```bash
//! cargo run --release -p mrxi --example phantom_gallery
//! ```

use mrxi::forward::DensityField;
use mrxi::geometry::PixelGrid;
use mrxi::io;
use mrxi::phantoms::{rasterize, resample, PhantomKind, PhantomSpec};

fn main() {
    let out = std::path::Path::new("target/phantom_gallery");
    std::fs::create_dir_all(out).unwrap();
    let fine = PixelGrid::unit_square_slice(197, 197).unwrap();
    let coarse = PixelGrid::unit_square_slice(75, 75).unwrap();

    for kind in [PhantomKind::PShape, PhantomKind::SheppLogan, PhantomKind::Tumor] {
        let spec = PhantomSpec::of_kind(kind, 1.0).unwrap();
        let hi: DensityField = rasterize(&spec, &fine).unwrap();
        let lo = resample(&hi, &coarse).unwrap();
        println!(
            "{kind}: mass {:.5} on 197x197, {:.5} after conservative downsampling",
            hi.mass(),
            lo.mass()
        );
        let pgm = out.join(format!("{kind}.pgm"));
        io::write_pgm(&pgm, &hi.values, 197, 197, 65535).unwrap();
        io::write_csv_grid(&out.join(format!("{kind}.csv")), &lo).unwrap();
        println!("  wrote {}", pgm.display());
    }
}
