//! Magnetic fields of segmented coils and idealized dipoles.
//!
//! Shows the closed-form segment field against the coil refinement limit and
//! the characteristic axial/equatorial dipole pattern.
//!
//! ```bash
//! cargo run --release -p mrxi --example coil_fields
//! ```

use mrxi::geometry::{
    coil_field, dipole_field, segment_field, DipoleActivation, SegmentedCoil, Vec3,
};

fn main() {
    // single straight segment
    let a = Vec3::new(0.0, 0.0, 0.0);
    let b = Vec3::new(1.0, 0.0, 0.0);
    let w = Vec3::new(0.5, 1.0, 0.0);
    let f = segment_field(a, b, w, 1.0).unwrap();
    println!("segment field at {w:?}: ({:+.6e}, {:+.6e}, {:+.6e})", f.x, f.y, f.z);

    // polygonal circle converging with refinement
    let center = Vec3::new(0.0, 0.0, 1.5);
    let axis = Vec3::new(0.0, 0.0, 1.0);
    let probe = Vec3::new(0.2, 0.1, 0.4);
    println!("\npolygonal loop refinement at {probe:?}:");
    let mut prev: Option<Vec3> = None;
    for segments in [8usize, 16, 32, 64, 128, 256] {
        let coil = SegmentedCoil::circle_loop(center, axis, 0.3, segments, 1.0).unwrap();
        let field = coil_field(&coil, probe).unwrap();
        let delta = prev.map(|p| (field - p).norm());
        match delta {
            Some(d) => println!("  l = {segments:3}: |B| = {:.9}, step {d:.3e}", field.norm()),
            None => println!("  l = {segments:3}: |B| = {:.9}", field.norm()),
        }
        prev = Some(field);
    }

    // dipole pattern: axial reading is -2x the equatorial reading
    let dipole = DipoleActivation::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
    let axial = dipole_field(&dipole, Vec3::new(0.7, 0.0, 0.0)).unwrap();
    let equatorial = dipole_field(&dipole, Vec3::new(0.0, 0.7, 0.0)).unwrap();
    println!("\ndipole at distance 0.7:");
    println!("  axial      ({:+.4}, {:+.4}, {:+.4})", axial.x, axial.y, axial.z);
    println!("  equatorial ({:+.4}, {:+.4}, {:+.4})", equatorial.x, equatorial.y, equatorial.z);
    println!("  component ratio: {:+.12}", axial.x / equatorial.x);
}
