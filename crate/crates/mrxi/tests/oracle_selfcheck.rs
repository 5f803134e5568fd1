//! Cross-checks between the independent oracles themselves, so the
//! acceptance suite rests on verified references.

mod common;

use common::*;
use mrxi::geometry::Vec3;

#[test]
fn quadrature_matches_analytic_perpendicular_bisector() {
    // field of a finite segment of half-length h at distance d from its
    // midpoint, on the perpendicular bisector: |B| = 2h / (d sqrt(d^2 + h^2))
    let h = 0.75;
    let d = 0.4;
    let a = Vec3::new(-h, 0.0, 0.0);
    let b = Vec3::new(h, 0.0, 0.0);
    let w = Vec3::new(0.0, d, 0.0);
    let q = biot_savart_segment_quadrature(a, b, w, 1.0);
    let expect = 2.0 * h / (d * (d * d + h * h).sqrt());
    assert!(
        (q.norm() - expect).abs() < 1e-10 * expect,
        "quadrature {} vs analytic {expect}",
        q.norm()
    );
    // direction: current along +x observed at +y gives a field along +z
    assert!(q.z > 0.0 && q.x.abs() < 1e-12 && q.y.abs() < 1e-12);
}

#[test]
fn taut_string_agrees_with_lattice_search_on_tiny_signals() {
    let mut r = rng(100);
    for case in 0..10 {
        let n = 5;
        let y: Vec<f64> = (0..n).map(|_| uniform(&mut r) * 1.5).collect();
        let lambda = 0.05 + 0.1 * uniform(&mut r);
        let x = taut_string_tv(&y, lambda);
        let obj_ts = tv_denoise_objective(&x, &y, lambda);

        // identity K in row-major form
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
        }
        // nonnegative box is enough: with y >= 0 the denoiser stays in it
        let (obj_lattice, _) = lattice_minimize_tv(&k, n, n, &y, lambda, 2.0, 13, 7);
        assert!(
            obj_ts <= obj_lattice + 1e-6,
            "case {case}: taut string {obj_ts} vs lattice {obj_lattice}"
        );
        assert!(
            obj_lattice - obj_ts < 1e-4,
            "case {case}: lattice should approach the optimum, gap {}",
            obj_lattice - obj_ts
        );
    }
}

#[test]
fn taut_string_flattens_constants_and_respects_limits() {
    // constant signal stays fixed for any lambda
    let y = vec![2.5; 40];
    let x = taut_string_tv(&y, 0.3);
    for v in &x {
        assert!((v - 2.5).abs() < 1e-12);
    }
    // lambda = 0 returns the data
    let mut r = rng(7);
    let y: Vec<f64> = (0..30).map(|_| uniform(&mut r)).collect();
    let x = taut_string_tv(&y, 0.0);
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() < 1e-12);
    }
    // huge lambda flattens to the global mean
    let x = taut_string_tv(&y, 1e6);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    for v in &x {
        assert!((v - mean).abs() < 1e-9);
    }
}

#[test]
fn taut_string_two_point_closed_form() {
    // two samples: for λ < |y1 - y0|/2 the jump shrinks by 2λ, otherwise
    // both values collapse to the mean
    let y = vec![0.0, 2.0];
    let x = taut_string_tv(&y, 0.4);
    assert!((x[0] - 0.4).abs() < 1e-12 && (x[1] - 1.6).abs() < 1e-12);
    let x = taut_string_tv(&y, 5.0);
    assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
}

#[test]
fn lattice_search_finds_projection_optimum() {
    // with K = I and alpha = 0 the minimizer is max(g, 0)
    let n = 4;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
    }
    let g = vec![0.8, -0.3, 0.55, 0.1];
    let (obj, c) = lattice_minimize_tv(&k, n, n, &g, 0.0, 1.0, 11, 8);
    let expect = vec![0.8, 0.0, 0.55, 0.1];
    let expect_obj = 0.5 * 0.3f64 * 0.3;
    for (a, b) in c.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
    assert!((obj - expect_obj).abs() < 1e-6);
}

#[test]
fn gauss_solver_inverts_known_system() {
    // K = [[2,0],[0,3],[1,1]], alpha = 0.5: normal matrix is known in
    // closed form, solve against a hand-checked right-hand side
    let k = vec![2.0, 0.0, 0.0, 3.0, 1.0, 1.0];
    let g = vec![2.0, 3.0, 2.0];
    let c = normal_equations_gauss(&k, 3, 2, &g, 0.5);
    // A = [[6,1],[1,11]], b = [6, 11] -> c = A^{-1} b
    let det = 6.0 * 11.0 - 1.0;
    let expect = [(11.0 * 6.0 - 1.0 * 11.0) / det, (6.0 * 11.0 - 1.0 * 6.0) / det];
    assert!((c[0] - expect[0]).abs() < 1e-12);
    assert!((c[1] - expect[1]).abs() < 1e-12);
}

#[test]
fn naive_ssim_is_one_for_identical_images() {
    let mut r = rng(3);
    let img: Vec<f64> = (0..24 * 24).map(|_| uniform(&mut r)).collect();
    let s = ssim_naive(&img, &img, 24, 24, 1.0);
    assert!((s - 1.0).abs() < 1e-12);
}
