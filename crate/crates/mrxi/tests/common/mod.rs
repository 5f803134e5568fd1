//! Independent oracles shared by the integration suites.
//!
//! Everything here recomputes results from first principles (quadrature,
//! exhaustive search, direct per-window statistics, hand-rolled elimination)
//! and never calls into the solver paths it is used to check.

#![allow(dead_code)]

use mrxi::geometry::Vec3;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

// ---------------------------------------------------------------------------
// Biot-Savart quadrature
// ---------------------------------------------------------------------------

/// Adaptive Simpson quadrature of the Biot-Savart line integral along a
/// straight segment, component-wise with a vector error control.
pub fn biot_savart_segment_quadrature(a: Vec3, b: Vec3, w: Vec3, scale: f64) -> Vec3 {
    let integrand = move |t: f64| -> Vec3 {
        let phi = a + t * (b - a);
        let r = w - phi;
        let n = r.norm();
        (b - a).cross(r) * (1.0 / (n * n * n))
    };
    fn simpson(f: &dyn Fn(f64) -> Vec3, a: f64, b: f64) -> Vec3 {
        (f(a) + 4.0 * f(0.5 * (a + b)) + f(b)) * ((b - a) / 6.0)
    }
    fn adaptive(
        f: &dyn Fn(f64) -> Vec3,
        a: f64,
        b: f64,
        whole: Vec3,
        tol: f64,
        depth: usize,
    ) -> Vec3 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let err = (left + right - whole).norm();
        if depth == 0 || err <= 15.0 * tol {
            left + right + (left + right - whole) * (1.0 / 15.0)
        } else {
            adaptive(f, a, m, left, tol / 2.0, depth - 1)
                + adaptive(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let whole = simpson(&integrand, 0.0, 1.0);
    adaptive(&integrand, 0.0, 1.0, whole, 1e-13, 48) * scale
}

// ---------------------------------------------------------------------------
// Exact 1-D total variation denoising (taut string)
// ---------------------------------------------------------------------------

/// Exact minimizer of `1/2 Σ (x_i - y_i)^2 + λ Σ |x_{i+1} - x_i|` by the
/// taut-string construction: the solution is the difference sequence of the
/// shortest path through the tube `|φ_k - s_k| ≤ λ` around the running sums
/// `s`, pinned at both ends. The result is certified against the optimality
/// conditions before it is returned.
pub fn taut_string_tv(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n > 0 && lambda >= 0.0);
    if n == 1 {
        return y.to_vec();
    }
    // running sums s_0..s_n and the tube
    let mut s = vec![0.0; n + 1];
    for i in 0..n {
        s[i + 1] = s[i] + y[i];
    }
    let lower = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i == n {
            s[n]
        } else {
            s[i] - lambda
        }
    };
    let upper = |i: usize| -> f64 {
        if i == 0 {
            0.0
        } else if i == n {
            s[n]
        } else {
            s[i] + lambda
        }
    };

    // greedy taut string: from the current knot scan forward, keeping the
    // steepest feasible corridor; when it closes, bend at the binding chain
    // point and restart from there
    let mut knots: Vec<(usize, f64)> = vec![(0, 0.0)];
    let (mut ci, mut cv) = (0usize, 0.0f64);
    while ci < n {
        let mut min_up = f64::INFINITY;
        let mut arg_up = ci + 1;
        let mut max_lo = f64::NEG_INFINITY;
        let mut arg_lo = ci + 1;
        let mut emitted = false;
        for j in (ci + 1)..=n {
            let dx = (j - ci) as f64;
            let su = (upper(j) - cv) / dx;
            let sl = (lower(j) - cv) / dx;
            if su < max_lo {
                // the upper tube dips below an established lower slope:
                // the string bends on the lower chain
                knots.push((arg_lo, lower(arg_lo)));
                cv = lower(arg_lo);
                ci = arg_lo;
                emitted = true;
                break;
            }
            if su < min_up {
                min_up = su;
                arg_up = j;
            }
            if sl > min_up {
                // the lower tube rises above an established upper slope:
                // the string bends on the upper chain
                knots.push((arg_up, upper(arg_up)));
                cv = upper(arg_up);
                ci = arg_up;
                emitted = true;
                break;
            }
            if sl > max_lo {
                max_lo = sl;
                arg_lo = j;
            }
        }
        if !emitted {
            knots.push((n, s[n]));
            break;
        }
    }

    // evaluate the piecewise-linear string at the integers
    let mut phi = vec![0.0; n + 1];
    for pair in knots.windows(2) {
        let (i0, v0) = pair[0];
        let (i1, v1) = pair[1];
        let slope = (v1 - v0) / ((i1 - i0) as f64);
        for i in i0..=i1 {
            phi[i] = v0 + slope * ((i - i0) as f64);
        }
    }
    let x: Vec<f64> = (0..n).map(|i| phi[i + 1] - phi[i]).collect();

    // certify optimality: dual t_k = s_k - φ_k must stay within ±λ, vanish
    // at the end, and sit on the correct bound at every jump
    let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let tol = 1e-9 * scale.max(lambda);
    let mut t = 0.0;
    for k in 1..n {
        t += y[k - 1] - x[k - 1];
        assert!(t.abs() <= lambda + tol, "dual bound broken at {k}: {t} vs {lambda}");
        let jump = x[k] - x[k - 1];
        if jump > tol {
            assert!((t + lambda).abs() <= tol, "up-jump at {k} needs t = -λ, got {t}");
        } else if jump < -tol {
            assert!((t - lambda).abs() <= tol, "down-jump at {k} needs t = +λ, got {t}");
        }
    }
    t += y[n - 1] - x[n - 1];
    assert!(t.abs() <= tol, "dual must close at zero, got {t}");
    x
}

/// Objective of the 1-D TV denoising problem the taut string solves.
pub fn tv_denoise_objective(x: &[f64], y: &[f64], lambda: f64) -> f64 {
    let fit: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
    let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    fit + lambda * tv
}

// ---------------------------------------------------------------------------
// Brute-force lattice minimization
// ---------------------------------------------------------------------------

/// Objective `1/2 ‖Kc - g‖² + α Σ|c_{i+1} - c_i|` with `K` given row-major,
/// evaluated longhand.
pub fn tv_1d_objective(k: &[f64], m: usize, n: usize, g: &[f64], alpha: f64, c: &[f64]) -> f64 {
    let mut fit = 0.0;
    for i in 0..m {
        let mut acc = 0.0;
        for j in 0..n {
            acc += k[i * n + j] * c[j];
        }
        let d = acc - g[i];
        fit += d * d;
    }
    let tv: f64 = c.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    0.5 * fit + alpha * tv
}

/// Exhaustive lattice search over the nonnegative box, refined around the
/// incumbent a fixed number of times. Returns the best objective and point.
pub fn lattice_minimize_tv(
    k: &[f64],
    m: usize,
    n: usize,
    g: &[f64],
    alpha: f64,
    hi: f64,
    points: usize,
    refinements: usize,
) -> (f64, Vec<f64>) {
    assert!(n <= 6, "exhaustive search is for tiny instances");
    let mut lo_bounds = vec![0.0; n];
    let mut hi_bounds = vec![hi; n];
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for _ in 0..=refinements {
        let steps: Vec<f64> = (0..n)
            .map(|i| (hi_bounds[i] - lo_bounds[i]) / (points - 1) as f64)
            .collect();
        let mut idx = vec![0usize; n];
        let mut c = vec![0.0; n];
        loop {
            for i in 0..n {
                c[i] = (lo_bounds[i] + steps[i] * idx[i] as f64).max(0.0);
            }
            let obj = tv_1d_objective(k, m, n, g, alpha, &c);
            if obj < best.0 {
                best = (obj, c.clone());
            }
            // odometer increment
            let mut carry = 0;
            loop {
                idx[carry] += 1;
                if idx[carry] < points {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
                if carry == n {
                    break;
                }
            }
            if carry == n {
                break;
            }
        }
        // zoom in around the incumbent
        for i in 0..n {
            let half = steps[i];
            lo_bounds[i] = (best.1[i] - half).max(0.0);
            hi_bounds[i] = best.1[i] + half;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Direct SSIM
// ---------------------------------------------------------------------------

/// Windowed SSIM computed per window with explicit loops: 11x11 Gaussian
/// weights (sigma 1.5), constants from the dynamic range.
pub fn ssim_naive(x: &[f64], y: &[f64], nx: usize, ny: usize, l: f64) -> f64 {
    const W: usize = 11;
    let mut w1 = [0.0f64; W];
    let mut sum = 0.0;
    for (i, wi) in w1.iter_mut().enumerate() {
        let d = i as f64 - 5.0;
        *wi = (-d * d / (2.0 * 1.5 * 1.5)).exp();
        sum += *wi;
    }
    for wi in &mut w1 {
        *wi /= sum;
    }
    let c1 = (0.01 * l).powi(2);
    let c2 = (0.03 * l).powi(2);
    let mut acc = 0.0;
    let mut count = 0usize;
    for wy in 0..=(ny - W) {
        for wx in 0..=(nx - W) {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..W {
                for dx in 0..W {
                    let wgt = w1[dy] * w1[dx];
                    let a = x[(wy + dy) * nx + wx + dx];
                    let b = y[(wy + dy) * nx + wx + dx];
                    mx += wgt * a;
                    my += wgt * b;
                    mxx += wgt * a * a;
                    myy += wgt * b * b;
                    mxy += wgt * a * b;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}

// ---------------------------------------------------------------------------
// Dense normal equations by Gauss elimination
// ---------------------------------------------------------------------------

/// Solves `(K^T K + 2α I) c = K^T g` longhand with partial pivoting;
/// `k` is row-major `m x n`.
pub fn normal_equations_gauss(k: &[f64], m: usize, n: usize, g: &[f64], alpha: f64) -> Vec<f64> {
    let mut a = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for r in 0..m {
                acc += k[r * n + i] * k[r * n + j];
            }
            a[i][j] = acc;
        }
        a[i][i] += 2.0 * alpha;
    }
    let mut b = vec![0.0f64; n];
    for i in 0..n {
        for r in 0..m {
            b[i] += k[r * n + i] * g[r];
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for j in col..n {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= a[row][j] * x[j];
        }
        x[row] = acc / a[row][row];
    }
    x
}
