//! Quantitative evaluation of reconstructions against ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian window size used for local SSIM statistics.
const SSIM_WINDOW: usize = 11;
/// Standard deviation of the Gaussian window.
const SSIM_SIGMA: f64 = 1.5;

/// Scores of one reconstruction against its ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub phantom: String,
    pub method: String,
    pub setup: String,
    pub ssim: f64,
    pub rel_l2: f64,
    pub data_misfit: f64,
    /// Dynamic range used for the SSIM constants.
    pub dynamic_range: f64,
}

/// Mean structural similarity over an 11x11 Gaussian window (sigma 1.5),
/// with stabilizers `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2` for dynamic range
/// `L`. Windows are evaluated fully inside the image.
pub fn ssim(x: &[f64], y: &[f64], nx: usize, ny: usize, dynamic_range: f64) -> Result<f64> {
    if x.len() != nx * ny || y.len() != nx * ny {
        return Err(Error::DimensionMismatch(format!(
            "images must both be {nx}x{ny}"
        )));
    }
    if !(dynamic_range > 0.0) {
        return Err(Error::InvalidArgument(
            "ssim dynamic range must be positive".into(),
        ));
    }
    if nx < SSIM_WINDOW || ny < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for windowed ssim"
        )));
    }
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);

    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();

    let mu_x = blur_valid(x, nx, ny);
    let mu_y = blur_valid(y, nx, ny);
    let m_xx = blur_valid(&xx, nx, ny);
    let m_yy = blur_valid(&yy, nx, ny);
    let m_xy = blur_valid(&xy, nx, ny);

    let mut acc = 0.0;
    for i in 0..mu_x.len() {
        let mx = mu_x[i];
        let my = mu_y[i];
        let var_x = m_xx[i] - mx * mx;
        let var_y = m_yy[i] - my * my;
        let cov = m_xy[i] - mx * my;
        let num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (var_x + var_y + c2);
        acc += num / den;
    }
    Ok(acc / mu_x.len() as f64)
}

/// Relative Euclidean error `‖x - y‖ / ‖y‖`.
pub fn rel_l2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(
            "rel_l2 requires equal lengths".into(),
        ));
    }
    let ref_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ref_norm == 0.0 {
        return Err(Error::InvalidArgument(
            "rel_l2 reference must be nonzero".into(),
        ));
    }
    let diff: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / ref_norm)
}

/// Normalized 1-D Gaussian window weights.
fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, wi) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *wi = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *wi;
    }
    for wi in &mut w {
        *wi /= sum;
    }
    w
}

/// Separable Gaussian blur keeping only fully-covered windows; the result is
/// `(nx - 10) x (ny - 10)`.
fn blur_valid(img: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let w = gaussian_window();
    let ox = nx - SSIM_WINDOW + 1;
    let oy = ny - SSIM_WINDOW + 1;
    // rows first
    let mut tmp = vec![0.0; ox * ny];
    for iy in 0..ny {
        for ix in 0..ox {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                acc += wt * img[iy * nx + ix + t];
            }
            tmp[iy * ox + ix] = acc;
        }
    }
    // then columns
    let mut out = vec![0.0; ox * oy];
    for iy in 0..oy {
        for ix in 0..ox {
            let mut acc = 0.0;
            for (t, wt) in w.iter().enumerate() {
                acc += wt * tmp[(iy + t) * ox + ix];
            }
            out[iy * ox + ix] = acc;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Score tables
// ---------------------------------------------------------------------------

/// SSIM scores laid out with one row per method and one column per phantom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsimTable {
    pub setup: String,
    pub phantoms: Vec<String>,
    pub rows: Vec<SsimRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsimRow {
    pub method: String,
    pub ssim: Vec<f64>,
}

impl SsimTable {
    /// Collects evaluation results into the method-by-phantom layout. The
    /// row and column orders follow first appearance.
    pub fn from_results(setup: &str, results: &[EvaluationResult]) -> SsimTable {
        let mut phantoms: Vec<String> = Vec::new();
        let mut methods: Vec<String> = Vec::new();
        for r in results {
            if !phantoms.contains(&r.phantom) {
                phantoms.push(r.phantom.clone());
            }
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        let rows = methods
            .iter()
            .map(|m| {
                let ssim = phantoms
                    .iter()
                    .map(|p| {
                        results
                            .iter()
                            .find(|r| &r.method == m && &r.phantom == p)
                            .map(|r| r.ssim)
                            .unwrap_or(f64::NAN)
                    })
                    .collect();
                SsimRow { method: m.clone(), ssim }
            })
            .collect();
        SsimTable {
            setup: setup.to_string(),
            phantoms,
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for p in &self.phantoms {
            out.push(',');
            out.push_str(p);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.method);
            for v in &row.ssim {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn get(&self, method: &str, phantom: &str) -> Option<f64> {
        let pi = self.phantoms.iter().position(|p| p == phantom)?;
        self.rows
            .iter()
            .find(|r| r.method == method)
            .map(|r| r.ssim[pi])
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn uniform(rng: &mut ChaCha12Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn random_image(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n * n).map(|_| uniform(&mut rng)).collect()
    }

    /// Direct per-window implementation of windowed SSIM, kept as a second
    /// route: every window recomputes its weighted statistics from scratch.
    fn ssim_naive(x: &[f64], y: &[f64], nx: usize, ny: usize, l: f64) -> f64 {
        let w1 = gaussian_window();
        let c1 = (0.01 * l).powi(2);
        let c2 = (0.03 * l).powi(2);
        let mut acc = 0.0;
        let mut count = 0usize;
        for wy in 0..=(ny - SSIM_WINDOW) {
            for wx in 0..=(nx - SSIM_WINDOW) {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut mxx = 0.0;
                let mut myy = 0.0;
                let mut mxy = 0.0;
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
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

    #[test]
    fn ssim_of_identical_images_is_one() {
        let img = random_image(24, 1);
        let s = ssim(&img, &img, 24, 24, 1.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "ssim {s}");
    }

    #[test]
    fn ssim_of_anticorrelated_images_is_negative() {
        // checkerboard: zero mean in every window, so the covariance sign
        // drives the score
        let n = 32;
        let x: Vec<f64> = (0..n * n)
            .map(|k| if (k % n + k / n) % 2 == 0 { 0.5 } else { -0.5 })
            .collect();
        let y: Vec<f64> = x.iter().map(|v| -v + 0.01).collect();
        let s = ssim(&x, &y, n, n, 2.0).unwrap();
        assert!(s < 0.0, "ssim {s}");
    }

    #[test]
    fn ssim_matches_naive_window_loops() {
        let x = random_image(32, 7);
        let y = random_image(32, 8);
        let fast = ssim(&x, &y, 32, 32, 1.0).unwrap();
        let slow = ssim_naive(&x, &y, 32, 32, 1.0);
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    }

    #[test]
    fn ssim_is_symmetric() {
        let x = random_image(20, 12);
        let y = random_image(20, 13);
        let a = ssim(&x, &y, 20, 20, 1.0).unwrap();
        let b = ssim(&y, &x, 20, 20, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ssim_is_invariant_under_joint_rescaling() {
        let x = random_image(20, 20);
        let y = random_image(20, 21);
        let base = ssim(&x, &y, 20, 20, 1.0).unwrap();
        for &a in &[0.25, 3.0, 117.0] {
            let xs: Vec<f64> = x.iter().map(|v| a * v).collect();
            let ys: Vec<f64> = y.iter().map(|v| a * v).collect();
            let scaled = ssim(&xs, &ys, 20, 20, a).unwrap();
            assert!((scaled - base).abs() < 1e-12, "scale {a}: {scaled} vs {base}");
        }
    }

    #[test]
    fn ssim_rejects_bad_inputs() {
        let img = random_image(16, 0);
        assert!(ssim(&img, &img[..100], 16, 16, 1.0).is_err());
        assert!(ssim(&img, &img, 16, 16, 0.0).is_err());
        let tiny = vec![0.0; 25];
        assert!(ssim(&tiny, &tiny, 5, 5, 1.0).is_err());
    }

    #[test]
    fn rel_l2_reference_cases() {
        let y = vec![1.0, -2.0, 3.0];
        assert_eq!(rel_l2(&y, &y).unwrap(), 0.0);
        let x2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert!((rel_l2(&x2, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(rel_l2(&y, &vec![0.0; 3]).is_err());
        assert!(rel_l2(&y, &vec![1.0; 2]).is_err());
    }

    #[test]
    fn rel_l2_matches_direct_formula() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let x: Vec<f64> = (0..50).map(|_| uniform(&mut rng) - 0.5).collect();
        let y: Vec<f64> = (0..50).map(|_| uniform(&mut rng) + 0.1).collect();
        let diff: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let ref_norm: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_eq!(rel_l2(&x, &y).unwrap(), diff / ref_norm);
    }

    #[test]
    fn table_layout_is_method_rows_by_phantom_columns() {
        let mk = |method: &str, phantom: &str, s: f64| EvaluationResult {
            phantom: phantom.into(),
            method: method.into(),
            setup: "aligned".into(),
            ssim: s,
            rel_l2: 0.5,
            data_misfit: 0.1,
            dynamic_range: 1.0,
        };
        let results = vec![
            mk("tikhonov_pos", "p_shape", 0.11),
            mk("tikhonov_pos", "shepp_logan", 0.10),
            mk("tv_pos", "p_shape", 0.21),
            mk("tv_pos", "shepp_logan", 0.16),
        ];
        let table = SsimTable::from_results("aligned", &results);
        assert_eq!(table.phantoms, vec!["p_shape", "shepp_logan"]);
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.get("tv_pos", "shepp_logan"), Some(0.16));
        let csv = table.to_csv();
        assert!(csv.starts_with("method,p_shape,shepp_logan\n"));
        assert!(csv.contains("tikhonov_pos,0.11,0.1\n"));
    }
}
