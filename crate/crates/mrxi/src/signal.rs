//! Measurement vectors and reproducible noise injection.
//!
//! SNR convention: signal power over noise power in decibels, with power
//! taken as the mean square over all channels. Samples come from a
//! ChaCha12 stream seeded explicitly, transformed by Box-Muller, so a given
//! `(snr_db, seed)` pair always produces the same noise.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A measurement vector with its noise bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Measurement {
    /// The (possibly noisy) data vector.
    pub data: Vec<f64>,
    /// Noise-free reference, when known (synthetic data).
    pub clean: Option<Vec<f64>>,
    /// Requested SNR in dB; `None` when no noise was applied.
    pub snr_db: Option<f64>,
    /// Seed of the noise stream; present whenever `snr_db` is.
    pub seed: Option<u64>,
}

impl Measurement {
    /// Wraps noise-free data.
    pub fn clean(data: Vec<f64>) -> Measurement {
        Measurement { data, clean: None, snr_db: None, seed: None }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Euclidean norm of the realized noise, when the clean reference is known.
    pub fn noise_norm(&self) -> Option<f64> {
        self.clean.as_ref().map(|clean| {
            self.data
                .iter()
                .zip(clean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }
}

/// Standard normal samples via Box-Muller on a ChaCha12 stream.
struct GaussianStream {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    fn new(seed: u64) -> GaussianStream {
        GaussianStream { rng: ChaCha12Rng::seed_from_u64(seed), spare: None }
    }

    /// Uniform in (0, 1]: 53 high bits of the stream, shifted off zero.
    fn uniform_open(&mut self) -> f64 {
        (((self.rng.next_u64() >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, 1).
    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Adds i.i.d. zero-mean Gaussian noise scaled to the requested SNR:
/// `σ² = (‖g‖² / M) · 10^(-snr_db / 10)`.
///
/// An infinite `snr_db` disables noise and returns the data unchanged.
pub fn add_gaussian_noise(g: &[f64], snr_db: f64, seed: u64) -> Result<Measurement> {
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("snr_db must not be NaN".into()));
    }
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(Measurement {
            data: g.to_vec(),
            clean: Some(g.to_vec()),
            snr_db: None,
            seed: None,
        });
    }
    let power: f64 = g.iter().map(|v| v * v).sum();
    if power == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let m = g.len() as f64;
    let sigma = ((power / m) * 10f64.powf(-snr_db / 10.0)).sqrt();
    let mut stream = GaussianStream::new(seed);
    let data = g.iter().map(|&v| v + sigma * stream.next()).collect();
    Ok(Measurement {
        data,
        clean: Some(g.to_vec()),
        snr_db: Some(snr_db),
        seed: Some(seed),
    })
}

/// Empirical SNR `10 log10(‖g‖² / ‖n‖²)` of a noisy measurement against its
/// clean reference.
pub fn empirical_snr_db(clean: &[f64], noisy: &[f64]) -> Result<f64> {
    if clean.len() != noisy.len() {
        return Err(Error::DimensionMismatch(
            "clean and noisy vectors differ in length".into(),
        ));
    }
    let sig: f64 = clean.iter().map(|v| v * v).sum();
    let noise: f64 = clean
        .iter()
        .zip(noisy)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (sig / noise).log10())
}
