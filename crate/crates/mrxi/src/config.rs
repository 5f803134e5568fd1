//! Declarative experiment configuration.
//!
//! Configs are versioned JSON with every seed explicit. Parsing rejects
//! unknown fields; validation reports every violated constraint. Parsing a
//! config and serializing it back is idempotent (defaults materialize on the
//! first parse).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantoms::{ComposeMode, PhantomKind, PhantomSpec, ShapeSpec};
use crate::solvers::TvFlavor;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    1.0
}

fn default_max_iterations() -> usize {
    2000
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_flavor() -> TvFlavor {
    TvFlavor::Anisotropic
}

fn default_tau() -> f64 {
    1.02
}

fn default_max_outer() -> usize {
    10
}

/// Coil orientation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoilOrientation {
    /// All coils point at the domain (inward side normal).
    Aligned,
    /// Orientations drawn uniformly on the in-plane unit circle.
    Randomized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilLayoutConfig {
    /// Coils per side of the square domain.
    pub per_side: usize,
    pub orientation: CoilOrientation,
    /// Seed of the orientation stream (used in randomized mode; always
    /// recorded).
    pub seed: u64,
    /// Magnitude of every coil moment.
    #[serde(default = "default_one")]
    pub moment_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorLayoutConfig {
    /// Sensors per side of the square domain; orientations point inward.
    pub per_side: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Resolution used to simulate the measurement.
    pub simulation: (usize, usize),
    /// Resolution reconstructions run on.
    pub reconstruction: (usize, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    pub kind: PhantomKind,
    #[serde(default = "default_one")]
    pub intensity: f64,
    /// Full geometry override; the built-in shapes are used when absent.
    #[serde(default)]
    pub shapes: Option<Vec<ShapeSpec>>,
    #[serde(default)]
    pub compose: Option<ComposeMode>,
}

impl PhantomConfig {
    pub fn to_spec(&self) -> Result<PhantomSpec> {
        let mut spec = PhantomSpec::of_kind(self.kind, self.intensity)?;
        if let Some(shapes) = &self.shapes {
            spec.shapes = shapes.clone();
        }
        if let Some(compose) = self.compose {
            spec.compose = compose;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// SNR in dB; `null` disables noise.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

/// One reconstruction method with its regularization sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Tikhonov {
        alphas: Vec<f64>,
        #[serde(default = "default_true")]
        positivity: bool,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    Tv {
        alphas: Vec<f64>,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_flavor")]
        flavor: TvFlavor,
    },
    Bregman {
        /// Fixed large TV weight of the inner solves.
        alpha: f64,
        #[serde(default = "default_rho")]
        rho: f64,
        #[serde(default = "default_max_iterations")]
        max_iterations: usize,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
        #[serde(default = "default_flavor")]
        flavor: TvFlavor,
        #[serde(default = "default_max_outer")]
        max_outer: usize,
        #[serde(default = "default_tau")]
        tau: f64,
    },
}

impl MethodConfig {
    /// Identifier used in tables and artifact names.
    pub fn label(&self) -> String {
        match self {
            MethodConfig::Tikhonov { positivity: true, .. } => "tikhonov_pos".into(),
            MethodConfig::Tikhonov { positivity: false, .. } => "tikhonov".into(),
            MethodConfig::Tv { .. } => "tv_pos".into(),
            MethodConfig::Bregman { .. } => "bregman".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MethodConfig::Tikhonov { alphas, rho, max_iterations, tolerance, .. }
            | MethodConfig::Tv { alphas, rho, max_iterations, tolerance, .. } => {
                if alphas.is_empty() {
                    return Err(Error::Config(format!(
                        "method {}: alpha sweep is empty",
                        self.label()
                    )));
                }
                if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                    return Err(Error::Config(format!(
                        "method {}: alphas must be positive and finite",
                        self.label()
                    )));
                }
                validate_solver_knobs(&self.label(), *rho, *max_iterations, *tolerance)
            }
            MethodConfig::Bregman { alpha, rho, max_iterations, tolerance, max_outer, tau, .. } => {
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::Config("bregman: alpha must be positive".into()));
                }
                if *max_outer == 0 {
                    return Err(Error::Config("bregman: max_outer must be >= 1".into()));
                }
                if !(*tau >= 1.0) {
                    return Err(Error::Config("bregman: tau must be >= 1".into()));
                }
                validate_solver_knobs("bregman", *rho, *max_iterations, *tolerance)
            }
        }
    }
}

fn validate_solver_knobs(label: &str, rho: f64, max_iterations: usize, tolerance: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Config(format!("method {label}: rho must be positive")));
    }
    if max_iterations == 0 {
        return Err(Error::Config(format!(
            "method {label}: max_iterations must be >= 1"
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!(
            "method {label}: tolerance must be positive"
        )));
    }
    Ok(())
}

/// Complete experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Distance of coil positions from the domain boundary.
    pub coil_standoff: f64,
    /// Distance of sensor positions from the domain boundary.
    pub sensor_standoff: f64,
    pub coils: CoilLayoutConfig,
    pub sensors: SensorLayoutConfig,
    pub grids: GridConfig,
    pub phantom: PhantomConfig,
    pub noise: NoiseConfig,
    pub methods: Vec<MethodConfig>,
    pub output_dir: PathBuf,
    /// Permits simulating and reconstructing on the same grid.
    #[serde(default)]
    pub allow_inverse_crime: bool,
    /// Applies the linearized Langevin factor 1/3 in the kernel.
    #[serde(default = "default_true")]
    pub langevin_linearized: bool,
}

impl ExperimentConfig {
    /// Collects every constraint violation instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        if self.version != CONFIG_SCHEMA_VERSION {
            problems.push(format!(
                "version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                self.version
            ));
        }
        for (name, v) in [
            ("coil_standoff", self.coil_standoff),
            ("sensor_standoff", self.sensor_standoff),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                problems.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.coils.per_side == 0 {
            problems.push("coils.per_side must be >= 1".into());
        }
        if !(self.coils.moment_scale > 0.0) || !self.coils.moment_scale.is_finite() {
            problems.push("coils.moment_scale must be positive".into());
        }
        if self.sensors.per_side == 0 {
            problems.push("sensors.per_side must be >= 1".into());
        }
        for (name, (gx, gy)) in [
            ("grids.simulation", self.grids.simulation),
            ("grids.reconstruction", self.grids.reconstruction),
        ] {
            if gx == 0 || gy == 0 {
                problems.push(format!("{name} must have positive resolution"));
            }
        }
        if self.grids.simulation == self.grids.reconstruction && !self.allow_inverse_crime {
            problems.push(
                "simulation and reconstruction grids are identical; \
                 set allow_inverse_crime to permit this deliberately"
                    .into(),
            );
        }
        if let Err(e) = self.phantom.to_spec() {
            problems.push(format!("phantom: {e}"));
        }
        if let Some(snr) = self.noise.snr_db {
            if snr.is_nan() {
                problems.push("noise.snr_db must not be NaN".into());
            }
        }
        if self.methods.is_empty() {
            problems.push("at least one method is required".into());
        }
        for m in &self.methods {
            if let Err(e) = m.validate() {
                problems.push(e.to_string());
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            problems.push("output_dir must not be empty".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn from_json_str(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_json_str(&text)
    }

    /// Canonical pretty JSON form (idempotent with parsing).
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// The default two-method setup on the reference geometry: 28 dipole
    /// activations and 76 sensors around the unit square, simulation on
    /// 197x197, reconstruction on 75x75, 80 dB noise.
    pub fn reference(phantom: PhantomKind, orientation: CoilOrientation) -> ExperimentConfig {
        ExperimentConfig {
            version: CONFIG_SCHEMA_VERSION,
            coil_standoff: 0.15,
            sensor_standoff: 0.15,
            coils: CoilLayoutConfig {
                per_side: 7,
                orientation,
                seed: 1,
                moment_scale: 1.0,
            },
            sensors: SensorLayoutConfig { per_side: 19 },
            grids: GridConfig {
                simulation: (197, 197),
                reconstruction: (75, 75),
            },
            phantom: PhantomConfig {
                kind: phantom,
                intensity: 1.0,
                shapes: None,
                compose: None,
            },
            noise: NoiseConfig { snr_db: Some(80.0), seed: 42 },
            methods: vec![
                MethodConfig::Tikhonov {
                    alphas: default_tikhonov_sweep(),
                    positivity: true,
                    rho: default_reference_rho(),
                    max_iterations: 300,
                    tolerance: 1e-6,
                },
                MethodConfig::Tv {
                    alphas: default_tv_sweep(),
                    rho: default_reference_rho(),
                    max_iterations: 300,
                    tolerance: 1e-6,
                    flavor: TvFlavor::Anisotropic,
                },
            ],
            output_dir: PathBuf::from("out"),
            allow_inverse_crime: false,
            langevin_linearized: true,
        }
    }
}

/// Five-point logarithmic Tikhonov sweep of the reference setup.
pub fn default_tikhonov_sweep() -> Vec<f64> {
    vec![1e-8, 1e-7, 1e-6, 1e-5, 1e-4]
}

/// Five-point logarithmic TV sweep of the reference setup.
pub fn default_tv_sweep() -> Vec<f64> {
    vec![1e-9, 1e-8, 1e-7, 1e-6, 1e-5]
}

/// Augmentation weight matched to the kernel scale of the reference setup.
pub fn default_reference_rho() -> f64 {
    1e-6
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = ExperimentConfig::reference(PhantomKind::SheppLogan, CoilOrientation::Randomized);
        let once = c.to_canonical_json();
        let reparsed = ExperimentConfig::from_json_str(&once).unwrap();
        let twice = reparsed.to_canonical_json();
        assert_eq!(once, twice);
    }

    #[test]
    fn inverse_crime_guard_rejects_equal_grids() {
        let mut c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        c.grids.reconstruction = c.grids.simulation;
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("inverse_crime"), "{err}");
        c.allow_inverse_crime = true;
        c.validate().unwrap();
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        let mut v: serde_json::Value = serde_json::from_str(&c.to_canonical_json()).unwrap();
        v["surprise"] = serde_json::json!(1);
        let text = serde_json::to_string(&v).unwrap();
        assert!(matches!(
            ExperimentConfig::from_json_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_collects_multiple_problems() {
        let mut c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        c.coil_standoff = -1.0;
        c.sensors.per_side = 0;
        c.methods.clear();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("coil_standoff"), "{err}");
        assert!(err.contains("sensors.per_side"), "{err}");
        assert!(err.contains("method"), "{err}");
    }

    #[test]
    fn method_validation_catches_bad_sweeps() {
        let m = MethodConfig::Tv {
            alphas: vec![],
            rho: 1.0,
            max_iterations: 100,
            tolerance: 1e-6,
            flavor: TvFlavor::Anisotropic,
        };
        assert!(m.validate().is_err());
        let m = MethodConfig::Tikhonov {
            alphas: vec![1e-3, -1.0],
            positivity: true,
            rho: 1.0,
            max_iterations: 100,
            tolerance: 1e-6,
        };
        assert!(m.validate().is_err());
        let m = MethodConfig::Bregman {
            alpha: 0.1,
            rho: 1.0,
            max_iterations: 100,
            tolerance: 1e-6,
            flavor: TvFlavor::Anisotropic,
            max_outer: 10,
            tau: 0.9,
        };
        assert!(m.validate().is_err());
    }
}
