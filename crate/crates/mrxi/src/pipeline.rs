//! End-to-end experiment driver: layout generation, operator assembly,
//! simulation, noise, reconstruction, evaluation and artifact export.
//!
//! Every stage is also exposed on its own for the command-line interface.
//! A run writes a manifest listing each artifact with its SHA-256; all
//! randomness is seeded through the config, so re-running an identical
//! config reproduces every artifact byte for byte.

use std::path::{Path, PathBuf};

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::{CoilOrientation, ExperimentConfig, MethodConfig};
use crate::error::{Error, Result};
use crate::forward::{assemble_operator, simulate, DensityField, ForwardOperator};
use crate::geometry::{Activation, DipoleActivation, Domain, PixelGrid, SensorSpec, Vec3};
use crate::io;
use crate::metrics::{rel_l2, ssim, EvaluationResult, SsimTable};
use crate::phantoms::rasterize;
use crate::signal::{add_gaussian_noise, Measurement};
use crate::solvers::{
    solve_bregman, AdmmParams, BregmanParams, BregmanStopping, SolverReport, TikhonovSolver,
    TvAdmmSolver,
};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

fn stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Stage {
        stage: name.to_string(),
        source: Box::new(e),
    })
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

/// Generated activations and sensors around the domain slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Layout {
    pub domain: Domain,
    pub activations: Vec<Activation>,
    pub sensors: Vec<SensorSpec>,
}

/// Midpoint-spaced positions along the four sides of the unit square at the
/// given standoff; sides in order bottom, right, top, left. Returns the
/// position and the inward unit direction for each slot.
fn side_slots(per_side: usize, standoff: f64, plane_z: f64) -> Vec<(Vec3, Vec3)> {
    let mut slots = Vec::with_capacity(4 * per_side);
    let spaced = |i: usize| (i as f64 + 0.5) / per_side as f64;
    for i in 0..per_side {
        slots.push((Vec3::new(spaced(i), -standoff, plane_z), Vec3::new(0.0, 1.0, 0.0)));
    }
    for i in 0..per_side {
        slots.push((Vec3::new(1.0 + standoff, spaced(i), plane_z), Vec3::new(-1.0, 0.0, 0.0)));
    }
    for i in 0..per_side {
        slots.push((Vec3::new(spaced(i), 1.0 + standoff, plane_z), Vec3::new(0.0, -1.0, 0.0)));
    }
    for i in 0..per_side {
        slots.push((Vec3::new(-standoff, spaced(i), plane_z), Vec3::new(1.0, 0.0, 0.0)));
    }
    slots
}

/// Places dipole activations and inward-pointing sensors along the sides of
/// the domain slice. In randomized mode the coil moments are drawn uniformly
/// on the in-plane unit circle from the config seed; positions never change.
pub fn layout(config: &ExperimentConfig) -> Result<Layout> {
    config.validate()?;
    let standoff = config.coil_standoff.max(config.sensor_standoff);
    let domain = Domain::unit(standoff)?;
    let plane_z = 0.5;

    let mut rng = ChaCha12Rng::seed_from_u64(config.coils.seed);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);

    let mut activations = Vec::new();
    for (position, inward) in side_slots(config.coils.per_side, config.coil_standoff, plane_z) {
        let moment = match config.coils.orientation {
            CoilOrientation::Aligned => inward,
            CoilOrientation::Randomized => {
                let theta = 2.0 * std::f64::consts::PI * uniform();
                Vec3::new(theta.cos(), theta.sin(), 0.0)
            }
        } * config.coils.moment_scale;
        let dipole = DipoleActivation::new(position, moment, 1.0)?;
        dipole.validate_in(&domain)?;
        activations.push(Activation::Dipole(dipole));
    }

    let mut sensors = Vec::new();
    for (position, inward) in side_slots(config.sensors.per_side, config.sensor_standoff, plane_z) {
        let sensor = SensorSpec::new(position, inward)?;
        sensor.validate_in(&domain)?;
        sensors.push(sensor);
    }

    Ok(Layout { domain, activations, sensors })
}

// ---------------------------------------------------------------------------
// Individual stages
// ---------------------------------------------------------------------------

/// Which of the two configured grids to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSelector {
    Simulation,
    Reconstruction,
}

pub fn grid_for(config: &ExperimentConfig, which: GridSelector) -> Result<PixelGrid> {
    let (nx, ny) = match which {
        GridSelector::Simulation => config.grids.simulation,
        GridSelector::Reconstruction => config.grids.reconstruction,
    };
    PixelGrid::unit_square_slice(nx, ny)
}

/// Assembles the dense forward operator on the selected grid.
pub fn assemble(config: &ExperimentConfig, which: GridSelector) -> Result<ForwardOperator> {
    let lay = layout(config)?;
    let grid = grid_for(config, which)?;
    assemble_operator(&lay.activations, &lay.sensors, &grid, config.langevin_linearized)
}

/// Result of the simulation stage.
#[derive(Debug, Clone)]
pub struct Simulation {
    /// Phantom on the simulation grid.
    pub truth_fine: DensityField,
    /// Measurement after the configured noise.
    pub measurement: Measurement,
}

/// Simulates the measurement on the fine grid and applies the configured
/// noise. Rows of the fine operator are streamed, never materialized.
pub fn simulate_measurement(config: &ExperimentConfig) -> Result<Simulation> {
    let lay = layout(config)?;
    let fine = grid_for(config, GridSelector::Simulation)?;
    let spec = config.phantom.to_spec()?;
    let truth_fine = rasterize(&spec, &fine)?;
    let g_clean = simulate(
        &lay.activations,
        &lay.sensors,
        &truth_fine,
        config.langevin_linearized,
    )?;
    let measurement = match config.noise.snr_db {
        Some(snr) => add_gaussian_noise(&g_clean, snr, config.noise.seed)?,
        None => Measurement {
            data: g_clean.clone(),
            clean: Some(g_clean),
            snr_db: None,
            seed: None,
        },
    };
    Ok(Simulation { truth_fine, measurement })
}

/// All reconstructions of one method across its regularization sweep.
#[derive(Debug)]
pub struct MethodRun {
    pub label: String,
    pub reports: Vec<SolverReport>,
    /// Index of the sweep entry with the best SSIM (filled by evaluation).
    pub best: usize,
}

/// Runs every configured method over its sweep against the given operator
/// and data. `noise_norm` feeds the Bregman discrepancy rule when known.
pub fn reconstruct(
    config: &ExperimentConfig,
    op: &ForwardOperator,
    g: &[f64],
    noise_norm: Option<f64>,
) -> Result<Vec<MethodRun>> {
    let shape = (op.grid().nx(), op.grid().ny());
    let mut runs = Vec::new();
    for method in &config.methods {
        let label = method.label();
        let mut reports = Vec::new();
        match method {
            MethodConfig::Tikhonov { alphas, positivity, rho, max_iterations, tolerance } => {
                let solver = TikhonovSolver::new(op);
                for &alpha in alphas {
                    let report = if *positivity {
                        let params = AdmmParams::new(alpha)
                            .with_rho(*rho)
                            .with_max_iterations(*max_iterations)
                            .with_tolerances(*tolerance, *tolerance);
                        solver.solve_positivity(g, &params)?
                    } else {
                        solver.solve_unconstrained(g, alpha)?
                    };
                    reports.push(report);
                }
            }
            MethodConfig::Tv { alphas, rho, max_iterations, tolerance, flavor } => {
                let solver = TvAdmmSolver::new(op, shape, *rho)?;
                let mut warm: Option<Vec<f64>> = None;
                for &alpha in alphas {
                    let params = AdmmParams::new(alpha)
                        .with_rho(*rho)
                        .with_max_iterations(*max_iterations)
                        .with_tolerances(*tolerance, *tolerance)
                        .with_flavor(*flavor);
                    let report = solver.solve(g, &params, warm.as_deref())?;
                    warm = Some(report.iterate.clone());
                    reports.push(report);
                }
            }
            MethodConfig::Bregman {
                alpha,
                rho,
                max_iterations,
                tolerance,
                flavor,
                max_outer,
                tau,
            } => {
                let inner = AdmmParams::new(*alpha)
                    .with_rho(*rho)
                    .with_max_iterations(*max_iterations)
                    .with_tolerances(*tolerance, *tolerance)
                    .with_flavor(*flavor);
                let stopping = match noise_norm {
                    Some(delta) => BregmanStopping::Discrepancy { tau: *tau, noise_level: delta },
                    None => BregmanStopping::MaxOuter,
                };
                let params = BregmanParams::new(*alpha, inner, *max_outer, stopping);
                reports.push(solve_bregman(op, g, shape, &params)?);
            }
        }
        runs.push(MethodRun { label, reports, best: 0 });
    }
    Ok(runs)
}

/// Scores one reconstruction against the coarse-grid truth.
pub fn evaluate(
    recon: &[f64],
    truth: &DensityField,
    setup: &str,
    method: &str,
    phantom: &str,
    data_misfit: f64,
) -> Result<EvaluationResult> {
    let grid = &truth.grid;
    let dynamic_range = truth.max_value().max(f64::MIN_POSITIVE);
    Ok(EvaluationResult {
        phantom: phantom.to_string(),
        method: method.to_string(),
        setup: setup.to_string(),
        ssim: ssim(recon, &truth.values, grid.nx(), grid.ny(), dynamic_range)?,
        rel_l2: rel_l2(recon, &truth.values)?,
        data_misfit,
        dynamic_range,
    })
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    /// True when a stage failed and the artifact list is incomplete.
    pub partial: bool,
    pub setup: String,
    pub config: ExperimentConfig,
    pub ssim_table: Option<SsimTable>,
    pub evaluations: Vec<EvaluationResult>,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Tracks artifacts as they are written.
struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl ArtifactWriter {
    fn new(root: &Path) -> ArtifactWriter {
        ArtifactWriter { root: root.to_path_buf(), entries: Vec::new() }
    }

    fn write(&mut self, name: &str, rel_path: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel_path);
        io::atomic_write(&path, bytes)?;
        self.entries.push(ArtifactEntry {
            name: name.to_string(),
            path: rel_path.to_string(),
            sha256: io::sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }
}

/// Serialized form of a solver report: the iterate lives in a referenced
/// image/CSV artifact, numeric traces stay inline.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub method: String,
    pub alpha: f64,
    pub rho: Option<f64>,
    pub iterations: usize,
    pub termination: crate::solvers::Termination,
    pub iterate_ref: String,
    pub iterate_scaling: io::PgmScaling,
    pub objective: Vec<f64>,
    pub primal_residual: Vec<f64>,
    pub dual_residual: Vec<f64>,
    pub data_misfit: Vec<f64>,
    pub outer_data_misfit: Option<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

/// Executes the full pipeline and writes all artifacts under the config's
/// output directory. On a stage failure the artifacts written so far are
/// flagged in a partial manifest before the error propagates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    stage("config", config.validate())?;
    let setup = match config.coils.orientation {
        CoilOrientation::Aligned => "aligned".to_string(),
        CoilOrientation::Randomized => format!("randomized_seed{}", config.coils.seed),
    };
    let mut writer = ArtifactWriter::new(&config.output_dir);
    match run_stages(config, &setup, &mut writer) {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            // flag what was already written, then propagate
            let manifest = Manifest {
                schema_version: MANIFEST_SCHEMA_VERSION,
                partial: true,
                setup,
                config: config.clone(),
                ssim_table: None,
                evaluations: vec![],
                artifacts: writer.entries.clone(),
            };
            let bytes = manifest_bytes(&manifest);
            let _ = io::atomic_write(&config.output_dir.join("manifest.json"), &bytes);
            Err(e)
        }
    }
}

fn manifest_bytes(manifest: &Manifest) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    s.into_bytes()
}

fn run_stages(
    config: &ExperimentConfig,
    setup: &str,
    writer: &mut ArtifactWriter,
) -> Result<Manifest> {
    let phantom_name = config.phantom.kind.to_string();

    // layout
    let lay = stage("layout", layout(config))?;
    writer.write(
        "layout",
        "layout.json",
        serde_json::to_string_pretty(&lay)
            .expect("layout serializes")
            .as_bytes(),
    )?;

    // config echo
    writer.write("config", "config.json", config.to_canonical_json().as_bytes())?;

    // simulation on the fine grid
    let sim = stage("simulate", simulate_measurement(config))?;
    let truth_fine = &sim.truth_fine;
    let fine_grid = &truth_fine.grid;
    {
        let mut buf = Vec::new();
        let scaling = pgm_bytes(&mut buf, &truth_fine.values, fine_grid.nx(), fine_grid.ny())?;
        writer.write("truth_fine_image", "truth_fine.pgm", &buf)?;
        writer.write(
            "truth_fine_scaling",
            "truth_fine.pgm.json",
            scaling_json(&scaling).as_bytes(),
        )?;
    }
    let g = sim.measurement.data.clone();
    let g_clean = sim.measurement.clean.clone().expect("synthetic data keeps its clean reference");
    writer.write("measurement_csv", "g.csv", io::vector_to_csv(&g).as_bytes())?;
    writer.write("measurement_bin", "g.bin", &io::vector_to_bytes(&g))?;
    writer.write("measurement_clean_csv", "g_clean.csv", io::vector_to_csv(&g_clean).as_bytes())?;
    let sidecar = serde_json::json!({
        "snr_db": sim.measurement.snr_db,
        "seed": sim.measurement.seed,
        "channels": g.len(),
        "noise_norm": sim.measurement.noise_norm(),
    });
    writer.write(
        "measurement_sidecar",
        "g.json",
        format!("{}\n", serde_json::to_string_pretty(&sidecar).unwrap()).as_bytes(),
    )?;

    // coarse operator and truth
    let op = stage("assemble", assemble(config, GridSelector::Reconstruction))?;
    let coarse_grid = op.grid().clone();
    let spec = config.phantom.to_spec()?;
    let truth_coarse = stage("rasterize", rasterize(&spec, &coarse_grid))?;
    {
        let mut buf = Vec::new();
        let scaling = pgm_bytes(&mut buf, &truth_coarse.values, coarse_grid.nx(), coarse_grid.ny())?;
        writer.write("truth_image", "truth.pgm", &buf)?;
        writer.write("truth_scaling", "truth.pgm.json", scaling_json(&scaling).as_bytes())?;
    }

    // reconstructions and evaluation
    let noise_norm = sim.measurement.noise_norm();
    let mut runs = stage("reconstruct", reconstruct(config, &op, &g, noise_norm))?;
    let (evaluations, table) =
        write_run_outputs(writer, &mut runs, &truth_coarse, setup, &phantom_name)?;

    let mut manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        partial: false,
        setup: setup.to_string(),
        config: config.clone(),
        ssim_table: Some(table),
        evaluations,
        artifacts: writer.entries.clone(),
    };
    manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    io::atomic_write(
        &config.output_dir.join("manifest.json"),
        &manifest_bytes(&manifest),
    )?;
    Ok(manifest)
}

/// Writes the per-reconstruction artifacts (PGM, CSV, report JSON) plus the
/// evaluation list and score table; fills each run's best sweep index.
fn write_run_outputs(
    writer: &mut ArtifactWriter,
    runs: &mut [MethodRun],
    truth: &DensityField,
    setup: &str,
    phantom_name: &str,
) -> Result<(Vec<EvaluationResult>, SsimTable)> {
    let grid = &truth.grid;
    let mut evaluations: Vec<EvaluationResult> = Vec::new();
    let mut best_results: Vec<EvaluationResult> = Vec::new();
    for run in runs.iter_mut() {
        let mut best_idx = 0;
        let mut best_ssim = f64::NEG_INFINITY;
        let mut per_alpha = Vec::new();
        for (ai, report) in run.reports.iter().enumerate() {
            let result = stage(
                "evaluate",
                evaluate(
                    &report.iterate,
                    truth,
                    setup,
                    &run.label,
                    phantom_name,
                    report.final_misfit(),
                ),
            )?;
            if result.ssim > best_ssim {
                best_ssim = result.ssim;
                best_idx = ai;
            }
            per_alpha.push(result);
        }
        run.best = best_idx;

        for (ai, (report, result)) in run.reports.iter().zip(&per_alpha).enumerate() {
            let stem = format!("recon_{}_a{ai:02}", run.label);
            let mut buf = Vec::new();
            let scaling = pgm_bytes(&mut buf, &report.iterate, grid.nx(), grid.ny())?;
            writer.write(&format!("{stem}_image"), &format!("{stem}.pgm"), &buf)?;
            writer.write(
                &format!("{stem}_csv"),
                &format!("{stem}.csv"),
                grid_csv_bytes(&report.iterate, grid.nx()).as_bytes(),
            )?;
            let artifact = ReportArtifact {
                method: report.method.clone(),
                alpha: report.alpha,
                rho: report.rho,
                iterations: report.iterations,
                termination: report.termination,
                iterate_ref: format!("{stem}.pgm"),
                iterate_scaling: scaling,
                objective: report.objective.clone(),
                primal_residual: report.primal_residual.clone(),
                dual_residual: report.dual_residual.clone(),
                data_misfit: report.data_misfit.clone(),
                outer_data_misfit: report.outer_data_misfit.clone(),
            };
            writer.write(
                &format!("{stem}_report"),
                &format!("{stem}.report.json"),
                format!("{}\n", serde_json::to_string_pretty(&artifact).unwrap()).as_bytes(),
            )?;
            evaluations.push(result.clone());
        }
        best_results.push(per_alpha[best_idx].clone());
    }

    let table = SsimTable::from_results(setup, &best_results);
    writer.write("ssim_table_csv", "ssim_table.csv", table.to_csv().as_bytes())?;
    writer.write(
        "ssim_table_json",
        "ssim_table.json",
        format!("{}\n", serde_json::to_string_pretty(&table).unwrap()).as_bytes(),
    )?;
    writer.write(
        "evaluations",
        "evaluations.json",
        format!("{}\n", serde_json::to_string_pretty(&evaluations).unwrap()).as_bytes(),
    )?;
    Ok((evaluations, table))
}

/// Reconstructs from an existing measurement vector and writes the
/// reconstruction artifacts and score table into the output directory
/// (no simulation artifacts, no manifest).
pub fn reconstruct_to_dir(
    config: &ExperimentConfig,
    g: &[f64],
    noise_norm: Option<f64>,
) -> Result<SsimTable> {
    config.validate()?;
    let setup = match config.coils.orientation {
        CoilOrientation::Aligned => "aligned".to_string(),
        CoilOrientation::Randomized => format!("randomized_seed{}", config.coils.seed),
    };
    let op = stage("assemble", assemble(config, GridSelector::Reconstruction))?;
    let spec = config.phantom.to_spec()?;
    let truth = stage("rasterize", rasterize(&spec, op.grid()))?;
    let mut runs = stage("reconstruct", reconstruct(config, &op, g, noise_norm))?;
    let mut writer = ArtifactWriter::new(&config.output_dir);
    let (_, table) = write_run_outputs(
        &mut writer,
        &mut runs,
        &truth,
        &setup,
        &config.phantom.kind.to_string(),
    )?;
    Ok(table)
}

/// Re-scores the reconstructions already present in the output directory
/// against the configured phantom, refreshing the score table. Data misfits
/// are recomputed when `g.csv` is present.
pub fn evaluate_output_dir(config: &ExperimentConfig) -> Result<SsimTable> {
    config.validate()?;
    let setup = match config.coils.orientation {
        CoilOrientation::Aligned => "aligned".to_string(),
        CoilOrientation::Randomized => format!("randomized_seed{}", config.coils.seed),
    };
    let dir = &config.output_dir;
    let coarse_grid = grid_for(config, GridSelector::Reconstruction)?;
    let spec = config.phantom.to_spec()?;
    let truth = rasterize(&spec, &coarse_grid)?;
    let phantom_name = config.phantom.kind.to_string();

    let g = io::read_csv_vector(&dir.join("g.csv")).ok();
    let op = match g {
        Some(_) => Some(assemble(config, GridSelector::Reconstruction)?),
        None => None,
    };

    // gather recon_*.csv artifacts in deterministic order
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("recon_") && n.ends_with(".csv"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Config(format!(
            "no reconstructions found in {}",
            dir.display()
        )));
    }

    let mut best_per_method: Vec<EvaluationResult> = Vec::new();
    for name in &names {
        let (values, nx, ny) = io::read_csv_grid(&dir.join(name))?;
        if (nx, ny) != (coarse_grid.nx(), coarse_grid.ny()) {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {nx}x{ny}, config expects {}x{}",
                coarse_grid.nx(),
                coarse_grid.ny()
            )));
        }
        // method label sits between "recon_" and the final "_aNN"
        let stem = name.trim_end_matches(".csv");
        let label = stem
            .strip_prefix("recon_")
            .and_then(|s| s.rsplit_once("_a"))
            .map(|(m, _)| m.to_string())
            .unwrap_or_else(|| stem.to_string());
        let misfit = match (&g, &op) {
            (Some(g), Some(op)) => {
                let kc = op.apply(&values)?;
                kc.iter()
                    .zip(g)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            }
            _ => f64::NAN,
        };
        let result = evaluate(&values, &truth, &setup, &label, &phantom_name, misfit)?;
        match best_per_method.iter_mut().find(|r| r.method == label) {
            Some(existing) if result.ssim > existing.ssim => *existing = result,
            Some(_) => {}
            None => best_per_method.push(result),
        }
    }
    let table = SsimTable::from_results(&setup, &best_per_method);
    io::atomic_write(&dir.join("ssim_table.csv"), table.to_csv().as_bytes())?;
    io::atomic_write(
        &dir.join("ssim_table.json"),
        format!("{}\n", serde_json::to_string_pretty(&table).unwrap()).as_bytes(),
    )?;
    Ok(table)
}

fn pgm_bytes(buf: &mut Vec<u8>, values: &[f64], nx: usize, ny: usize) -> Result<io::PgmScaling> {
    let (bytes, scaling) = io::pgm_to_bytes(values, nx, ny, 65535)?;
    *buf = bytes;
    Ok(scaling)
}

fn scaling_json(scaling: &io::PgmScaling) -> String {
    format!("{}\n", serde_json::to_string_pretty(scaling).unwrap())
}

fn grid_csv_bytes(values: &[f64], nx: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(nx) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            s.push_str(&format!("{v}"));
            first = false;
        }
        s.push('\n');
    }
    s
}

/// Re-renders the score table of an existing run from its manifest.
pub fn render_report(manifest_path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: manifest_path.display().to_string(),
            reason: e.to_string(),
        })?;
    let mut out = String::new();
    out.push_str(&format!(
        "setup: {} (partial: {})\n",
        manifest.setup, manifest.partial
    ));
    if let Some(table) = &manifest.ssim_table {
        out.push_str(&table.to_csv());
    }
    for e in &manifest.evaluations {
        out.push_str(&format!(
            "{} {} {}: ssim {:.4}, rel_l2 {:.4}, misfit {:.6e}\n",
            e.setup, e.method, e.phantom, e.ssim, e.rel_l2, e.data_misfit
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CoilOrientation;
    use crate::phantoms::PhantomKind;

    fn tiny_config(dir: &str) -> ExperimentConfig {
        let mut c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        c.coils.per_side = 2;
        c.sensors.per_side = 3;
        c.grids.simulation = (31, 31);
        c.grids.reconstruction = (15, 15);
        c.methods = vec![
            MethodConfig::Tikhonov {
                alphas: vec![1e-8, 1e-7],
                positivity: true,
                rho: 1e-6,
                max_iterations: 60,
                tolerance: 1e-6,
            },
            MethodConfig::Tv {
                alphas: vec![1e-9, 1e-8],
                rho: 1e-6,
                max_iterations: 60,
                tolerance: 1e-6,
                flavor: crate::solvers::TvFlavor::Anisotropic,
            },
        ];
        c.output_dir = std::env::temp_dir().join(format!("mrxi-pipe-{dir}-{}", std::process::id()));
        c
    }

    #[test]
    fn layout_produces_reference_counts_and_orientations() {
        let c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        let lay = layout(&c).unwrap();
        assert_eq!(lay.activations.len(), 28);
        assert_eq!(lay.sensors.len(), 76);
        // aligned moments point exactly inward: dot with the outward side
        // normal is -1 after normalization
        let outward = [
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
        ];
        for (i, act) in lay.activations.iter().enumerate() {
            let side = i / 7;
            if let Activation::Dipole(d) = act {
                let m = d.moment.normalized().unwrap();
                assert!((m.dot(outward[side]) + 1.0).abs() < 1e-15, "coil {i}");
            }
        }
        for s in &lay.sensors {
            assert!((s.orientation.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_layout_is_seed_deterministic() {
        let mut c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Randomized);
        c.coils.seed = 5;
        let a = layout(&c).unwrap();
        let b = layout(&c).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        c.coils.seed = 6;
        let other = layout(&c).unwrap();
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&other).unwrap()
        );
        // positions agree with the aligned layout, orientations differ
        let mut aligned_cfg = c.clone();
        aligned_cfg.coils.orientation = CoilOrientation::Aligned;
        let aligned = layout(&aligned_cfg).unwrap();
        for (r, a) in other.activations.iter().zip(&aligned.activations) {
            if let (Activation::Dipole(dr), Activation::Dipole(da)) = (r, a) {
                assert_eq!(dr.position, da.position);
            }
        }
    }

    #[test]
    fn invalid_counts_are_rejected() {
        let mut c = ExperimentConfig::reference(PhantomKind::PShape, CoilOrientation::Aligned);
        c.coils.per_side = 0;
        assert!(layout(&c).is_err());
    }

    #[test]
    fn run_experiment_writes_manifest_and_artifacts() {
        let c = tiny_config("run");
        let manifest = run_experiment(&c).unwrap();
        assert!(!manifest.partial);
        let table = manifest.ssim_table.as_ref().unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.phantoms, vec!["p_shape"]);
        // every artifact exists with the recorded hash
        for a in &manifest.artifacts {
            let bytes = std::fs::read(c.output_dir.join(&a.path)).unwrap();
            assert_eq!(io::sha256_hex(&bytes), a.sha256, "artifact {}", a.path);
            assert_eq!(bytes.len() as u64, a.bytes);
        }
        // reports reference existing pgm files
        let report_text =
            std::fs::read_to_string(c.output_dir.join("recon_tv_pos_a00.report.json")).unwrap();
        let report: ReportArtifact = serde_json::from_str(&report_text).unwrap();
        assert!(c.output_dir.join(&report.iterate_ref).exists());
        std::fs::remove_dir_all(&c.output_dir).ok();
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        // identical config run twice: manifest and every artifact must
        // reproduce byte for byte
        let c = tiny_config("det");
        run_experiment(&c).unwrap();
        let manifest_first = std::fs::read(c.output_dir.join("manifest.json")).unwrap();
        let m1: Manifest = serde_json::from_slice(&manifest_first).unwrap();
        let artifacts_first: Vec<(String, Vec<u8>)> = m1
            .artifacts
            .iter()
            .map(|a| (a.path.clone(), std::fs::read(c.output_dir.join(&a.path)).unwrap()))
            .collect();

        run_experiment(&c).unwrap();
        let manifest_second = std::fs::read(c.output_dir.join("manifest.json")).unwrap();
        assert_eq!(manifest_first, manifest_second);
        for (path, bytes) in &artifacts_first {
            let again = std::fs::read(c.output_dir.join(path)).unwrap();
            assert_eq!(bytes, &again, "artifact {path} changed between runs");
        }
        std::fs::remove_dir_all(&c.output_dir).ok();
    }

    #[test]
    fn report_rendering_round_trips() {
        let c = tiny_config("report");
        run_experiment(&c).unwrap();
        let rendered = render_report(&c.output_dir.join("manifest.json")).unwrap();
        assert!(rendered.contains("method,p_shape"));
        assert!(rendered.contains("tv_pos"));
        std::fs::remove_dir_all(&c.output_dir).ok();
    }
}
