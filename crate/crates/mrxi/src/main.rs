//! Command-line pipeline driver; every subcommand is a thin wrapper around
//! the library stages in `mrxi::pipeline`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mrxi::config::ExperimentConfig;
use mrxi::error::{Error, Result};
use mrxi::io;
use mrxi::pipeline::{self, GridSelector};

#[derive(Parser)]
#[command(
    name = "mrxi",
    about = "Magnetorelaxometry imaging: simulation and variational reconstruction",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the config's noise SNR in dB (use `inf` to disable noise).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Overrides the config's phantom kind.
    #[arg(long)]
    phantom: Option<String>,
    /// Permits reconstructing on the simulation grid.
    #[arg(long)]
    allow_inverse_crime: bool,
}

impl ConfigArgs {
    /// Loads the config file and applies flag overrides (flags win).
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::from_json_file(&self.config)?;
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(snr) = self.snr_db {
            config.noise.snr_db = if snr.is_infinite() { None } else { Some(snr) };
        }
        if let Some(kind) = &self.phantom {
            config.phantom.kind = kind.parse()?;
        }
        if self.allow_inverse_crime {
            config.allow_inverse_crime = true;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the coil/sensor layout and write it as JSON.
    Layout {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path for the layout JSON.
        #[arg(short, long, default_value = "layout.json")]
        out: PathBuf,
    },
    /// Assemble the forward operator and write the binary container.
    Assemble {
        #[command(flatten)]
        config: ConfigArgs,
        /// Which configured grid to assemble on.
        #[arg(long, default_value = "reconstruction")]
        grid: String,
        /// Output path for the operator container.
        #[arg(short, long, default_value = "operator.bin")]
        out: PathBuf,
        /// Also print the leading N singular values (ill-posedness
        /// diagnostic).
        #[arg(long)]
        singular_values: Option<usize>,
    },
    /// Simulate the measurement on the fine grid and add noise.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path for the measurement (CSV; a .bin and .json sidecar
        /// are written next to it).
        #[arg(short, long, default_value = "g.csv")]
        out: PathBuf,
    },
    /// Reconstruct from a measurement vector with every configured method.
    Reconstruct {
        #[command(flatten)]
        config: ConfigArgs,
        /// Measurement vector (CSV or binary container).
        #[arg(short = 'g', long)]
        measurement: PathBuf,
    },
    /// Score reconstructions in an output directory against the phantom.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full pipeline: layout, assembly, simulation, noise,
    /// reconstruction, evaluation, artifact export.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-render the score tables of an existing run from its manifest.
    Report {
        /// Path to a manifest.json written by `run`.
        #[arg(short, long)]
        manifest: PathBuf,
    },
}

fn init_threads() {
    // MRXI_THREADS is the only environment control
    if let Ok(v) = std::env::var("MRXI_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Layout { config, out } => {
            let cfg = config.load()?;
            let lay = pipeline::layout(&cfg)?;
            let json = serde_json::to_string_pretty(&lay).expect("layout serializes");
            io::atomic_write(&out, format!("{json}\n").as_bytes())?;
            println!(
                "layout: {} activations, {} sensors -> {}",
                lay.activations.len(),
                lay.sensors.len(),
                out.display()
            );
            Ok(())
        }
        Command::Assemble { config, grid, out, singular_values } => {
            let cfg = config.load()?;
            let which = match grid.as_str() {
                "simulation" => GridSelector::Simulation,
                "reconstruction" => GridSelector::Reconstruction,
                other => {
                    return Err(Error::Config(format!(
                        "grid must be 'simulation' or 'reconstruction', got {other}"
                    )))
                }
            };
            let op = pipeline::assemble(&cfg, which)?;
            io::write_operator(&out, &op)?;
            println!(
                "operator: {} x {} ({} activations x {} sensors) -> {}",
                op.rows(),
                op.cols(),
                op.num_activations(),
                op.num_sensors(),
                out.display()
            );
            if let Some(count) = singular_values {
                let sv = mrxi::forward::singular_values(&op, count)?;
                for (i, s) in sv.iter().enumerate() {
                    println!("sigma[{i}] = {s:.6e} (ratio {:.3e})", s / sv[0]);
                }
            }
            Ok(())
        }
        Command::Simulate { config, out } => {
            let cfg = config.load()?;
            let sim = pipeline::simulate_measurement(&cfg)?;
            io::write_csv_vector(&out, &sim.measurement.data)?;
            io::write_vector_binary(&out.with_extension("bin"), &sim.measurement.data)?;
            let sidecar = serde_json::json!({
                "snr_db": sim.measurement.snr_db,
                "seed": sim.measurement.seed,
                "channels": sim.measurement.data.len(),
                "noise_norm": sim.measurement.noise_norm(),
            });
            io::atomic_write(
                &out.with_extension("json"),
                format!("{}\n", serde_json::to_string_pretty(&sidecar).unwrap()).as_bytes(),
            )?;
            println!(
                "measurement: {} channels -> {}",
                sim.measurement.data.len(),
                out.display()
            );
            Ok(())
        }
        Command::Reconstruct { config, measurement } => {
            let cfg = config.load()?;
            let g = io::read_vector_auto(&measurement)?;
            let table = pipeline::reconstruct_to_dir(&cfg, &g, None)?;
            print!("{}", table.to_csv());
            println!("artifacts: {}", cfg.output_dir.display());
            Ok(())
        }
        Command::Evaluate { config } => {
            let cfg = config.load()?;
            let table = pipeline::evaluate_output_dir(&cfg)?;
            print!("{}", table.to_csv());
            Ok(())
        }
        Command::Run { config } => {
            let cfg = config.load()?;
            let manifest = pipeline::run_experiment(&cfg)?;
            if let Some(table) = &manifest.ssim_table {
                print!("{}", table.to_csv());
            }
            println!("manifest: {}", cfg.output_dir.join("manifest.json").display());
            Ok(())
        }
        Command::Report { manifest } => {
            print!("{}", pipeline::render_report(&manifest)?);
            Ok(())
        }
    }
}
