use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use snb::commands::{self, parse_layout, parse_scheme, Method};

const SCHEMES: [&str; 4] = ["full", "x5", "x9", "x11"];
const LAYOUTS: [&str; 2] = ["elements-d2", "angles-d2"];

#[derive(Parser)]
#[command(
    name = "snb",
    version,
    about = "Sub-Nyquist ultrasound beamforming: simulation, Fourier-domain beamforming and a learned beamformer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one frame of channel data from the configured phantom.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Precompute distortion-coefficient tables for a sampling scheme.
    Qcoef {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = SCHEMES, default_value = "full")]
        scheme: String,
        #[arg(long)]
        energy_fraction: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Beamform a frame and render its B-mode image.
    Beamform {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long, value_parser = ["das", "mv", "fd-das"])]
        method: String,
        #[arg(long, value_parser = SCHEMES, default_value = "full")]
        scheme: String,
        #[arg(long)]
        tables: Option<PathBuf>,
        /// Print the NRMSE of the result against time-domain DAS.
        #[arg(long)]
        check: bool,
        /// Also write the scan-converted raster.
        #[arg(long)]
        raster: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build degraded network inputs and MV targets from frames.
    MakeDataset {
        #[arg(long = "frame", required = true)]
        frames: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = SCHEMES)]
        scheme: String,
        #[arg(long, value_parser = LAYOUTS, default_value = "elements-d2")]
        layout: String,
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the network on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Continue the checkpoint already in --out.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Beamform a frame with a trained network.
    Predict {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long)]
        raster: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score DAS, MV and trained networks on a frame.
    Evaluate {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        #[arg(long = "tables")]
        tables: Vec<PathBuf>,
        #[arg(long = "dataset")]
        datasets: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            commands::simulate(&commands::SimulateArgs { config, seed, out })?;
        }
        Command::Qcoef {
            config,
            scheme,
            energy_fraction,
            out,
        } => {
            let scheme = parse_scheme(&scheme)?;
            commands::qcoef(&commands::QcoefArgs {
                config,
                scheme,
                energy_fraction,
                out,
            })?;
        }
        Command::Beamform {
            frame,
            method,
            scheme,
            tables,
            check,
            raster,
            out,
        } => {
            let method: Method = method.parse()?;
            let scheme = parse_scheme(&scheme)?;
            commands::beamform(&commands::BeamformArgs {
                frame,
                method,
                scheme,
                tables,
                check,
                raster,
                out,
            })?;
        }
        Command::MakeDataset {
            frames,
            config,
            scheme,
            layout,
            tables,
            out,
        } => {
            let (scheme, layout) = (parse_scheme(&scheme)?, parse_layout(&layout)?);
            commands::make_dataset(&commands::MakeDatasetArgs {
                frames,
                config,
                scheme,
                layout,
                tables,
                out,
            })?;
        }
        Command::Train {
            dataset,
            epochs,
            lr,
            seed,
            resume,
            out,
        } => {
            commands::train(&commands::TrainArgs {
                dataset,
                epochs,
                lr,
                seed,
                resume,
                out,
            })?;
        }
        Command::Predict {
            frame,
            checkpoint,
            tables,
            raster,
            out,
        } => {
            commands::predict(&commands::PredictArgs {
                frame,
                checkpoint,
                tables,
                raster,
                out,
            })?;
        }
        Command::Evaluate {
            frame,
            checkpoints,
            tables,
            datasets,
            out,
        } => {
            commands::evaluate(&commands::EvaluateArgs {
                frame,
                checkpoints,
                tables,
                datasets,
                out,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let setup = snb::threads_from_env(std::env::var("SNB_THREADS").ok().as_deref()).and_then(|n| {
        if let Some(n) = n {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        Ok(())
    });
    match setup.and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
