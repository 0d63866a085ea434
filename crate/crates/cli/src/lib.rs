//! Command-line harness: mask design, baseline generation, measurement
//! simulation, reconstruction, evaluation, and the parameter sweeps.
//!
//! Exit status: 0 on success, 1 on validation or I/O errors, 2 on
//! numerical failures (divergence, degenerate data).

pub mod config;
pub mod manifest;
pub mod tasks;

pub mod commands {
    pub mod compare;
    pub mod design;
    pub mod evaluate;
    pub mod gen_baseline;
    pub mod reconstruct;
    pub mod simulate;
    pub mod sweep_cutoffs;
    pub mod sweep_measurements;
    pub mod sweep_quant;
}

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{Overrides, RunSettings};
use maskforge_core::optics_sim::Fidelity;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "maskforge", version, about = "Phase-mask design and CDP phase retrieval benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Configuration file (key=value sections); flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Measurement fidelity override: dft or optical.
    #[arg(long, global = true, value_parser = parse_fidelity)]
    pub fidelity: Option<Fidelity>,

    /// Rayon thread count (0 = default).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

fn parse_fidelity(s: &str) -> Result<Fidelity, String> {
    match s {
        "dft" | "discrete" => Ok(Fidelity::DiscreteDft),
        "optical" | "emulation" => Ok(Fidelity::OpticalEmulation),
        other => Err(format!("unknown fidelity {other:?} (use dft or optical)")),
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Design OptMask sets and write OMSK files plus the config sidecar.
    Design {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a baseline mask set (white4, white16, or green).
    GenBaseline {
        #[command(flatten)]
        common: CommonArgs,
        /// Scheme to generate: white4, white16, green.
        #[arg(long)]
        scheme: String,
    },
    /// Simulate CDP intensity measurements of an object through mask files.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory of OMSK files (or a single file).
        #[arg(long)]
        masks: PathBuf,
        /// Builtin image name or a PGM path.
        #[arg(long)]
        image: String,
    },
    /// Reconstruct an object from OMSI measurements and OMSK masks.
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        masks: PathBuf,
    },
    /// Score an estimate against ground truth and emit the metrics CSV.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Stem of the estimate raw pair (as written by reconstruct).
        #[arg(long)]
        estimate: PathBuf,
        /// Builtin image name or a PGM path for the ground truth.
        #[arg(long)]
        truth: String,
        /// OMSK directory for entropy columns.
        #[arg(long)]
        masks: Option<PathBuf>,
        /// OMSI directory for eta / truncation columns.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Scheme label for the CSV rows.
        #[arg(long, default_value = "unspecified")]
        scheme: String,
        /// Trial number for the CSV rows.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Quantization-level sweep: eta and axis power spectra per M.
    SweepQuant {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Passband sweep: mean measurement eta and mask entropy per cutoff pair.
    SweepCutoffs {
        #[command(flatten)]
        common: CommonArgs,
        /// Also reconstruct through each mask set and record PSNR/SSIM.
        #[arg(long)]
        reconstruct: bool,
    },
    /// Reconstruction quality versus number of measurements (k = 1..=L).
    SweepMeasurements {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Full scheme comparison: design, simulate, reconstruct, score.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

pub fn settings_for(common: &CommonArgs) -> Result<RunSettings> {
    let over = Overrides {
        seed: common.seed,
        out: common.out.clone(),
        fidelity: common.fidelity,
        threads: common.threads,
    };
    let settings = config::load_settings(common.config.as_deref(), &over)?;
    if settings.threads > 0 {
        // Ignore the error if a global pool already exists (tests, reruns).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build_global();
    }
    std::fs::create_dir_all(&settings.out_dir)?;
    Ok(settings)
}

/// Run a parsed command. Returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome: Result<()> = match &cli.command {
        Command::Design { common } => settings_for(common).and_then(commands::design::run),
        Command::GenBaseline { common, scheme } => {
            settings_for(common).and_then(|s| commands::gen_baseline::run(s, scheme))
        }
        Command::Simulate {
            common,
            masks,
            image,
        } => settings_for(common).and_then(|s| commands::simulate::run(s, masks, image)),
        Command::Reconstruct {
            common,
            measurements,
            masks,
        } => settings_for(common).and_then(|s| commands::reconstruct::run(s, measurements, masks)),
        Command::Evaluate {
            common,
            estimate,
            truth,
            masks,
            measurements,
            scheme,
            trial,
        } => settings_for(common).and_then(|s| {
            commands::evaluate::run(
                s,
                estimate,
                truth,
                masks.as_deref(),
                measurements.as_deref(),
                scheme,
                *trial,
            )
        }),
        Command::SweepQuant { common } => {
            settings_for(common).and_then(commands::sweep_quant::run)
        }
        Command::SweepCutoffs {
            common,
            reconstruct,
        } => settings_for(common).and_then(|s| commands::sweep_cutoffs::run(s, *reconstruct)),
        Command::SweepMeasurements { common } => {
            settings_for(common).and_then(commands::sweep_measurements::run)
        }
        Command::Compare { common } => settings_for(common).and_then(commands::compare::run),
    };

    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .downcast_ref::<maskforge_core::Error>()
                .map(|e| e.is_numerical())
                .unwrap_or(false);
            if numerical {
                2
            } else {
                1
            }
        }
    }
}
