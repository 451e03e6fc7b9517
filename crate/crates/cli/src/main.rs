#![allow(clippy::neg_cmp_op_on_partial_ord)]
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use block_potts::ModelFile;
use clap::{Args, Parser, Subcommand, ValueEnum};
use potts_lab::{Experiment, ExperimentConfig, LabError, LabResult, Overrides};

#[derive(Parser)]
#[command(name = "potts-lab", version, about = "Experiments on block spin Potts models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model file utilities.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Heat-bath chains; writes the magnetization of every kept sweep.
    Sample(RunArgs),
    /// Exact law of the color counts.
    Exact(RunArgs),
    /// Reduced landscape on a grid, its minima and fixed points.
    Landscape(RunArgs),
    /// Fixed-point iteration from a grid of starts.
    Fixedpoint(RunArgs),
    /// Covariance of the rotated magnetization against its Gaussian limit.
    Covariance {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        mode: Option<CovarianceMode>,
    },
    /// Primal and dual suprema over refining grids.
    Duality(RunArgs),
    /// Smoothed density against the exact convolution.
    HsOracle(RunArgs),
    /// Moderate-deviation form matrices.
    Mdp(RunArgs),
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Check a model (or experiment config) and print its derived scalars.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum CovarianceMode {
    Mc,
    Exact,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML) or a manifest.json from an earlier run.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory; defaults to the config's `output_dir`, then
    /// `$POTTS_LAB_OUTPUT_DIR/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis (landscape, hs-oracle, duality primal grid).
    #[arg(long)]
    grid: Option<usize>,
    /// Scaling exponent (hs-oracle, mdp).
    #[arg(long)]
    theta: Option<f64>,
}

impl RunArgs {
    fn load(&self) -> LabResult<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        config.apply(&Overrides {
            seed: self.seed,
            out: self.out.clone(),
            grid: self.grid,
            theta: self.theta,
        });
        Ok(config)
    }
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn validate_model(path: &Path) -> LabResult<()> {
    let model = match ExperimentConfig::load(path) {
        Ok(config) => config.build_model()?,
        Err(LabError::Config(_)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
            ModelFile::from_toml_str(&text)?.build()?
        }
        Err(e) => return Err(e),
    };
    let derived = potts_lab::DerivedScalars::compute(&model)?;
    emit(&serde_json::to_string_pretty(&derived)?);
    Ok(())
}

fn run(args: &RunArgs, experiment: Experiment) -> LabResult<()> {
    let config = args.load()?;
    let manifest = potts_lab::run(experiment, &config)?;
    emit(&serde_json::to_string_pretty(&manifest.results)?);
    let dir = manifest.config.output_dir.unwrap_or_default();
    eprintln!("{} files written to {}", manifest.outputs.len() + 1, dir.display());
    Ok(())
}

fn dispatch(cli: Cli) -> LabResult<()> {
    match cli.command {
        Command::Model {
            command: ModelCommand::Validate { config },
        } => validate_model(&config),
        Command::Sample(a) => run(&a, Experiment::Sample),
        Command::Exact(a) => run(&a, Experiment::Exact),
        Command::Landscape(a) => run(&a, Experiment::LandscapeScan),
        Command::Fixedpoint(a) => run(&a, Experiment::FixedPoint),
        Command::Covariance { run: a, mode } => {
            let experiment = match mode {
                Some(CovarianceMode::Mc) => Experiment::CovarianceMc,
                Some(CovarianceMode::Exact) => Experiment::CovarianceExact,
                None => match a.load()?.experiment {
                    Some(Experiment::CovarianceExact) => Experiment::CovarianceExact,
                    _ => Experiment::CovarianceMc,
                },
            };
            run(&a, experiment)
        }
        Command::Duality(a) => run(&a, Experiment::DualityGap),
        Command::HsOracle(a) => run(&a, Experiment::HsOracle),
        Command::Mdp(a) => run(&a, Experiment::MdpTable),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
