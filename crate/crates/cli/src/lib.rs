//! Experiment runner for block spin Potts models: reads a config, runs one
//! experiment, and leaves CSV files plus a `manifest.json` in a run directory.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod manifest;

use std::path::PathBuf;

use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, Overrides};
pub use error::{LabError, LabResult};
pub use manifest::{DerivedScalars, RunManifest, RunWriter};

use experiments::{covariance, duality, hs, landscape, mdp, sampling};

/// Default parent of run directories when neither the config nor `--out` names one.
pub const OUTPUT_DIR_ENV: &str = "POTTS_LAB_OUTPUT_DIR";

pub fn output_dir(config: &ExperimentConfig, experiment: Experiment) -> PathBuf {
    if let Some(dir) = &config.output_dir {
        return dir.clone();
    }
    let base = std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("potts-lab-runs"));
    base.join(experiment.name())
}

fn json<T: Serialize>(report: &T) -> LabResult<serde_json::Value> {
    Ok(serde_json::to_value(report)?)
}

/// Validates, runs and writes one experiment. The returned manifest has
/// already been written next to the outputs.
pub fn run(experiment: Experiment, config: &ExperimentConfig) -> LabResult<RunManifest> {
    let started = manifest::unix_ms();
    let model = config.build_model()?;
    config.validate(experiment, &model)?;
    let derived = DerivedScalars::compute(&model)?;

    let mut config = config.clone();
    config.experiment = Some(experiment);
    let dir = output_dir(&config, experiment);
    config.output_dir = Some(dir.clone());
    let mut writer = RunWriter::create(&dir)?;
    log::info!("{experiment}: writing to {}", dir.display());

    let results = match experiment {
        Experiment::CovarianceMc => json(&covariance::run_mc(&config, &model, &mut writer)?)?,
        Experiment::CovarianceExact => json(&covariance::run_exact(&config, &model, &mut writer)?)?,
        Experiment::LandscapeScan => json(&landscape::run_scan(&config, &model, &mut writer)?)?,
        Experiment::FixedPoint => json(&landscape::run_fixed_point(&config, &model, &mut writer)?)?,
        Experiment::DualityGap => json(&duality::run(&config, &model, &mut writer)?)?,
        Experiment::HsOracle => json(&hs::run(&config, &model, &mut writer)?)?,
        Experiment::MdpTable => json(&mdp::run(&config, &model, &mut writer)?)?,
        Experiment::Sample => json(&sampling::run_sample(&config, &model, &mut writer)?)?,
        Experiment::Exact => json(&sampling::run_exact(&model, &mut writer)?)?,
    };
    writer.write_json("summary.json", &results)?;

    writer.finish(RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment,
        config,
        started_unix_ms: started,
        finished_unix_ms: manifest::unix_ms(),
        derived,
        results,
        outputs: Vec::new(),
    })
}
