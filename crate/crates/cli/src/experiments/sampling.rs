//! Raw chain output and exact laws.

use block_potts::sampling::export::{write_exact, write_samples};
use block_potts::sampling::{exact_count_distribution, run_chains};
use block_potts::Model;
use serde::Serialize;

use super::{pooled_moments, write_matrix};
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::manifest::RunWriter;

#[derive(Debug, Clone, Serialize)]
pub struct SampleReport {
    pub chains: usize,
    pub samples_per_chain: usize,
    pub mean: Vec<f64>,
    pub mean_standard_errors: Vec<f64>,
    pub batches: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactReport {
    pub states: usize,
    pub log_z: f64,
    pub mean: Vec<f64>,
}

pub fn run_sample(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<SampleReport> {
    let chain = config.chain_config()?;
    let section = config.chain.as_ref().expect("validated");
    let runs = run_chains(model, &chain, section.chains)?;
    let flat: Vec<_> = runs.iter().flatten().cloned().collect();
    writer.write("samples.csv", |w| write_samples(w, model.s(), model.q(), &flat))?;

    let ms: Vec<Vec<_>> = runs.iter().map(|r| r.iter().map(|s| s.m.clone()).collect()).collect();
    let estimate = pooled_moments(&ms, section.batches)?;
    writer.write("covariance.csv", |w| write_matrix(w, "m", &estimate.covariance))?;
    Ok(SampleReport {
        chains: runs.len(),
        samples_per_chain: runs.first().map(Vec::len).unwrap_or(0),
        mean: estimate.mean.iter().copied().collect(),
        mean_standard_errors: estimate.mean_standard_errors.iter().copied().collect(),
        batches: estimate.effective_samples,
    })
}

pub fn run_exact(model: &Model, writer: &mut RunWriter) -> LabResult<ExactReport> {
    let dist = exact_count_distribution(model)?;
    writer.write("exact.csv", |w| write_exact(w, &dist))?;
    let moments = dist.moments(model);
    writer.write("covariance.csv", |w| write_matrix(w, "m", &moments.covariance))?;
    Ok(ExactReport {
        states: dist.len(),
        log_z: dist.log_z,
        mean: moments.mean.iter().copied().collect(),
    })
}
