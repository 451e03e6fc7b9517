//! Empirical and exact finite-N covariances of the rotated magnetization
//! against the Gaussian limit.

use std::io::Write;

use block_potts::csv::fmt_f64;
use block_potts::limit::{clt_threshold, rotated_covariance, rotated_magnetization, rotation_operator};
use block_potts::sampling::{exact_count_moments, run_chains, MomentEstimate};
use block_potts::{critical_thresholds, MagnetizationVector, Model, ModelSpec, Regime};
use nalgebra::DMatrix;
use serde::Serialize;

use super::{pooled_moments, write_matrix};
use crate::config::{ladder_block_sizes, ExperimentConfig};
use crate::error::LabResult;
use crate::manifest::RunWriter;

#[derive(Debug, Clone, Serialize)]
pub struct McCovarianceReport {
    pub regime: Regime,
    pub norm: f64,
    /// Norm below the CLT threshold. Outside it nothing is asserted.
    pub in_regime: bool,
    pub samples: usize,
    pub batch_size: usize,
    pub batches: f64,
    /// `None` when `qI − √Γ A √Γ` is not positive definite.
    pub frobenius_error: Option<f64>,
    pub relative_error: Option<f64>,
    /// Largest `|empirical − limit| / SE` over the entries.
    pub max_z_score: Option<f64>,
    #[serde(skip)]
    pub limit: Option<DMatrix<f64>>,
    #[serde(skip)]
    pub estimate: MomentEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub frobenius_error: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactLadderReport {
    pub regime: Regime,
    pub norm: f64,
    pub in_regime: bool,
    pub rows: Vec<LadderRow>,
    /// Frobenius errors strictly decrease along the ladder.
    pub monotone: bool,
    pub final_relative_error: f64,
    #[serde(skip)]
    pub limit: DMatrix<f64>,
    #[serde(skip)]
    pub covariances: Vec<DMatrix<f64>>,
}

fn regime_of(model: &Model) -> LabResult<(Regime, f64, bool)> {
    let t = critical_thresholds(model)?;
    let threshold = clt_threshold(model)?;
    let in_regime = t.norm < threshold;
    if !in_regime {
        log::warn!(
            "norm {} is not below {threshold} ({}); running anyway and reporting the mismatch",
            t.norm,
            t.regime
        );
    }
    Ok((t.regime, t.norm, in_regime))
}

fn limit_or_warn(model: &Model) -> Option<DMatrix<f64>> {
    match rotated_covariance(model) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("no limiting covariance: {e}");
            None
        }
    }
}

pub fn run_mc(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<McCovarianceReport> {
    let (regime, norm, in_regime) = regime_of(model)?;
    let chain = config.chain_config()?;
    let section = config.chain.as_ref().expect("validated");
    let runs = run_chains(model, &chain, section.chains)?;
    let d = model.s() * (model.q() - 1);
    let rotated: Vec<Vec<MagnetizationVector>> = runs
        .iter()
        .map(|run| {
            run.iter()
                .map(|sample| {
                    let v = rotated_magnetization(model, &sample.m)?;
                    Ok(MagnetizationVector::from_values(1, d, v.iter().copied().collect())?)
                })
                .collect::<LabResult<Vec<_>>>()
        })
        .collect::<LabResult<_>>()?;
    let estimate = pooled_moments(&rotated, section.batches)?;

    let limit = limit_or_warn(model);
    let (frobenius_error, relative_error, max_z_score) = match &limit {
        Some(l) => {
            let diff = &estimate.covariance - l;
            let z = diff
                .iter()
                .zip(estimate.standard_errors.iter())
                .filter(|(_, se)| **se > 0.0)
                .map(|(e, se)| e.abs() / se)
                .fold(0.0, f64::max);
            (Some(diff.norm()), Some(diff.norm() / l.norm()), Some(z))
        }
        None => (None, None, None),
    };

    writer.write("empirical_covariance.csv", |w| {
        write_matrix(w, "c", &estimate.covariance)
    })?;
    writer.write("standard_errors.csv", |w| {
        write_matrix(w, "c", &estimate.standard_errors)
    })?;
    if let Some(l) = &limit {
        writer.write("limit_covariance.csv", |w| write_matrix(w, "c", l))?;
    }
    Ok(McCovarianceReport {
        regime,
        norm,
        in_regime,
        samples: estimate.samples,
        batch_size: estimate.batch_size,
        batches: estimate.effective_samples,
        frobenius_error,
        relative_error,
        max_z_score,
        limit,
        estimate,
    })
}

/// `Cov(m̂) = ℛ·√𝒮·Cov(m)·√𝒮·ℛᵀ` from the exact law.
pub fn exact_rotated_covariance(model: &Model) -> LabResult<DMatrix<f64>> {
    let moments = exact_count_moments(model)?;
    let q = model.q();
    let scale = DMatrix::from_fn(model.dim(), model.dim(), |i, j| {
        (model.block_sizes()[i / q] as f64 * model.block_sizes()[j / q] as f64).sqrt()
    });
    let scaled = moments.covariance.component_mul(&scale);
    let r = rotation_operator(model).r;
    Ok(&r * scaled * r.transpose())
}

pub fn run_exact(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<ExactLadderReport> {
    let (regime, norm, in_regime) = regime_of(model)?;
    let limit = rotated_covariance(model)?;
    let mut rows = Vec::new();
    let mut covariances = Vec::new();
    for &n in &config.covariance.ladder {
        let sizes = ladder_block_sizes(model, n)?;
        // same A and γ, so the limit is shared by every rung
        let rung = Model::new(ModelSpec::new(sizes.clone(), model.q(), model.a().clone()))?;
        let cov = exact_rotated_covariance(&rung)?;
        let err = (&cov - &limit).norm();
        log::info!("N = {n}: Frobenius error {err:e}");
        rows.push(LadderRow {
            n,
            block_sizes: sizes,
            frobenius_error: err,
            relative_error: err / limit.norm(),
        });
        covariances.push(cov);
    }
    let monotone = rows.windows(2).all(|w| w[1].frobenius_error < w[0].frobenius_error);
    let final_relative_error = rows.last().map(|r| r.relative_error).unwrap_or(f64::NAN);

    writer.write("ladder.csv", |w| {
        writeln!(w, "n,frobenius_error,relative_error")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{}",
                r.n,
                fmt_f64(r.frobenius_error),
                fmt_f64(r.relative_error)
            )?;
        }
        Ok(())
    })?;
    writer.write("limit_covariance.csv", |w| write_matrix(w, "c", &limit))?;
    for (row, cov) in rows.iter().zip(&covariances) {
        writer.write(&format!("exact_covariance_n{}.csv", row.n), |w| {
            write_matrix(w, "c", cov)
        })?;
    }
    Ok(ExactLadderReport {
        regime,
        norm,
        in_regime,
        rows,
        monotone,
        final_relative_error,
        limit,
        covariances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_curie_weiss_variance_approaches_limit() {
        // q = 2: m̂ = √(N/2)(m_1 − m_2), whose variance tends to 1/(2 − β)
        let cov = |n: usize| {
            let m = Model::new(ModelSpec::new(vec![n], 2, DMatrix::from_element(1, 1, 1.0))).unwrap();
            exact_rotated_covariance(&m).unwrap()[(0, 0)]
        };
        let (a, b) = (cov(200), cov(800));
        assert!((b - 1.0).abs() < (a - 1.0).abs());
        assert!((b - 1.0).abs() < 0.01, "{b}");
    }
}
