//! Smoothed density of the magnetization, checked against the exact law of
//! `𝒮^θ(m − v)` convolved with the auxiliary Gaussian when the count space
//! is small enough to enumerate.

use std::io::Write;

use block_potts::csv::{fmt_f64, join_f64};
use block_potts::limit::{hs_density, hs_log_constant, HsBox, HsDensity};
use block_potts::linalg::log_sum_exp;
use block_potts::sampling::{count_space_size, exact_count_distribution};
use block_potts::Model;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::manifest::RunWriter;

#[derive(Debug, Clone, Serialize)]
pub struct HsReport {
    pub theta: f64,
    pub v: Vec<f64>,
    pub grid_points: usize,
    pub log_normalizer: f64,
    pub normalizer_change: f64,
    pub normalizer_converged: bool,
    /// Max relative error of `c_N·exp(−Nφ)` against the convolution oracle.
    pub oracle_max_relative_error: Option<f64>,
    /// Mass of the exact-normalized density inside the box.
    pub box_mass: Option<f64>,
}

/// Log density of `𝒮^θ(m − v) + Y` at each point, `Y` the centred Gaussian
/// with precision `𝒮^{1−θ}𝒜𝒮^{1−θ}/N`, by direct summation over the exact law.
pub fn convolution_oracle(model: &Model, theta: f64, v: &[f64], points: &[Vec<f64>]) -> LabResult<Vec<f64>> {
    let (n, q, d) = (model.n() as f64, model.q(), model.dim());
    let exact = exact_count_distribution(model)?;
    let scale = |i: usize, p: f64| (model.block_sizes()[i / q] as f64).powf(p);
    let a_cal = model.a_cal();
    let precision = DMatrix::from_fn(d, d, |i, j| {
        scale(i, 1.0 - theta) * a_cal[(i, j)] * scale(j, 1.0 - theta) / n
    });
    let chol = precision
        .clone()
        .cholesky()
        .ok_or_else(|| LabError::Config("Gaussian precision is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
    let log_gauss = -(d as f64) / 2.0 * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det;

    let atoms: Vec<(f64, DVector<f64>)> = exact
        .support
        .iter()
        .zip(exact.log_probabilities())
        .map(|(counts, lp)| {
            let x = DVector::from_fn(d, |i, _| {
                let m = counts.as_flat()[i] as f64 / model.block_sizes()[i / q] as f64;
                scale(i, theta) * (m - v[i])
            });
            (lp + log_gauss, x)
        })
        .collect();
    Ok(points
        .par_iter()
        .map(|x| {
            let x = DVector::from_column_slice(x);
            let terms: Vec<f64> = atoms
                .iter()
                .map(|(lp, atom)| {
                    let y = &x - atom;
                    lp - 0.5 * y.dot(&(&precision * &y))
                })
                .collect();
            log_sum_exp(&terms)
        })
        .collect())
}

pub fn run(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<HsReport> {
    let h = &config.hs;
    let v = h.v.clone().unwrap_or_else(|| vec![1.0 / model.q() as f64; model.dim()]);
    let dens: HsDensity = hs_density(model, h.theta, &v, &HsBox::cube(model.dim(), h.half_width), h.grid)?;
    writer.write("hs_density.csv", |w| dens.write_csv(w))?;
    let points = dens.points();

    let mut report = HsReport {
        theta: h.theta,
        v: v.clone(),
        grid_points: points.len(),
        log_normalizer: dens.log_normalizer,
        normalizer_change: dens.normalizer_change,
        normalizer_converged: dens.normalizer_converged,
        oracle_max_relative_error: None,
        box_mass: None,
    };
    if count_space_size(model) > h.oracle_limit {
        log::info!("count space too large for the convolution oracle; skipping it");
        return Ok(report);
    }

    let exact = exact_count_distribution(model)?;
    let log_c = hs_log_constant(model, h.theta, exact.log_z)?;
    let smoothed: Vec<f64> = dens.log_values.iter().map(|l| log_c + l).collect();
    let oracle = convolution_oracle(model, h.theta, &v, &points)?;
    let errors: Vec<f64> = smoothed
        .iter()
        .zip(&oracle)
        .map(|(a, b)| ((a - b).exp() - 1.0).abs())
        .collect();
    report.oracle_max_relative_error = Some(errors.iter().copied().fold(0.0, f64::max));
    report.box_mass = Some((log_c + dens.log_normalizer).exp());

    writer.write("hs_oracle.csv", |w| {
        let header: Vec<String> = (1..=model.dim()).map(|i| format!("x_{i}")).collect();
        writeln!(w, "{},density,oracle,relative_error", header.join(","))?;
        for (((x, a), b), e) in points.iter().zip(&smoothed).zip(&oracle).zip(&errors) {
            writeln!(
                w,
                "{},{},{},{}",
                join_f64(x.iter().copied()),
                fmt_f64(a.exp()),
                fmt_f64(b.exp()),
                fmt_f64(*e)
            )?;
        }
        Ok(())
    })?;
    Ok(report)
}
