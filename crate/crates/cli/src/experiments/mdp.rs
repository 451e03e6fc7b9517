//! Moderate-deviation form matrices over a range of scalings.

use std::io::Write;

use block_potts::csv::{fmt_f64, join_f64};
use block_potts::limit::{mdp_form_matrix, rotated_covariance};
use block_potts::linalg::{max_abs_diff, min_eigenvalue, sym_inverse};
use block_potts::Model;
use serde::Serialize;

use super::write_matrix;
use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::manifest::RunWriter;

#[derive(Debug, Clone, Serialize)]
pub struct MdpRow {
    pub theta: f64,
    pub min_eigenvalue: f64,
    /// `max |F(θ) − Cov(m̂)⁻¹|`, the CLT consistency at `θ = 1/2`.
    pub distance_to_inverse_covariance: Option<f64>,
    /// `½tᵀF(θ)t` at each configured point.
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MdpReport {
    pub rows: Vec<MdpRow>,
}

pub fn run(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<MdpReport> {
    let inverse_cov = match rotated_covariance(model) {
        Ok(c) => Some(sym_inverse(&c)?.inverse),
        Err(e) => {
            log::warn!("no limiting covariance to compare against: {e}");
            None
        }
    };
    let points = &config.mdp.points;
    let mut rows = Vec::new();
    for &theta in &config.mdp.thetas {
        let f = mdp_form_matrix(model, theta)?;
        let rates = points
            .iter()
            .map(|t| {
                let t = nalgebra::DVector::from_column_slice(t);
                0.5 * t.dot(&(&f * &t))
            })
            .collect();
        rows.push(MdpRow {
            theta,
            min_eigenvalue: min_eigenvalue(&f),
            distance_to_inverse_covariance: inverse_cov.as_ref().map(|c| max_abs_diff(&f, c)),
            rates,
        });
        writer.write(&format!("mdp_form_theta_{theta}.csv"), |w| write_matrix(w, "f", &f))?;
    }

    writer.write("mdp_table.csv", |w| {
        writeln!(w, "theta,min_eigenvalue,distance_to_inverse_covariance")?;
        for r in &rows {
            let dist = r.distance_to_inverse_covariance.map(fmt_f64).unwrap_or_default();
            writeln!(w, "{},{},{}", fmt_f64(r.theta), fmt_f64(r.min_eigenvalue), dist)?;
        }
        Ok(())
    })?;
    if !points.is_empty() {
        let d = points[0].len();
        writer.write("mdp_rates.csv", |w| {
            let header: Vec<String> = (1..=d).map(|i| format!("t_{i}")).collect();
            writeln!(w, "theta,{},rate", header.join(","))?;
            for r in &rows {
                for (t, rate) in points.iter().zip(&r.rates) {
                    writeln!(
                        w,
                        "{},{},{}",
                        fmt_f64(r.theta),
                        join_f64(t.iter().copied()),
                        fmt_f64(*rate)
                    )?;
                }
            }
            Ok(())
        })?;
    }
    Ok(MdpReport { rows })
}
