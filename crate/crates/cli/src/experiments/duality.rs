//! Gap between the primal and dual suprema over a sequence of primal grids.

use std::io::Write;

use block_potts::csv::fmt_f64;
use block_potts::landscape::{duality_check, DualGrid, PrimalGrid};
use block_potts::linalg::sym_inverse;
use block_potts::Model;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::manifest::RunWriter;

#[derive(Debug, Clone, Serialize)]
pub struct DualityRow {
    pub primal_resolution: usize,
    pub primal_points: usize,
    pub dual_points: usize,
    pub sup_primal: f64,
    pub sup_dual: f64,
    /// `|sup(f − g) − sup(g* − f*)|`.
    pub gap: f64,
    pub substitution_error: f64,
    /// `‖∇g(primal argmax) − dual argmax‖_∞`.
    pub argmax_distance: f64,
    /// Primal plus dual grid spacing, the resolution of the argmax comparison.
    pub argmax_tolerance: f64,
    pub bijection_in_c: Option<bool>,
    pub bijection_value_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityGapReport {
    pub rows: Vec<DualityRow>,
    /// Gaps strictly decrease with the primal resolution.
    pub monotone: bool,
    pub final_gap: f64,
}

pub fn run(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<DualityGapReport> {
    let d = &config.duality;
    let dual = DualGrid {
        resolution: d.dual_resolution,
        epsilon: d.epsilon,
    };
    let a_cal_inv = sym_inverse(model.a_cal())?.inverse;
    let q = model.q() as f64;
    let dual_spacing = model.gamma().amax() * (1.0 - q * d.epsilon) / d.dual_resolution as f64;

    let mut resolutions = d.primal_resolutions.clone();
    resolutions.sort_unstable();
    let mut rows = Vec::with_capacity(resolutions.len());
    for r in resolutions {
        let primal = PrimalGrid {
            lower: d.lower,
            upper: d.upper,
            resolution: r,
        };
        let report = duality_check(model, &primal, &dual)?;
        // ∇g(ξ̃) = 𝒜⁻¹ξ̃
        let mapped = &a_cal_inv * &report.argmax_primal;
        let row = DualityRow {
            primal_resolution: r,
            primal_points: report.primal_points,
            dual_points: report.dual_points,
            sup_primal: report.sup_primal,
            sup_dual: report.sup_dual,
            gap: report.gap.abs(),
            substitution_error: report.substitution_error,
            argmax_distance: (mapped - &report.argmax_dual).amax(),
            argmax_tolerance: (d.upper - d.lower) / (r - 1) as f64 + dual_spacing,
            bijection_in_c: report.bijection.as_ref().map(|b| b.in_c),
            bijection_value_error: report.bijection.as_ref().map(|b| b.value_error),
        };
        log::info!("primal resolution {r}: gap {:e}", row.gap);
        rows.push(row);
    }
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    let final_gap = rows.last().map(|r| r.gap).unwrap_or(f64::NAN);

    writer.write("duality.csv", |w| {
        writeln!(
            w,
            "primal_resolution,primal_points,dual_points,sup_primal,sup_dual,gap,substitution_error,argmax_distance,argmax_tolerance"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.primal_resolution,
                r.primal_points,
                r.dual_points,
                fmt_f64(r.sup_primal),
                fmt_f64(r.sup_dual),
                fmt_f64(r.gap),
                fmt_f64(r.substitution_error),
                fmt_f64(r.argmax_distance),
                fmt_f64(r.argmax_tolerance)
            )?;
        }
        Ok(())
    })?;
    Ok(DualityGapReport {
        rows,
        monotone,
        final_gap,
    })
}
