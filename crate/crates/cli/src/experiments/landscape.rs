//! Reduced-landscape scans and fixed-point runs.

use std::io::Write;

use block_potts::csv::{fmt_f64, join_f64};
use block_potts::landscape::reduced::unit_grid;
use block_potts::landscape::{
    contraction_bound, fixed_point_solve, grid_minimize, hessian_certificate, reduced_landscape, GridMinimum,
};
use block_potts::{Error, Model};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::LabResult;
use crate::manifest::RunWriter;

/// Distance from the origin below which a minimizer counts as `t = 0`.
pub const ORIGIN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct MinimumSummary {
    pub t: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub hessian_min_eigenvalue: f64,
    pub is_global: bool,
    pub at_origin: bool,
}

impl From<&GridMinimum> for MinimumSummary {
    fn from(m: &GridMinimum) -> Self {
        MinimumSummary {
            t: m.t.iter().copied().collect(),
            value: m.value,
            gradient_norm: m.gradient_norm,
            hessian_min_eigenvalue: m.hessian_min_eigenvalue,
            is_global: m.is_global,
            at_origin: m.t.amax() < ORIGIN_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointRow {
    pub start: Vec<f64>,
    pub converged: bool,
    pub t_star: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub contraction_bound: f64,
    /// Contraction bound below 1.
    pub certified: bool,
    pub rows: Vec<FixedPointRow>,
    /// Every start converged to within the tolerance of `t = 0`.
    pub all_at_origin: bool,
    pub hessian_min_eigenvalue: f64,
    pub hessian_positive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeReport {
    pub grid: usize,
    pub grid_points: usize,
    pub minima: Vec<MinimumSummary>,
    pub global_at_origin: bool,
    pub fixed_points: FixedPointReport,
}

/// Iterates the fixed-point map from the `starts_per_axis^s` grid of starts.
/// Starts that fail to converge are recorded, not raised.
pub fn fixed_points(config: &ExperimentConfig, model: &Model) -> LabResult<FixedPointReport> {
    let fp = &config.fixed_point;
    let starts = if fp.starts_per_axis == 1 {
        vec![vec![0.5; model.s()]]
    } else {
        unit_grid(model.s(), fp.starts_per_axis)?
    };
    let mut rows = Vec::with_capacity(starts.len());
    for start in starts {
        let row = match fixed_point_solve(model, &start, fp.tolerance, fp.max_iterations) {
            Ok(r) => FixedPointRow {
                start,
                converged: true,
                t_star: r.t_star.iter().copied().collect(),
                iterations: r.iterations,
                residual: r.residual,
            },
            Err(Error::NoConvergence {
                iterations, residual, ..
            }) => {
                log::warn!("fixed-point iteration from {start:?} did not converge (residual {residual:e})");
                FixedPointRow {
                    t_star: vec![f64::NAN; start.len()],
                    start,
                    converged: false,
                    iterations,
                    residual,
                }
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(row);
    }
    let bound = contraction_bound(model);
    let certificate = hessian_certificate(model)?;
    let all_at_origin = rows
        .iter()
        .all(|r| r.converged && r.t_star.iter().all(|t| t.abs() < 1e-8));
    Ok(FixedPointReport {
        contraction_bound: bound,
        certified: bound < 1.0,
        rows,
        all_at_origin,
        hessian_min_eigenvalue: certificate.lambda_min,
        hessian_positive: certificate.positive,
    })
}

fn write_fixed_points(writer: &mut RunWriter, s: usize, report: &FixedPointReport) -> LabResult<()> {
    writer.write("fixed_points.csv", |w| {
        let start: Vec<String> = (1..=s).map(|i| format!("start_{i}")).collect();
        let t: Vec<String> = (1..=s).map(|i| format!("t_{i}")).collect();
        writeln!(w, "{},converged,{},iterations,residual", start.join(","), t.join(","))?;
        for r in &report.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                join_f64(r.start.iter().copied()),
                r.converged,
                join_f64(r.t_star.iter().copied()),
                r.iterations,
                fmt_f64(r.residual)
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn run_fixed_point(
    config: &ExperimentConfig,
    model: &Model,
    writer: &mut RunWriter,
) -> LabResult<FixedPointReport> {
    let report = fixed_points(config, model)?;
    write_fixed_points(writer, model.s(), &report)?;
    Ok(report)
}

pub fn run_scan(config: &ExperimentConfig, model: &Model, writer: &mut RunWriter) -> LabResult<LandscapeReport> {
    let s = model.s();
    let grid = config.landscape.grid;
    let points = reduced_landscape(model, grid)?;
    writer.write("landscape.csv", |w| {
        let t: Vec<String> = (1..=s).map(|i| format!("t_{i}")).collect();
        writeln!(w, "{},Phi", t.join(","))?;
        for p in &points {
            writeln!(w, "{},{}", join_f64(p.t.iter().copied()), fmt_f64(p.value))?;
        }
        Ok(())
    })?;

    let minima: Vec<MinimumSummary> = grid_minimize(model, grid, config.landscape.refine_steps)?
        .iter()
        .map(MinimumSummary::from)
        .collect();
    writer.write("minima.csv", |w| {
        let t: Vec<String> = (1..=s).map(|i| format!("t_{i}")).collect();
        writeln!(w, "{},Phi,gradient_norm,hessian_min_eigenvalue,is_global", t.join(","))?;
        for m in &minima {
            writeln!(
                w,
                "{},{},{},{},{}",
                join_f64(m.t.iter().copied()),
                fmt_f64(m.value),
                fmt_f64(m.gradient_norm),
                fmt_f64(m.hessian_min_eigenvalue),
                m.is_global
            )?;
        }
        Ok(())
    })?;

    let fixed_points = fixed_points(config, model)?;
    write_fixed_points(writer, s, &fixed_points)?;
    Ok(LandscapeReport {
        grid,
        grid_points: points.len(),
        global_at_origin: minima.first().is_some_and(|m| m.at_origin),
        minima,
        fixed_points,
    })
}
