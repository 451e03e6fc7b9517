//! Density of `𝒮^θ(m − v)` smoothed by the Gaussian `N(0, N(𝒮^{1−θ}𝒜𝒮^{1−θ})⁻¹)`:
//! `c_N·exp(−N·φ((𝒮/N)^{1−θ}x/N^θ + 𝒮v/N))`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::csv::{fmt_f64, join_f64};
use crate::error::{Error, Result};
use crate::landscape::phi::phi;
use crate::model::Model;

pub const MAX_QUADRATURE_DIMENSION: usize = 4;
pub const NORMALIZER_TOLERANCE: f64 = 1e-8;
/// Quadrature stops refining past this many nodes.
pub const MAX_QUADRATURE_POINTS: usize = 1 << 24;

/// Axis-aligned evaluation box.
#[derive(Debug, Clone, PartialEq)]
pub struct HsBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HsBox {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        HsBox {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsDensity {
    pub theta: f64,
    pub v: Vec<f64>,
    /// Node coordinates per axis.
    pub axes: Vec<Vec<f64>>,
    /// Unnormalized log density on the tensor grid, last axis fastest.
    pub log_values: Vec<f64>,
    /// Log of the trapezoid integral of the unnormalized density over the box.
    pub log_normalizer: f64,
    /// Relative change of the normalizer at the last doubling.
    pub normalizer_change: f64,
    pub normalizer_converged: bool,
}

impl HsDensity {
    pub fn density(&self) -> Vec<f64> {
        self.log_values
            .iter()
            .map(|l| (l - self.log_normalizer).exp())
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        tensor_points(&self.axes)
    }

    /// CSV `x_1,...,x_d,density` with the normalized density.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let d = self.axes.len();
        let header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
        writeln!(out, "{},density", header.join(","))?;
        for (x, p) in self.points().iter().zip(self.density()) {
            writeln!(out, "{},{}", join_f64(x.iter().copied()), fmt_f64(p))?;
        }
        Ok(())
    }
}

fn check_inputs(model: &Model, theta: f64, v: &[f64]) -> Result<()> {
    if !(0.0..=0.5).contains(&theta) {
        return Err(Error::InvalidTheta(theta));
    }
    if v.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// Argument `(𝒮/N)^{1−θ}x/N^θ + 𝒮v/N` of `φ`.
fn argument(model: &Model, theta: f64, v: &[f64], x: &[f64]) -> Vec<f64> {
    let q = model.q();
    let n = model.n() as f64;
    x.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (xi, vi))| {
            let g = model.gamma()[i / q];
            g.powf(1.0 - theta) * xi / n.powf(theta) + g * vi
        })
        .collect()
}

/// `−N·φ(argument)`.
pub fn hs_log_unnormalized(model: &Model, theta: f64, v: &[f64], x: &[f64]) -> Result<f64> {
    check_inputs(model, theta, v)?;
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: x.len(),
        });
    }
    Ok(-(model.n() as f64) * phi(model, &argument(model, theta, v, x))?)
}

/// `log c_N = −(d/2)·log 2π + ½·log det P − log Z_N` with
/// `P = 𝒮^{1−θ}𝒜𝒮^{1−θ}/N`; `log_z` is the log partition function.
pub fn hs_log_constant(model: &Model, theta: f64, log_z: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&theta) {
        return Err(Error::InvalidTheta(theta));
    }
    let d = model.dim();
    let q = model.q();
    let s_pow: Vec<f64> = (0..d)
        .map(|i| (model.block_sizes()[i / q] as f64).powf(1.0 - theta))
        .collect();
    let a_cal = model.a_cal();
    let p = DMatrix::from_fn(d, d, |i, j| s_pow[i] * a_cal[(i, j)] * s_pow[j] / model.n() as f64);
    let chol = p.cholesky().ok_or(Error::NotPositiveDefinite {
        min_eigenvalue: f64::NAN,
    })?;
    let log_det: f64 = chol.l().diagonal().iter().map(|l| 2.0 * l.ln()).sum();
    Ok(-(d as f64) / 2.0 * (2.0 * std::f64::consts::PI).ln() + 0.5 * log_det - log_z)
}

fn axes_for(bx: &HsBox, resolution: usize) -> Vec<Vec<f64>> {
    bx.lower
        .iter()
        .zip(&bx.upper)
        .map(|(lo, hi)| {
            let step = (hi - lo) / (resolution - 1) as f64;
            (0..resolution).map(|i| lo + i as f64 * step).collect()
        })
        .collect()
}

fn tensor_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; axes.len()];
            for (k, axis) in axes.iter().enumerate().rev() {
                x[k] = axis[idx % axis.len()];
                idx /= axis.len();
            }
            x
        })
        .collect()
}

fn log_values_on(model: &Model, theta: f64, v: &[f64], axes: &[Vec<f64>]) -> Result<Vec<f64>> {
    tensor_points(axes)
        .par_iter()
        .map(|x| hs_log_unnormalized(model, theta, v, x))
        .collect()
}

/// Log of the tensor trapezoid integral of `exp(log_values)`.
fn log_trapezoid(axes: &[Vec<f64>], log_values: &[f64]) -> f64 {
    let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (idx, lv) in log_values.iter().enumerate() {
        let mut rest = idx;
        let mut w = 1.0;
        for axis in axes.iter().rev() {
            let n = axis.len();
            let i = rest % n;
            rest /= n;
            let h = axis[1] - axis[0];
            w *= if i == 0 || i == n - 1 { 0.5 * h } else { h };
        }
        total += w * (lv - max).exp();
    }
    max + total.ln()
}

/// Unnormalized log density on a `grid_resolution`-point-per-axis grid over
/// `bx`, with the normalizer over `bx` from trapezoid quadrature whose
/// resolution is doubled until the relative change falls below `1e-8`.
pub fn hs_density(model: &Model, theta: f64, v: &[f64], bx: &HsBox, grid_resolution: usize) -> Result<HsDensity> {
    check_inputs(model, theta, v)?;
    let d = model.dim();
    if d > MAX_QUADRATURE_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dimension: d,
            limit: MAX_QUADRATURE_DIMENSION,
        });
    }
    if bx.lower.len() != d || bx.upper.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bx.lower.len().min(bx.upper.len()),
        });
    }
    if bx
        .lower
        .iter()
        .zip(&bx.upper)
        .any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite())
    {
        return Err(Error::InvalidConfig(
            "box bounds must be finite with lower < upper".into(),
        ));
    }
    if grid_resolution < 2 {
        return Err(Error::InvalidConfig("grid resolution must be at least 2".into()));
    }

    let axes = axes_for(bx, grid_resolution);
    let log_values = log_values_on(model, theta, v, &axes)?;

    let mut intervals = grid_resolution - 1;
    let mut log_norm = log_trapezoid(&axes, &log_values);
    let mut change = f64::INFINITY;
    loop {
        let next = 2 * intervals;
        if (next + 1).pow(d as u32) > MAX_QUADRATURE_POINTS {
            break;
        }
        let fine_axes = axes_for(bx, next + 1);
        let fine = log_trapezoid(&fine_axes, &log_values_on(model, theta, v, &fine_axes)?);
        change = ((fine - log_norm).exp() - 1.0).abs();
        log_norm = fine;
        intervals = next;
        if change < NORMALIZER_TOLERANCE {
            break;
        }
    }
    let converged = change < NORMALIZER_TOLERANCE;
    if !converged {
        log::warn!("normalizer quadrature stopped with relative change {change:e}");
    }
    Ok(HsDensity {
        theta,
        v: v.to_vec(),
        axes,
        log_values,
        log_normalizer: log_norm,
        normalizer_change: change,
        normalizer_converged: converged,
    })
}
