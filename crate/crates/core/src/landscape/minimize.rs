//! Grid-search oracle for the minima of `Φ` and the Hessian certificate at
//! the uniform point.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::Result;
use crate::landscape::phi::{hessian_phi, uniform_point};
use crate::landscape::reduced::{reduced_grad, reduced_hessian, reduced_phi, unit_grid};
use crate::linalg::{min_eigenvalue, sym_spectral_norm};
use crate::model::Model;

pub const DEFAULT_GRID_RESOLUTION: usize = 201;
pub const DEFAULT_REFINE_STEPS: usize = 50;
/// Minima within this of the best value are co-global.
pub const CO_GLOBAL_TOLERANCE: f64 = 1e-9;
/// Refined points closer than this (sup norm) are the same minimum.
pub const DEDUP_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub t: DVector<f64>,
    pub value: f64,
    /// Sup norm of the projected gradient on `[0,1]^s`.
    pub gradient_norm: f64,
    pub hessian_min_eigenvalue: f64,
    pub is_global: bool,
}

/// Discrete local minima of `Φ` on the grid, refined by projected gradient
/// descent with backtracking and then Newton steps, deduplicated, and sorted
/// by value.
pub fn grid_minimize(model: &Model, grid_resolution: usize, refine_steps: usize) -> Result<Vec<GridMinimum>> {
    let s = model.s();
    let grid = unit_grid(s, grid_resolution)?;
    let values: Vec<f64> = grid.par_iter().map(|t| reduced_phi(model, t)).collect::<Result<_>>()?;

    let candidates: Vec<usize> = (0..grid.len())
        .into_par_iter()
        .filter(|&i| is_discrete_minimum(i, s, grid_resolution, &values))
        .collect();

    let mut refined: Vec<(DVector<f64>, f64)> = candidates
        .par_iter()
        .map(|&i| refine(model, DVector::from_column_slice(&grid[i]), refine_steps))
        .collect::<Result<_>>()?;
    refined.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut distinct: Vec<(DVector<f64>, f64)> = Vec::new();
    for (t, v) in refined {
        if distinct.iter().all(|(u, _)| (u - &t).amax() >= DEDUP_DISTANCE) {
            distinct.push((t, v));
        }
    }
    let best = distinct.first().map(|d| d.1).unwrap_or(f64::INFINITY);
    distinct
        .into_iter()
        .map(|(t, value)| {
            let grad = reduced_grad(model, t.as_slice())?;
            Ok(GridMinimum {
                gradient_norm: projected(&t, &grad).amax(),
                hessian_min_eigenvalue: min_eigenvalue(&reduced_hessian(model, t.as_slice())?),
                is_global: value <= best + CO_GLOBAL_TOLERANCE,
                t,
                value,
            })
        })
        .collect()
}

fn is_discrete_minimum(index: usize, s: usize, res: usize, values: &[f64]) -> bool {
    let mut coords = vec![0usize; s];
    let mut rest = index;
    for k in (0..s).rev() {
        coords[k] = rest % res;
        rest /= res;
    }
    let v = values[index];
    let neighbours = 3usize.pow(s as u32);
    'offsets: for code in 0..neighbours {
        let mut c = code;
        let mut flat = 0usize;
        let mut centre = true;
        for &x in &coords {
            let d = (c % 3) as isize - 1;
            c /= 3;
            let y = x as isize + d;
            if y < 0 || y >= res as isize {
                continue 'offsets;
            }
            centre &= d == 0;
            flat = flat * res + y as usize;
        }
        if !centre && values[flat] < v {
            return false;
        }
    }
    true
}

/// Gradient with components that push out of the box removed.
fn projected(t: &DVector<f64>, grad: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        t.len(),
        t.iter().zip(grad.iter()).map(|(&x, &g)| {
            if (x <= 0.0 && g > 0.0) || (x >= 1.0 && g < 0.0) {
                0.0
            } else {
                g
            }
        }),
    )
}

fn clamp_unit(t: DVector<f64>) -> DVector<f64> {
    t.map(|v| v.clamp(0.0, 1.0))
}

fn refine(model: &Model, mut t: DVector<f64>, steps: usize) -> Result<(DVector<f64>, f64)> {
    let mut value = reduced_phi(model, t.as_slice())?;
    let mut alpha = 1.0;
    for _ in 0..steps {
        let grad = reduced_grad(model, t.as_slice())?;
        if projected(&t, &grad).amax() < 1e-15 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial = clamp_unit(&t - &grad * alpha);
            let tv = reduced_phi(model, trial.as_slice())?;
            if tv <= value - 1e-4 * grad.dot(&(&t - &trial)) {
                t = trial;
                value = tv;
                accepted = true;
                alpha *= 2.0;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Newton polish for interior minima with a positive definite Hessian
    for _ in 0..50 {
        let grad = reduced_grad(model, t.as_slice())?;
        if grad.amax() < 1e-15 {
            break;
        }
        let hess = reduced_hessian(model, t.as_slice())?;
        let Some(chol) = hess.cholesky() else { break };
        let trial = clamp_unit(&t - chol.solve(&grad));
        let tv = reduced_phi(model, trial.as_slice())?;
        if tv > value + 1e-15 * value.abs().max(1.0) {
            break;
        }
        let moved = (&trial - &t).amax();
        t = trial;
        value = tv;
        if moved < 1e-15 {
            break;
        }
    }
    Ok((t, value))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCertificate {
    pub lambda_min: f64,
    pub positive: bool,
}

/// Smallest eigenvalue of `H_φ` at the uniform point; positive when it
/// exceeds `1e-12·‖A‖₂`.
pub fn hessian_certificate(model: &Model) -> Result<HessianCertificate> {
    let h = hessian_phi(model, &uniform_point(model))?;
    let lambda_min = min_eigenvalue(&h);
    Ok(HessianCertificate {
        lambda_min,
        positive: lambda_min > 1e-12 * sym_spectral_norm(model.a()),
    })
}
