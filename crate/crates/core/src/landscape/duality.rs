//! Numerical check of the duality
//! `sup_ξ̃ {f(ξ̃) − g(ξ̃)} = sup_{ν∈C} {g*(ν) − f*(ν)}` with
//! `f(ξ̃) = Σ_k γ_k·lse(ξ̃_k)`, `g(ξ̃) = ½ξ̃ᵀ𝒜⁻¹ξ̃`,
//! `f*(ν) = νᵀlog ν − Σ_k γ_k log γ_k` on `C`, `g*(ν) = ½νᵀ𝒜ν`.
//!
//! `C` holds the vectors with positive entries whose block `k` sums to `γ_k`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landscape::phi::{grad_phi, hessian_phi, phi};
use crate::linalg::{log_sum_exp, sym_inverse};
use crate::model::Model;
use crate::sampling::exact::compositions;

pub const DEFAULT_DUAL_EPSILON: f64 = 1e-6;
pub const MAX_DUALITY_POINTS: usize = 20_000_000;
/// Tolerance on block sums when testing membership in `C`.
pub const C_TOLERANCE: f64 = 1e-12;

/// Uniform grid with `resolution` points per axis on `[lower, upper]^{sq}`, laid
/// out in `ξ = 𝒜⁻¹ξ̃` coordinates so it can be placed around the critical
/// points of `φ`. Each point is mapped to `ξ̃ = 𝒜ξ` before evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimalGrid {
    pub lower: f64,
    pub upper: f64,
    pub resolution: usize,
}

/// Points `ν_k = γ_k·(ε + (1 − qε)·i/r)` for every composition `i` of `r`
/// into `q` parts, in every block. All points lie strictly inside `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualGrid {
    pub resolution: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BijectionCheck {
    /// Critical point of `f − g` reached from the best primal grid point.
    pub xi_tilde: DVector<f64>,
    /// `∇g(ξ̃) = 𝒜⁻¹ξ̃`.
    pub nu: DVector<f64>,
    pub in_c: bool,
    /// `max_k |Σ_c ν_kc − γ_k|`.
    pub block_sum_error: f64,
    /// `|(g* − f*)(ν) − (f − g)(ξ̃)|`.
    pub value_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub sup_primal: f64,
    pub sup_dual: f64,
    pub gap: f64,
    /// Maximizer `ξ̃` of `f − g` on the grid.
    pub argmax_primal: DVector<f64>,
    pub argmax_dual: DVector<f64>,
    /// `max |(f − g)(𝒜ξ) + φ(ξ)|` over the primal grid.
    pub substitution_error: f64,
    pub primal_points: usize,
    pub dual_points: usize,
    pub bijection: Option<BijectionCheck>,
}

pub fn f_value(model: &Model, xi_tilde: &[f64]) -> f64 {
    let q = model.q();
    model
        .gamma()
        .iter()
        .enumerate()
        .map(|(k, g)| g * log_sum_exp(&xi_tilde[k * q..(k + 1) * q]))
        .sum()
}

fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let v = DVector::from_column_slice(v);
    0.5 * v.dot(&(m * &v))
}

pub fn in_c(model: &Model, nu: &[f64]) -> bool {
    let q = model.q();
    nu.len() == model.dim()
        && nu.iter().all(|v| *v > 0.0)
        && model
            .gamma()
            .iter()
            .enumerate()
            .all(|(k, g)| (nu[k * q..(k + 1) * q].iter().sum::<f64>() - g).abs() <= C_TOLERANCE)
}

fn entropy_term(model: &Model) -> f64 {
    model.gamma().iter().map(|g| g * g.ln()).sum()
}

/// `f*(ν)`; points outside `C` (where `f* = ∞`) are an error.
pub fn f_conjugate(model: &Model, nu: &[f64]) -> Result<f64> {
    if !in_c(model, nu) {
        return Err(Error::GridPointOutsideC(format!("{nu:?}")));
    }
    Ok(nu.iter().map(|v| v * v.ln()).sum::<f64>() - entropy_term(model))
}

pub fn g_conjugate(model: &Model, nu: &[f64]) -> f64 {
    quad(model.a_cal(), nu)
}

fn grid_size(base: usize, exponent: usize) -> Result<usize> {
    let size = (base as f64).powi(exponent as i32);
    if size > MAX_DUALITY_POINTS as f64 {
        return Err(Error::TooLarge {
            size,
            limit: MAX_DUALITY_POINTS as f64,
        });
    }
    Ok(base.pow(exponent as u32))
}

pub fn dual_grid_points(model: &Model, grid: &DualGrid) -> Result<Vec<Vec<f64>>> {
    let q = model.q();
    let qf = q as f64;
    if grid.resolution < 1 {
        return Err(Error::InvalidConfig("dual grid resolution must be at least 1".into()));
    }
    if !(grid.epsilon > 0.0 && grid.epsilon * qf < 1.0) {
        return Err(Error::GridPointOutsideC(format!(
            "epsilon = {} must lie in (0, 1/q) to keep every point inside C",
            grid.epsilon
        )));
    }
    let simplex = compositions(grid.resolution, q);
    let total = grid_size(simplex.len(), model.s())?;
    let r = grid.resolution as f64;
    let scale = 1.0 - qf * grid.epsilon;
    let points: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut nu = vec![0.0; model.dim()];
            for (k, g) in model.gamma().iter().enumerate().rev() {
                let comp = &simplex[idx % simplex.len()];
                idx /= simplex.len();
                for c in 0..q {
                    nu[k * q + c] = g * (grid.epsilon + scale * comp[c] as f64 / r);
                }
            }
            nu
        })
        .collect();
    Ok(points)
}

pub fn primal_grid_points(model: &Model, grid: &PrimalGrid) -> Result<Vec<Vec<f64>>> {
    if grid.resolution < 2 || !(grid.lower < grid.upper) {
        return Err(Error::InvalidConfig(format!(
            "primal grid needs resolution >= 2 and lower < upper, got {grid:?}"
        )));
    }
    let d = model.dim();
    let total = grid_size(grid.resolution, d)?;
    let step = (grid.upper - grid.lower) / (grid.resolution - 1) as f64;
    Ok((0..total)
        .map(|mut idx| {
            let mut xi = vec![0.0; d];
            for v in xi.iter_mut().rev() {
                *v = grid.lower + (idx % grid.resolution) as f64 * step;
                idx /= grid.resolution;
            }
            xi
        })
        .collect())
}

pub fn duality_check(model: &Model, primal: &PrimalGrid, dual: &DualGrid) -> Result<DualityReport> {
    let xi_points = primal_grid_points(model, primal)?;
    let nu_points = dual_grid_points(model, dual)?;
    duality_check_points(model, &xi_points, &nu_points)
}

/// Same as [`duality_check`] with explicit points: `xi_points` in `ξ`
/// coordinates, `nu_points` in `C`.
pub fn duality_check_points(model: &Model, xi_points: &[Vec<f64>], nu_points: &[Vec<f64>]) -> Result<DualityReport> {
    if xi_points.is_empty() || nu_points.is_empty() {
        return Err(Error::InvalidConfig("duality grids must be non-empty".into()));
    }
    let d = model.dim();
    if let Some(bad) = xi_points.iter().chain(nu_points).find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let a_cal = model.a_cal();
    let a_inv = sym_inverse(a_cal)?.inverse;
    let to_tilde = |xi: &[f64]| -> Vec<f64> { (a_cal * DVector::from_column_slice(xi)).as_slice().to_vec() };

    let (best_primal, substitution_error) = xi_points
        .par_iter()
        .map(|xi| {
            let xt = to_tilde(xi);
            let v = f_value(model, &xt) - quad(&a_inv, &xt);
            let err = (v + phi(model, xi)?).abs();
            Ok(((v, xi.clone()), err))
        })
        .try_reduce(
            || ((f64::NEG_INFINITY, Vec::new()), 0.0f64),
            |a, b| {
                let best = if b.0 .0 > a.0 .0 { b.0 } else { a.0 };
                Ok((best, a.1.max(b.1)))
            },
        )?;

    let best_dual = nu_points
        .par_iter()
        .map(|nu| Ok((g_conjugate(model, nu) - f_conjugate(model, nu)?, nu)))
        .try_reduce(
            || (f64::NEG_INFINITY, &nu_points[0]),
            |a, b| Ok(if b.0 > a.0 { b } else { a }),
        )?;

    let bijection = polish_critical(model, &best_primal.1).map(|xi| {
        let xt = to_tilde(xi.as_slice());
        let primal_value = f_value(model, &xt) - quad(&a_inv, &xt);
        let nu = &a_inv * DVector::from_column_slice(&xt);
        let q = model.q();
        let block_sum_error = model
            .gamma()
            .iter()
            .enumerate()
            .map(|(k, g)| (nu.as_slice()[k * q..(k + 1) * q].iter().sum::<f64>() - g).abs())
            .fold(0.0, f64::max);
        let in_c = in_c(model, nu.as_slice());
        let value_error = if in_c {
            let dual_value =
                g_conjugate(model, nu.as_slice()) - f_conjugate(model, nu.as_slice()).unwrap_or(f64::INFINITY);
            (dual_value - primal_value).abs()
        } else {
            f64::INFINITY
        };
        BijectionCheck {
            xi_tilde: DVector::from_vec(xt),
            nu,
            in_c,
            block_sum_error,
            value_error,
        }
    });

    Ok(DualityReport {
        sup_primal: best_primal.0,
        sup_dual: best_dual.0,
        gap: best_primal.0 - best_dual.0,
        argmax_primal: DVector::from_vec(to_tilde(&best_primal.1)),
        argmax_dual: DVector::from_column_slice(best_dual.1),
        substitution_error,
        primal_points: xi_points.len(),
        dual_points: nu_points.len(),
        bijection,
    })
}

/// Newton iteration on `φ` from a grid point; `None` if it leaves the region
/// where the Hessian is positive definite or does not converge.
fn polish_critical(model: &Model, start: &[f64]) -> Option<DVector<f64>> {
    let mut xi = DVector::from_column_slice(start);
    for _ in 0..100 {
        let grad = grad_phi(model, xi.as_slice()).ok()?;
        if grad.amax() < 1e-14 {
            return Some(xi);
        }
        let chol = hessian_phi(model, xi.as_slice()).ok()?.cholesky()?;
        xi -= chol.solve(&grad);
    }
    (grad_phi(model, xi.as_slice()).ok()?.amax() < 1e-12).then_some(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, StructuredInteraction};
    use approx::assert_relative_eq;

    fn scalar(beta: f64) -> Model {
        Model::new(ModelSpec::new(vec![6], 2, DMatrix::from_element(1, 1, beta))).unwrap()
    }

    #[test]
    fn conjugates_scalar() {
        let m = scalar(0.7);
        let nu = [0.25, 0.75];
        assert_relative_eq!(
            f_conjugate(&m, &nu).unwrap(),
            0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln(),
            epsilon = 1e-15
        );
        assert_relative_eq!(g_conjugate(&m, &nu), 0.35 * (0.0625 + 0.5625), epsilon = 1e-15);
        assert!(matches!(f_conjugate(&m, &[0.0, 1.0]), Err(Error::GridPointOutsideC(_))));
        assert!(matches!(f_conjugate(&m, &[0.3, 0.6]), Err(Error::GridPointOutsideC(_))));
    }

    #[test]
    fn dual_grid_stays_inside_c() {
        let m = Model::structured(vec![2, 5], 3, StructuredInteraction::new(0.3, 1.0).unwrap()).unwrap();
        let pts = dual_grid_points(
            &m,
            &DualGrid {
                resolution: 6,
                epsilon: 1e-6,
            },
        )
        .unwrap();
        assert_eq!(pts.len(), 28 * 28);
        assert!(pts.iter().all(|p| in_c(&m, p)));
        assert!(dual_grid_points(
            &m,
            &DualGrid {
                resolution: 6,
                epsilon: 0.0
            }
        )
        .is_err());
        assert!(dual_grid_points(
            &m,
            &DualGrid {
                resolution: 6,
                epsilon: 0.5
            }
        )
        .is_err());
    }

    #[test]
    fn scalar_suprema_agree() {
        // both sides equal −min φ = log 2 + β/4 at high temperature
        let beta = 0.6;
        let m = scalar(beta);
        let report = duality_check(
            &m,
            &PrimalGrid {
                lower: -0.05,
                upper: 0.6,
                resolution: 131,
            },
            &DualGrid {
                resolution: 400,
                epsilon: 1e-6,
            },
        )
        .unwrap();
        let target = 2f64.ln() + beta / 4.0;
        assert_relative_eq!(report.sup_dual, target, epsilon = 1e-12);
        assert!((report.sup_primal - target).abs() < 1e-6);
        assert!(report.gap.abs() < 1e-6);
        assert!(report.substitution_error < 1e-13);
        let b = report.bijection.unwrap();
        assert!(b.in_c && b.block_sum_error < 1e-13 && b.value_error < 1e-13);
    }

    #[test]
    fn gap_shrinks_under_refinement() {
        let m = Model::structured(vec![3, 5], 2, StructuredInteraction::new(0.4, 1.2).unwrap()).unwrap();
        let dual = DualGrid {
            resolution: 40,
            epsilon: 1e-6,
        };
        let gaps: Vec<f64> = [6, 11, 21, 41]
            .iter()
            .map(|&r| {
                duality_check(
                    &m,
                    &PrimalGrid {
                        lower: -0.05,
                        upper: 0.6,
                        resolution: r,
                    },
                    &dual,
                )
                .unwrap()
                .gap
                .abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
}
