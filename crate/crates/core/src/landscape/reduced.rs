//! `φ` restricted to the two-value family
//! `ξ(t) = γt⊗e₁ + γ(1 − t)⊗(1/q)1_q`, `t ∈ [0,1]^s`, and the fixed-point
//! map whose fixed points are its critical points.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landscape::phi::phi;
use crate::model::{interaction_norm, Model};

pub const MAX_GRID_DIMENSION: usize = 4;
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_FIXED_POINT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

fn check_t(model: &Model, t: &[f64]) -> Result<()> {
    if t.len() != model.s() {
        return Err(Error::DimensionMismatch {
            expected: model.s(),
            actual: t.len(),
        });
    }
    Ok(())
}

pub fn xi_of_t(model: &Model, t: &[f64]) -> Result<Vec<f64>> {
    check_t(model, t)?;
    let q = model.q();
    let qf = q as f64;
    let mut xi = vec![0.0; model.dim()];
    for (k, g) in model.gamma().iter().enumerate() {
        let rest = g * (1.0 - t[k]) / qf;
        xi[k * q] = g * t[k] + rest;
        for c in 1..q {
            xi[k * q + c] = rest;
        }
    }
    Ok(xi)
}

/// `M = SAS/N² = ΓAΓ`.
fn m_matrix(model: &Model) -> DMatrix<f64> {
    let g = DMatrix::from_diagonal(model.gamma());
    &g * model.a() * &g
}

/// `z_k = Σ_j A_kj γ_j t_j`.
fn z_of_t(model: &Model, t: &[f64]) -> DVector<f64> {
    let gt = DVector::from_iterator(t.len(), t.iter().zip(model.gamma().iter()).map(|(a, b)| a * b));
    model.a() * gt
}

/// Closed form of `Φ(t) = φ(ξ(t))`.
pub fn reduced_phi(model: &Model, t: &[f64]) -> Result<f64> {
    check_t(model, t)?;
    let qf = model.q() as f64;
    let m = m_matrix(model);
    let tv = DVector::from_column_slice(t);
    let ones = DVector::from_element(t.len(), 1.0);
    let mt = &m * &tv;
    let z = z_of_t(model, t);
    let log_terms: f64 = model
        .gamma()
        .iter()
        .zip(z.iter())
        .map(|(g, zk)| g * (1.0 + (qf - 1.0) * (-zk).exp()).ln())
        .sum();
    Ok((qf - 1.0) / (2.0 * qf) * tv.dot(&mt)
        - ones.dot(&(&m * &ones)) / (2.0 * qf)
        - (qf - 1.0) / qf * mt.dot(&ones)
        - log_terms)
}

/// `g_k = q / ((q − 1) + e^{z_k})`.
fn g_of_z(q: f64, z: &DVector<f64>) -> DVector<f64> {
    z.map(|zk| q / ((q - 1.0) + zk.exp()))
}

/// `∇Φ(t) = ((q−1)/q)·M·(g(z) − (1 − t))`.
pub fn reduced_grad(model: &Model, t: &[f64]) -> Result<DVector<f64>> {
    check_t(model, t)?;
    let qf = model.q() as f64;
    let g = g_of_z(qf, &z_of_t(model, t));
    let inner = DVector::from_iterator(t.len(), g.iter().zip(t).map(|(gk, tk)| gk - (1.0 - tk)));
    Ok(m_matrix(model) * inner * ((qf - 1.0) / qf))
}

pub fn reduced_hessian(model: &Model, t: &[f64]) -> Result<DMatrix<f64>> {
    check_t(model, t)?;
    let s = model.s();
    let qf = model.q() as f64;
    let z = z_of_t(model, t);
    let dg = z.map(|zk| -qf * zk.exp() / ((qf - 1.0) + zk.exp()).powi(2));
    let ag = model.a() * DMatrix::from_diagonal(model.gamma());
    let inner = DMatrix::identity(s, s) + DMatrix::from_diagonal(&dg) * ag;
    let mut h = m_matrix(model) * inner * ((qf - 1.0) / qf);
    let ht = h.transpose();
    h = (h + ht) * 0.5;
    Ok(h)
}

/// `h(t) = 1 − g(z(t))`; its fixed points are the zeros of `∇Φ`.
pub fn fixed_point_map(model: &Model, t: &[f64]) -> Result<DVector<f64>> {
    check_t(model, t)?;
    let qf = model.q() as f64;
    Ok(g_of_z(qf, &z_of_t(model, t)).map(|g| 1.0 - g))
}

/// Lipschitz bound `q/(4(q−1))·‖√Γ A √Γ‖₂` of the rescaled map.
pub fn contraction_bound(model: &Model) -> f64 {
    let qf = model.q() as f64;
    qf / (4.0 * (qf - 1.0)) * interaction_norm(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPoint {
    pub t: Vec<f64>,
    pub xi_of_t: Vec<f64>,
    pub value: f64,
}

/// Uniform grid with `resolution` points per axis over `[0,1]^s`, in
/// row-major order (last coordinate fastest).
pub fn unit_grid(s: usize, resolution: usize) -> Result<Vec<Vec<f64>>> {
    if s > MAX_GRID_DIMENSION {
        return Err(Error::DimensionTooLarge {
            dimension: s,
            limit: MAX_GRID_DIMENSION,
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid resolution {resolution} must be at least 2"
        )));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let total = resolution.pow(s as u32);
    Ok((0..total)
        .map(|mut idx| {
            let mut t = vec![0.0; s];
            for k in (0..s).rev() {
                t[k] = (idx % resolution) as f64 * step;
                idx /= resolution;
            }
            t
        })
        .collect())
}

/// `Φ` on the full grid. About a thousand points, always including the
/// corners, are re-evaluated through `φ(ξ(t))`; a mismatch above
/// `1e-10·max(1, |Φ|)` is an error.
pub fn reduced_landscape(model: &Model, grid_resolution: usize) -> Result<Vec<ReducedPoint>> {
    let grid = unit_grid(model.s(), grid_resolution)?;
    let stride = (grid.len() / 1000).max(1);
    grid.into_par_iter()
        .enumerate()
        .map(|(i, t)| {
            let value = reduced_phi(model, &t)?;
            let xi = xi_of_t(model, &t)?;
            let corner = t.iter().all(|&v| v == 0.0 || v == 1.0);
            if i % stride == 0 || corner {
                let direct = phi(model, &xi)?;
                let diff = (direct - value).abs();
                let tol = CROSS_CHECK_TOLERANCE * value.abs().max(1.0);
                if diff > tol {
                    return Err(Error::CrossCheckFailed {
                        what: format!("reduced landscape at t = {t:?}"),
                        discrepancy: diff,
                        tolerance: tol,
                    });
                }
            }
            Ok(ReducedPoint { t, xi_of_t: xi, value })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    pub t_star: DVector<f64>,
    pub iterations: usize,
    /// `‖t − h(t)‖_∞` at return.
    pub residual: f64,
    pub contraction_bound: f64,
    pub certified: bool,
}

/// Iterates `t ← h(t)` from `t0` until the sup-norm residual drops below `tolerance`.
pub fn fixed_point_solve(model: &Model, t0: &[f64], tolerance: f64, max_iterations: usize) -> Result<FixedPointResult> {
    check_t(model, t0)?;
    if t0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidConfig(format!("start {t0:?} outside [0,1]^s")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance {tolerance} must be positive")));
    }
    let bound = contraction_bound(model);
    let certified = bound < 1.0;
    let mut t = DVector::from_column_slice(t0);
    let mut iterations = 0;
    loop {
        let next = fixed_point_map(model, t.as_slice())?;
        let residual = (&t - &next).amax();
        if residual < tolerance {
            return Ok(FixedPointResult {
                t_star: t,
                iterations,
                residual,
                contraction_bound: bound,
                certified,
            });
        }
        if iterations == max_iterations {
            return Err(Error::NoConvergence {
                iterations,
                residual,
                certified,
            });
        }
        t = next;
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::phi::{grad_phi, uniform_point};
    use crate::model::{ModelSpec, StructuredInteraction};
    use approx::assert_relative_eq;

    fn two_block_model(norm: f64) -> Model {
        Model::structured(vec![25, 75], 5, StructuredInteraction::new(0.5, 1.0).unwrap())
            .unwrap()
            .with_norm(norm)
            .unwrap()
    }

    #[test]
    fn closed_form_matches_direct_on_full_grid() {
        for model in [
            two_block_model(3.65),
            Model::structured(vec![2, 3, 6], 3, StructuredInteraction::new(0.2, 0.9).unwrap()).unwrap(),
        ] {
            for t in unit_grid(model.s(), 11).unwrap() {
                let direct = phi(&model, &xi_of_t(&model, &t).unwrap()).unwrap();
                assert!((reduced_phi(&model, &t).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn origin_is_uniform_point() {
        let m = two_block_model(3.1);
        assert_eq!(xi_of_t(&m, &[0.0, 0.0]).unwrap(), uniform_point(&m));
        assert_eq!(fixed_point_map(&m, &[0.0, 0.0]).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn xi_of_t_structure() {
        let m = two_block_model(3.8);
        let xi = xi_of_t(&m, &[0.3, 0.9]).unwrap();
        for k in 0..2 {
            let block = &xi[k * 5..(k + 1) * 5];
            assert_relative_eq!(block.iter().sum::<f64>(), m.gamma()[k], epsilon = 1e-15);
            assert!(block[1..].iter().all(|v| *v == block[1]));
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let m = two_block_model(3.65);
        let t = [0.37, 0.61];
        let g = reduced_grad(&m, &t).unwrap();
        let h = reduced_hessian(&m, &t).unwrap();
        let eps = 1e-5;
        for i in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[i] += eps;
            tm[i] -= eps;
            let fd = (reduced_phi(&m, &tp).unwrap() - reduced_phi(&m, &tm).unwrap()) / (2.0 * eps);
            assert_relative_eq!(g[i], fd, max_relative = 1e-7, epsilon = 1e-10);
            let gd = (reduced_grad(&m, &tp).unwrap() - reduced_grad(&m, &tm).unwrap()) / (2.0 * eps);
            for j in 0..2 {
                assert_relative_eq!(h[(j, i)], gd[j], max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn certified_model_converges_to_zero_from_all_starts() {
        let m = two_block_model(2.9);
        let res = fixed_point_solve(&m, &[1.0, 1.0], 1e-12, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(res.certified);
        assert!(res.t_star.amax() < 1e-8);
        for t0 in unit_grid(2, 3).unwrap() {
            let res = fixed_point_solve(&m, &t0, 1e-12, DEFAULT_MAX_ITERATIONS).unwrap();
            assert!(res.t_star.amax() < 1e-8 && res.residual < 1e-12);
        }
    }

    #[test]
    fn low_temperature_nonzero_fixed_point() {
        let m = two_block_model(3.8);
        let res = fixed_point_solve(&m, &[0.8, 0.8], 1e-12, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(!res.certified);
        assert!(res.t_star.amin() > 0.1, "t* = {}", res.t_star);
        let grad = reduced_grad(&m, res.t_star.as_slice()).unwrap();
        assert!(grad.amax() < 1e-10);
        let xi = xi_of_t(&m, res.t_star.as_slice()).unwrap();
        assert!(grad_phi(&m, &xi).unwrap().amax() < 1e-10);
    }

    #[test]
    fn exhausting_iterations_is_an_error() {
        let m = Model::new(ModelSpec::new(vec![4], 3, DMatrix::from_element(1, 1, 5.0))).unwrap();
        let err = fixed_point_solve(&m, &[0.5], 1e-14, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::NoConvergence {
                iterations: 2,
                certified: false,
                ..
            }
        ));
        assert!(fixed_point_solve(&m, &[1.5], 1e-12, 10).is_err());
    }

    #[test]
    fn grid_limits() {
        assert!(matches!(unit_grid(5, 3), Err(Error::DimensionTooLarge { .. })));
        assert!(unit_grid(2, 1).is_err());
        assert_eq!(unit_grid(2, 3).unwrap().len(), 9);
    }
}
