//! The free-energy function `φ(ξ) = ½ ξᵀ𝒜ξ − Σ_k γ_k·log Σ_c exp((𝒜ξ)_{k,c})`
//! with its gradient and Hessian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, softmax_into, sym_spectral_norm};
use crate::model::Model;

/// `y = 𝒜ξ`, computed blockwise without forming `A⊗I_q`.
pub fn apply_a(model: &Model, xi: &[f64]) -> Vec<f64> {
    let (s, q) = (model.s(), model.q());
    let a = model.a();
    let mut y = vec![0.0; s * q];
    for k in 0..s {
        for j in 0..s {
            let akj = a[(k, j)];
            for c in 0..q {
                y[k * q + c] += akj * xi[j * q + c];
            }
        }
    }
    y
}

fn check_dim(model: &Model, xi: &[f64]) -> Result<()> {
    if xi.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: xi.len(),
        });
    }
    Ok(())
}

fn value_with(model: &Model, xi: &[f64], y: &[f64], w: &mut [f64]) -> f64 {
    let q = model.q();
    let quad: f64 = xi.iter().zip(y).map(|(a, b)| a * b).sum();
    let mut entropy = 0.0;
    for (k, g) in model.gamma().iter().enumerate() {
        entropy += g * softmax_into(&y[k * q..(k + 1) * q], w);
    }
    0.5 * quad - entropy
}

pub fn phi(model: &Model, xi: &[f64]) -> Result<f64> {
    check_dim(model, xi)?;
    let y = apply_a(model, xi);
    Ok(value_with(model, xi, &y, &mut vec![0.0; model.q()]))
}

/// `u[k][c] = γ_k·softmax(y_k)_c`.
fn weighted_softmax(model: &Model, y: &[f64]) -> Vec<f64> {
    let q = model.q();
    let mut u = vec![0.0; y.len()];
    for (k, g) in model.gamma().iter().enumerate() {
        let block = &mut u[k * q..(k + 1) * q];
        softmax_into(&y[k * q..(k + 1) * q], block);
        block.iter_mut().for_each(|v| *v *= g);
    }
    u
}

/// `∇φ(ξ) = 𝒜(ξ − u)`.
pub fn grad_phi(model: &Model, xi: &[f64]) -> Result<DVector<f64>> {
    check_dim(model, xi)?;
    let y = apply_a(model, xi);
    let u = weighted_softmax(model, &y);
    let diff: Vec<f64> = xi.iter().zip(&u).map(|(a, b)| a - b).collect();
    Ok(DVector::from_vec(apply_a(model, &diff)))
}

/// `H_φ(ξ) = 𝒜 − 𝒜D𝒜` with `D = blockdiag_k γ_k·(diag w_k − w_k w_kᵀ)`.
pub fn hessian_phi(model: &Model, xi: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(model, xi)?;
    let (s, q) = (model.s(), model.q());
    let y = apply_a(model, xi);
    let u = weighted_softmax(model, &y);
    let a_cal = model.a_cal();
    let mut d = DMatrix::zeros(s * q, s * q);
    for (k, g) in model.gamma().iter().enumerate() {
        for c in 0..q {
            let wc = u[k * q + c] / g;
            for e in 0..q {
                let we = u[k * q + e] / g;
                let kron = if c == e { wc } else { 0.0 };
                d[(k * q + c, k * q + e)] = g * (kron - wc * we);
            }
        }
    }
    let mut h = a_cal - a_cal * d * a_cal;
    let ht = h.transpose();
    h = (h + ht) * 0.5;
    Ok(h)
}

/// `ξ* = 𝒮1/(qN)`, the uniform critical point.
pub fn uniform_point(model: &Model) -> Vec<f64> {
    let q = model.q();
    (0..model.dim()).map(|i| model.gamma()[i / q] / q as f64).collect()
}

/// Radius beyond which `φ(ξ) ≥ ⅓ξᵀ𝒜ξ`.
///
/// From `lse ≤ max + log q` and `‖𝒜ξ‖_∞ ≤ ‖A‖₂‖ξ‖`, the bound holds once
/// `(λ_min/6)r² − ‖A‖₂r − log q ≥ 0`.
pub fn growth_radius(model: &Model) -> f64 {
    let lambda = min_eigenvalue(model.a());
    let norm = sym_spectral_norm(model.a());
    let c = lambda / 6.0;
    let logq = (model.q() as f64).ln();
    (norm + (norm * norm + 4.0 * c * logq).sqrt()) / (2.0 * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapePoint {
    pub xi: DVector<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

impl LandscapePoint {
    pub fn evaluate(model: &Model, xi: &[f64], with_hessian: bool) -> Result<Self> {
        Ok(LandscapePoint {
            xi: DVector::from_column_slice(xi),
            value: phi(model, xi)?,
            gradient: grad_phi(model, xi)?,
            hessian: if with_hessian {
                Some(hessian_phi(model, xi)?)
            } else {
                None
            },
        })
    }
}
