//! Limiting covariance of `√𝒮(m − 1/q)`, the rotation that removes its null
//! directions, and the rotated covariance.
//!
//! All formulas use the finite-`N` proportions `γ_k = |S_k|/N`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{centering, kron, kron_identity, max_abs_diff, min_eigenvalue, ones, sym_eigenvalues, sym_inverse};
use crate::model::{
    classify, fixed_point_threshold, interaction_norm, scaled_interaction, zeta, MagnetizationVector, Model,
};

/// Tolerance of the agreement between the direct and Hessian forms of `Σ`.
pub const HESSIAN_FORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CltOptions {
    /// The caller has certified a unique minimizer with positive definite
    /// Hessian, so the norm threshold need not hold.
    pub certified_minimizer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltCovariance {
    pub sigma: DMatrix<f64>,
    /// Norm threshold satisfied, or minimizer certified by the caller.
    pub regime_checked: bool,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub gamma: DVector<f64>,
    pub norm: f64,
    /// `ζ_q` for equal blocks with a structured interaction, `4(q−1)/q` otherwise.
    pub threshold: f64,
    /// Condition number of `I + B⊗Q`.
    pub inner_condition: f64,
    /// `max |Σ − Γ^{-1/2}(H^{-1} − 𝒜^{-1})Γ^{-1/2}|`.
    pub hessian_discrepancy: f64,
}

/// Threshold under which the CLT is known to hold for this model.
pub fn clt_threshold(model: &Model) -> Result<f64> {
    if model.is_equal_blocks_structured() {
        zeta(model.q())
    } else {
        fixed_point_threshold(model.q())
    }
}

/// `Σ = G⁻¹((I + B⊗Q)⁻¹ − I)` with `B = √Γ A √Γ`, `G = B⊗I_q` and
/// `Q = J/q² − I/q`. Outside the regime the formula is still evaluated, with
/// a warning.
pub fn clt_covariance(model: &Model, options: CltOptions) -> Result<CltCovariance> {
    let (s, q) = (model.s(), model.q());
    let qf = q as f64;
    let norm = interaction_norm(model);
    let threshold = clt_threshold(model)?;
    let regime_checked = norm < threshold || options.certified_minimizer;
    if !regime_checked {
        log::warn!(
            "interaction norm {norm} is not below the threshold {threshold} ({}); the limiting covariance may be meaningless",
            classify(norm, q)?
        );
    }

    let b = scaled_interaction(model);
    let q_mat = ones(q, q) / (qf * qf) - DMatrix::identity(q, q) / qf;
    let inner = DMatrix::identity(s * q, s * q) + kron(&b, &q_mat);
    let inner_inv = sym_inverse(&inner)?;
    let g_inv = kron_identity(&sym_inverse(&b)?.inverse, q);
    let mut sigma = g_inv * (inner_inv.inverse - DMatrix::identity(s * q, s * q));
    sigma = (&sigma + sigma.transpose()) * 0.5;

    let hessian_discrepancy = match hessian_form(model) {
        Ok(alt) => max_abs_diff(&sigma, &alt),
        Err(_) => f64::INFINITY,
    };
    if hessian_discrepancy > HESSIAN_FORM_TOLERANCE * sigma.amax().max(1.0) {
        log::warn!("direct and Hessian forms of the covariance differ by {hessian_discrepancy:e}");
    }

    Ok(CltCovariance {
        eigenvalues: sym_eigenvalues(&sigma),
        sigma,
        regime_checked,
        gamma: model.gamma().clone(),
        norm,
        threshold,
        inner_condition: inner_inv.condition,
        hessian_discrepancy,
    })
}

/// `Γ^{-1/2}(H⁻¹ − 𝒜⁻¹)Γ^{-1/2}` with the Hessian at the uniform point
/// `H = A⊗I_q − (A·diag(γ)·A/q)⊗(I_q − J/q)`.
pub fn hessian_form(model: &Model) -> Result<DMatrix<f64>> {
    let q = model.q();
    let a = model.a();
    let gd = DMatrix::from_diagonal(model.gamma());
    let h = kron_identity(a, q) - kron(&(a * &gd * a / q as f64), &centering(q));
    let h_inv = sym_inverse(&h)?.inverse;
    let a_inv = kron_identity(&sym_inverse(a)?.inverse, q);
    let scale = kron_identity(&DMatrix::from_diagonal(&model.gamma().map(|g| g.powf(-0.5))), q);
    let m = &scale * (h_inv - a_inv) * &scale;
    Ok((&m + m.transpose()) * 0.5)
}

/// `R̃ ∈ SO(q)` mapping `1_q/√q` to `e_q`, the projection `P̃` onto the first
/// `q − 1` coordinates, and `ℛ = I_s⊗P̃R̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationOperator {
    pub r_tilde: DMatrix<f64>,
    pub p_tilde: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl RotationOperator {
    pub fn new(s: usize, q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidQ(q));
        }
        let qf = q as f64;
        let sq = qf.sqrt();
        let off = 1.0 / (qf + sq);
        let r_tilde = DMatrix::from_fn(q, q, |i, j| {
            if i == q - 1 {
                1.0 / sq
            } else if j == q - 1 {
                -1.0 / sq
            } else if i == j {
                1.0 - off
            } else {
                -off
            }
        });
        let p_tilde = DMatrix::from_fn(q - 1, q, |i, j| if i == j { 1.0 } else { 0.0 });
        let r = kron(&DMatrix::identity(s, s), &(&p_tilde * &r_tilde));
        Ok(RotationOperator { r_tilde, p_tilde, r })
    }
}

pub fn rotation_operator(model: &Model) -> RotationOperator {
    RotationOperator::new(model.s(), model.q()).expect("model has q >= 2")
}

/// `(qI − √Γ A √Γ)⁻¹ ⊗ I_{q−1}`.
pub fn rotated_covariance(model: &Model) -> Result<DMatrix<f64>> {
    let s = model.s();
    let c = DMatrix::identity(s, s) * model.q() as f64 - scaled_interaction(model);
    let min_eigenvalue = min_eigenvalue(&c);
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue });
    }
    Ok(kron_identity(&sym_inverse(&c)?.inverse, model.q() - 1))
}

/// `m̂ = ℛ√𝒮(m − 1/q)`.
pub fn rotated_magnetization(model: &Model, m: &MagnetizationVector) -> Result<DVector<f64>> {
    if m.s() != model.s() || m.q() != model.q() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: m.values().len(),
        });
    }
    let q = model.q();
    let centred = DVector::from_iterator(
        model.dim(),
        m.values()
            .iter()
            .enumerate()
            .map(|(i, v)| (model.block_sizes()[i / q] as f64).sqrt() * (v - 1.0 / q as f64)),
    );
    Ok(rotation_operator(model).r * centred)
}
