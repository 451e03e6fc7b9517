//! Identities satisfied by every critical point of `φ`.

use crate::error::{Error, Result};
use crate::landscape::phi::{apply_a, grad_phi, phi};
use crate::linalg::log_sum_exp;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalChecks {
    pub gradient_residual: f64,
    /// (a) `max |ξ_kc − γ_k·softmax(𝒜ξ)_kc|`.
    pub softmax_error: f64,
    /// (b) Largest spread over `c` of `(𝒜ξ)_kc − log ξ_kc` within a block.
    pub log_identity_spread: f64,
    /// (c) `|φ(ξ) − relative-entropy form|`.
    pub relative_entropy_error: f64,
    /// (d) Number of distinct values per block.
    pub distinct_values: Vec<usize>,
    /// (d) Blocks ordered by block 1's color order are non-increasing and share
    /// its pattern of equal neighbours.
    pub shared_ordering: bool,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn critical_identity_checks(model: &Model, xi: &[f64], tolerance: f64) -> Result<CriticalChecks> {
    let residual = grad_phi(model, xi)?.amax();
    if residual > tolerance {
        return Err(Error::NotCritical { residual, tolerance });
    }
    let (s, q) = (model.s(), model.q());
    let gamma = model.gamma();
    let y = apply_a(model, xi);

    let mut softmax_error = 0.0f64;
    let mut spread = 0.0f64;
    let mut entropy_form = 0.0;
    for k in 0..s {
        let yk = &y[k * q..(k + 1) * q];
        let xk = &xi[k * q..(k + 1) * q];
        let lse = log_sum_exp(yk);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in 0..q {
            softmax_error = softmax_error.max((xk[c] - gamma[k] * (yk[c] - lse).exp()).abs());
            let inv = yk[c] - xk[c].ln();
            lo = lo.min(inv);
            hi = hi.max(inv);
            entropy_form += xk[c] * (lse - xk[c].ln());
        }
        spread = spread.max(hi - lo);
    }
    let h: f64 = gamma.iter().map(|g| g * g.ln()).sum();
    let relative_entropy_error = (phi(model, xi)? - (-0.5 * entropy_form - 0.5 * h)).abs();

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| xi[b].total_cmp(&xi[a]));
    let pattern = |k: usize| -> Vec<bool> {
        (1..q)
            .map(|i| (xi[k * q + order[i - 1]] - xi[k * q + order[i]]).abs() <= tolerance)
            .collect()
    };
    let reference = pattern(0);
    let mut shared_ordering = true;
    let mut distinct_values = Vec::with_capacity(s);
    for k in 0..s {
        let sorted: Vec<f64> = order.iter().map(|&c| xi[k * q + c]).collect();
        shared_ordering &= sorted.windows(2).all(|w| w[0] >= w[1] - tolerance);
        shared_ordering &= pattern(k) == reference;
        distinct_values.push(1 + pattern(k).iter().filter(|eq| !**eq).count());
    }

    let passed = softmax_error <= tolerance
        && spread <= tolerance
        && relative_entropy_error <= tolerance
        && shared_ordering
        && distinct_values.iter().all(|&d| d <= 2);
    Ok(CriticalChecks {
        gradient_residual: residual,
        softmax_error,
        log_identity_spread: spread,
        relative_entropy_error,
        distinct_values,
        shared_ordering,
        tolerance,
        passed,
    })
}
