//! Small dense helpers on top of nalgebra: Kronecker products with identities,
//! symmetric spectral norms and eigen-based inverses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Refuse to invert symmetric matrices whose condition number exceeds this.
pub const MAX_CONDITION: f64 = 1e12;

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `x ⊗ I_q`.
pub fn kron_identity(x: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    x.kronecker(&DMatrix::identity(q, q))
}

/// `I_s ⊗ x`.
pub fn identity_kron(s: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::<f64>::identity(s, s).kronecker(x)
}

pub fn ones(rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_element(rows, cols, 1.0)
}

/// `I_q - 1_{q×q}/q`, the projection onto vectors with zero color sum.
pub fn centering(q: usize) -> DMatrix<f64> {
    DMatrix::identity(q, q) - ones(q, q) / q as f64
}

pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

/// Spectral norm of a symmetric matrix, `max |λ|`.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).into_iter().fold(0.0, |acc, l| acc.max(l.abs()))
}

/// Largest entrywise deviation from symmetry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Inverse of a symmetric matrix through its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymInverse {
    pub inverse: DMatrix<f64>,
    pub condition: f64,
    pub min_eigenvalue: f64,
}

pub fn sym_inverse(m: &DMatrix<f64>) -> Result<SymInverse> {
    let eig = m.clone().symmetric_eigen();
    let abs_max = eig.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let abs_min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()));
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if abs_min > 0.0 {
        abs_max / abs_min
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularInnerMatrix { condition });
    }
    let inv_vals = eig.eigenvalues.map(|l| 1.0 / l);
    let inverse = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok(SymInverse {
        inverse,
        condition,
        min_eigenvalue,
    })
}

/// Max entrywise absolute difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `log Σ exp(x_i)` with max shift.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Shifted softmax written into `out`; returns the log-sum-exp of `xs`.
pub fn softmax_into(xs: &[f64], out: &mut [f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, x) in out.iter_mut().zip(xs) {
        *o = (x - m).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    m + total.ln()
}
