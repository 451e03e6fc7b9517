//! Quadratic rate function of the moderate deviations of `ℛ𝒮^θ(m − 1/q)`:
//! `Λ(t) = ½tᵀ((q·D^{1−2θ} − D^{1−θ}AD^{1−θ})⊗I_{q−1})t` with `D = diag(γ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::kron_identity;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpRate {
    pub theta: f64,
    pub matrix: DMatrix<f64>,
}

/// Form matrix of `Λ` for `θ ∈ [0, 1/2]`; the endpoints are allowed so the
/// limits can be compared with the CLT and large-deviation scales.
pub fn mdp_form_matrix(model: &Model, theta: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=0.5).contains(&theta) {
        return Err(Error::InvalidTheta(theta));
    }
    let s = model.s();
    let gamma = model.gamma();
    let q = model.q() as f64;
    let d1 = gamma.map(|g| g.powf(1.0 - theta));
    let inner = DMatrix::from_fn(s, s, |i, j| {
        let diag = if i == j {
            q * gamma[i].powf(1.0 - 2.0 * theta)
        } else {
            0.0
        };
        diag - d1[i] * model.a()[(i, j)] * d1[j]
    });
    Ok(kron_identity(&inner, model.q() - 1))
}

impl MdpRate {
    /// Requires `0 < θ < 1/2`.
    pub fn new(model: &Model, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidTheta(theta));
        }
        Ok(MdpRate {
            theta,
            matrix: mdp_form_matrix(model, theta)?,
        })
    }

    pub fn value(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                actual: t.len(),
            });
        }
        let t = DVector::from_column_slice(t);
        Ok(0.5 * t.dot(&(&self.matrix * &t)))
    }
}

pub fn mdp_rate(model: &Model, theta: f64, t: &[f64]) -> Result<f64> {
    MdpRate::new(model, theta)?.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::clt::rotated_covariance;
    use crate::linalg::max_abs_diff;
    use crate::model::{ModelSpec, StructuredInteraction};
    use approx::assert_relative_eq;

    #[test]
    fn curie_weiss_rate() {
        let beta = 1.3;
        let m = Model::new(ModelSpec::new(vec![7], 2, DMatrix::from_element(1, 1, beta))).unwrap();
        for theta in [0.1, 0.25, 0.4] {
            assert_relative_eq!(
                mdp_rate(&m, theta, &[0.8]).unwrap(),
                (2.0 - beta) * 0.64 / 2.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn theta_range() {
        let m = Model::new(ModelSpec::new(vec![7], 3, DMatrix::from_element(1, 1, 1.0))).unwrap();
        for bad in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(matches!(MdpRate::new(&m, bad), Err(Error::InvalidTheta(_))));
        }
        assert!(mdp_form_matrix(&m, 0.0).is_ok() && mdp_form_matrix(&m, 0.5).is_ok());
        assert!(mdp_form_matrix(&m, 0.6).is_err());
        assert!(mdp_rate(&m, 0.3, &[1.0]).is_err());
    }

    #[test]
    fn endpoints() {
        let m = Model::structured(vec![2, 7], 3, StructuredInteraction::new(0.5, 1.5).unwrap()).unwrap();
        let half = mdp_form_matrix(&m, 0.5).unwrap();
        let inv = rotated_covariance(&m).unwrap().try_inverse().unwrap();
        assert!(max_abs_diff(&half, &inv) < 1e-9);
        let zero = mdp_form_matrix(&m, 0.0).unwrap();
        assert!(max_abs_diff(&zero, &inv) > 1e-3);
        let rate = MdpRate::new(&m, 0.2).unwrap();
        assert_eq!(rate.value(&[0.0; 4]).unwrap(), 0.0);
        assert!(rate.value(&[0.1, -0.2, 0.3, 0.05]).unwrap() > 0.0);
    }
}
