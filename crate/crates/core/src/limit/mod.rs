//! Gaussian fluctuation limits: covariances, the rotation to non-degenerate
//! coordinates, the moderate-deviation rate and the smoothed density.

pub mod clt;
pub mod hs;
pub mod mdp;

pub use clt::{
    clt_covariance, clt_threshold, hessian_form, rotated_covariance, rotated_magnetization, rotation_operator,
    CltCovariance, CltOptions, RotationOperator,
};
pub use hs::{hs_density, hs_log_constant, hs_log_unnormalized, HsBox, HsDensity};
pub use mdp::{mdp_form_matrix, mdp_rate, MdpRate};
