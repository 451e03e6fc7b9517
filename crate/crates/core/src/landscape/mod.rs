//! The free-energy landscape `φ`: values and derivatives, the reduced
//! two-value family `Φ(t)`, critical points and the convex-duality check.

pub mod critical;
pub mod duality;
pub mod minimize;
pub mod phi;
pub mod reduced;

pub use critical::{critical_identity_checks, CriticalChecks};
pub use duality::{duality_check, BijectionCheck, DualGrid, DualityReport, PrimalGrid};
pub use minimize::{grid_minimize, hessian_certificate, GridMinimum, HessianCertificate};
pub use phi::{grad_phi, growth_radius, hessian_phi, phi, uniform_point, LandscapePoint};
pub use reduced::{
    contraction_bound, fixed_point_map, fixed_point_solve, reduced_grad, reduced_hessian, reduced_landscape,
    reduced_phi, xi_of_t, FixedPointResult, ReducedPoint,
};
