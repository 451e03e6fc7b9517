//! Block-spin Potts models: Gibbs sampling, exact laws, the free-energy
//! landscape and Gaussian fluctuation limits of the block magnetization.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csv;
pub mod error;
pub mod landscape;
pub mod limit;
pub mod linalg;
pub mod model;
pub mod model_file;
pub mod sampling;

pub use error::{Error, Result};
pub use model::{
    critical_thresholds, hamiltonian, interaction_norm, magnetization, magnetization_of, AsymptoticProportions,
    ColorCounts, MagnetizationVector, Model, ModelSpec, Regime, SpinConfiguration, StructuredInteraction, Thresholds,
};
pub use model_file::ModelFile;
