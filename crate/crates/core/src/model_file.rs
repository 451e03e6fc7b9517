//! The model configuration file shared by every tool.
//!
//! TOML, either at the top level or inside a `[model]` table:
//!
//! ```toml
//! [model]
//! block_sizes = [25, 75]   # |S_1|, …, |S_s|
//! q = 5
//! n = 100                  # optional; must equal the sum of block_sizes
//! alpha = 0.5              # A = alpha·1 + (beta − alpha)·I …
//! beta = 1.0
//! # a = [[1.0, 0.5], [0.5, 1.0]]   # … or the full matrix, row-major
//! norm = 3.1               # optional; rescale A so that ‖√Γ𝒜√Γ‖₂ = norm
//! zero_interaction = false # optional; replace A by 0 (sampling only)
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelSpec, StructuredInteraction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub block_sizes: Vec<usize>,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
    #[serde(default)]
    pub zero_interaction: bool,
}

impl ModelFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))?;
        let section = match table.get("model") {
            Some(toml::Value::Table(t)) => t.clone(),
            Some(_) => return Err(Error::InvalidConfig("`model` must be a table".into())),
            None => table,
        };
        section
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        let s = self.block_sizes.len();
        let a = match (&self.a, self.alpha, self.beta) {
            (Some(rows), None, None) => {
                if rows.len() != s || rows.iter().any(|r| r.len() != s) {
                    return Err(Error::DimensionMismatch {
                        expected: s,
                        actual: rows.len(),
                    });
                }
                DMatrix::from_fn(s, s, |i, j| rows[i][j])
            }
            (None, Some(alpha), Some(beta)) => {
                if s == 1 {
                    // alpha never enters a single-block matrix
                    DMatrix::from_element(1, 1, beta)
                } else {
                    StructuredInteraction::new(alpha, beta)?.matrix(s)
                }
            }
            (None, None, Some(beta)) if s == 1 => DMatrix::from_element(1, 1, beta),
            _ => {
                return Err(Error::InvalidConfig(
                    "model needs either `a` or both `alpha` and `beta`".into(),
                ))
            }
        };
        let n = self.n.unwrap_or_else(|| self.block_sizes.iter().sum());
        Ok(ModelSpec {
            n,
            block_sizes: self.block_sizes.clone(),
            q: self.q,
            a,
        })
    }

    pub fn build(&self) -> Result<Model> {
        let mut model = Model::new(self.spec()?)?;
        if let Some(norm) = self.norm {
            model = model.with_norm(norm)?;
        }
        if self.zero_interaction {
            model = model.zero_interaction();
        }
        Ok(model)
    }
}
