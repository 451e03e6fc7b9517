//! The block spin Potts model: blocks of sites, `q` colors and an `s × s`
//! interaction matrix between blocks.
//!
//! Color and block indices are 0-based inside the crate. Spin values in a
//! [`SpinConfiguration`] are 1-based (`1..=q`). Vectors in `R^{sq}` use the
//! row-major double index `(k, c) ↦ k·q + c`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Entrywise symmetry tolerance for the interaction matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative gate for positive definiteness: `λ_min > PD_REL_TOL · ‖A‖₂`.
pub const PD_REL_TOL: f64 = 1e-12;

/// Raw model description, validated by [`Model::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub q: usize,
    pub a: DMatrix<f64>,
}

impl ModelSpec {
    /// Spec with `n` taken as the sum of the block sizes.
    pub fn new(block_sizes: Vec<usize>, q: usize, a: DMatrix<f64>) -> Self {
        let n = block_sizes.iter().sum();
        ModelSpec { n, block_sizes, q, a }
    }
}

/// `A_{α,β} = α·1_{s×s} + (β−α)·I_s`: `β` inside a block, `α` across blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuredInteraction {
    pub alpha: f64,
    pub beta: f64,
}

impl StructuredInteraction {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < beta && beta.is_finite()) {
            return Err(Error::InvalidInteraction { alpha, beta });
        }
        Ok(StructuredInteraction { alpha, beta })
    }

    pub fn matrix(&self, s: usize) -> DMatrix<f64> {
        DMatrix::from_fn(s, s, |i, j| if i == j { self.beta } else { self.alpha })
    }
}

/// A validated model with the Kronecker-lifted matrices precomputed.
#[derive(Debug, Clone)]
pub struct Model {
    n: usize,
    q: usize,
    block_sizes: Vec<usize>,
    a: DMatrix<f64>,
    gamma: DVector<f64>,
    block_of_site: Vec<usize>,
    s_cal: DMatrix<f64>,
    a_cal: DMatrix<f64>,
    gamma_cal: DMatrix<f64>,
    zero_interaction: bool,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let ModelSpec { n, block_sizes, q, a } = spec;
        if q < 2 {
            return Err(Error::InvalidQ(q));
        }
        if block_sizes.is_empty() {
            return Err(Error::BlockSizeMismatch {
                block_sizes,
                reason: "at least one block is required".into(),
            });
        }
        if block_sizes.contains(&0) {
            return Err(Error::BlockSizeMismatch {
                block_sizes,
                reason: "every block must contain at least one site".into(),
            });
        }
        let total: usize = block_sizes.iter().sum();
        if total != n {
            return Err(Error::BlockSizeMismatch {
                block_sizes,
                reason: format!("sizes sum to {total} but N = {n}"),
            });
        }
        let s = block_sizes.len();
        if a.nrows() != s || a.ncols() != s {
            return Err(Error::DimensionMismatch {
                expected: s,
                actual: if a.nrows() != s { a.nrows() } else { a.ncols() },
            });
        }
        validate_interaction(&a)?;
        Ok(Self::assemble(n, q, block_sizes, a, false))
    }

    fn assemble(n: usize, q: usize, block_sizes: Vec<usize>, a: DMatrix<f64>, zero: bool) -> Self {
        let nf = n as f64;
        let gamma = DVector::from_iterator(block_sizes.len(), block_sizes.iter().map(|&b| b as f64 / nf));
        let block_of_site = block_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &b)| std::iter::repeat_n(k, b))
            .collect();
        let s_diag = DMatrix::from_diagonal(&DVector::from_iterator(
            block_sizes.len(),
            block_sizes.iter().map(|&b| b as f64),
        ));
        let s_cal = linalg::kron_identity(&s_diag, q);
        let a_cal = linalg::kron_identity(&a, q);
        let gamma_cal = linalg::kron_identity(&linalg::diag(&gamma), q);
        Model {
            n,
            q,
            block_sizes,
            a,
            gamma,
            block_of_site,
            s_cal,
            a_cal,
            gamma_cal,
            zero_interaction: zero,
        }
    }

    /// Convenience constructor for the structured matrix `A_{α,β}`.
    pub fn structured(block_sizes: Vec<usize>, q: usize, interaction: StructuredInteraction) -> Result<Self> {
        let a = interaction.matrix(block_sizes.len());
        Model::new(ModelSpec::new(block_sizes, q, a))
    }

    /// The same blocks and colors with no interaction at all (`A = 0`).
    ///
    /// Only the sampling and Hamiltonian code is meaningful for this model;
    /// formulas that invert `A` report a singular matrix.
    pub fn zero_interaction(&self) -> Model {
        let s = self.s();
        Self::assemble(self.n, self.q, self.block_sizes.clone(), DMatrix::zeros(s, s), true)
    }

    /// `λ·A`, revalidated. `λ = 0` yields [`Model::zero_interaction`].
    pub fn scaled(&self, lambda: f64) -> Result<Model> {
        if lambda == 0.0 {
            return Ok(self.zero_interaction());
        }
        Model::new(ModelSpec {
            n: self.n,
            block_sizes: self.block_sizes.clone(),
            q: self.q,
            a: &self.a * lambda,
        })
    }

    /// Rescale `A` so that [`interaction_norm`] equals `target`.
    pub fn with_norm(&self, target: f64) -> Result<Model> {
        let current = interaction_norm(self);
        if !(target > 0.0) || current == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "cannot rescale interaction norm {current} to {target}"
            )));
        }
        self.scaled(target / current)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn s(&self) -> usize {
        self.block_sizes.len()
    }
    /// Dimension `s·q` of magnetization and landscape vectors.
    pub fn dim(&self) -> usize {
        self.s() * self.q
    }
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    /// `γ_k = |S_k|/N`.
    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }
    pub fn proportions(&self) -> AsymptoticProportions {
        AsymptoticProportions {
            gamma: self.gamma.iter().copied().collect(),
        }
    }
    pub fn block_of_site(&self, site: usize) -> usize {
        self.block_of_site[site]
    }
    pub fn block_of_sites(&self) -> &[usize] {
        &self.block_of_site
    }
    /// `𝒮 = diag(|S_k|) ⊗ I_q`.
    pub fn s_cal(&self) -> &DMatrix<f64> {
        &self.s_cal
    }
    /// `𝒜 = A ⊗ I_q`.
    pub fn a_cal(&self) -> &DMatrix<f64> {
        &self.a_cal
    }
    /// `Γ = diag(γ) ⊗ I_q`.
    pub fn gamma_cal(&self) -> &DMatrix<f64> {
        &self.gamma_cal
    }
    pub fn is_zero_interaction(&self) -> bool {
        self.zero_interaction
    }
    pub fn index(&self, block: usize, color: usize) -> usize {
        block * self.q + color
    }

    /// True when all blocks have the same size and `A` has the `A_{α,β}` pattern.
    pub fn is_equal_blocks_structured(&self) -> bool {
        let s = self.s();
        let equal = self.block_sizes.iter().all(|&b| b == self.block_sizes[0]);
        let beta = self.a[(0, 0)];
        let alpha = if s > 1 { self.a[(0, 1)] } else { 0.0 };
        let structured = (0..s).all(|i| {
            (0..s).all(|j| {
                let want = if i == j { beta } else { alpha };
                (self.a[(i, j)] - want).abs() <= SYMMETRY_TOL * beta.abs().max(1.0)
            })
        });
        equal && structured
    }
}

fn validate_interaction(a: &DMatrix<f64>) -> Result<()> {
    let s = a.nrows();
    for i in 0..s {
        for j in 0..s {
            let v = a[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonPositiveEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if j < i {
                let d = a[(i, j)] - a[(j, i)];
                if d.abs() > SYMMETRY_TOL {
                    return Err(Error::NonSymmetricA {
                        row: i,
                        col: j,
                        difference: d,
                    });
                }
            }
        }
    }
    for i in 0..s {
        for j in 0..s {
            if a[(i, j)] <= 0.0 {
                return Err(Error::NonPositiveEntry {
                    row: i,
                    col: j,
                    value: a[(i, j)],
                });
            }
        }
    }
    let ev = linalg::sym_eigenvalues(a);
    let norm = ev.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if ev[0] <= PD_REL_TOL * norm {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: ev[0] });
    }
    Ok(())
}

/// `γ = (|S_k|/N)_k`, the finite-N stand-in for the limiting block proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticProportions {
    pub gamma: Vec<f64>,
}

/// ω ∈ {1,…,q}^N.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    spins: Vec<usize>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<usize>, q: usize) -> Result<Self> {
        if let Some((site, &value)) = spins.iter().enumerate().find(|(_, &v)| v < 1 || v > q) {
            return Err(Error::InvalidSpin { site, value, q });
        }
        Ok(SpinConfiguration { spins })
    }

    pub fn spins(&self) -> &[usize] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// Per-block color occupation numbers `n[k][c]`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorCounts {
    s: usize,
    q: usize,
    counts: Vec<usize>,
}

impl ColorCounts {
    pub fn zeros(s: usize, q: usize) -> Self {
        ColorCounts {
            s,
            q,
            counts: vec![0; s * q],
        }
    }

    /// Build from a flat row-major table and check block sums against the model.
    pub fn from_flat(model: &Model, counts: Vec<usize>) -> Result<Self> {
        let c = ColorCounts {
            s: model.s(),
            q: model.q(),
            counts,
        };
        c.validate(model)?;
        Ok(c)
    }

    pub(crate) fn from_flat_unchecked(s: usize, q: usize, counts: Vec<usize>) -> Self {
        ColorCounts { s, q, counts }
    }

    pub fn from_configuration(model: &Model, config: &SpinConfiguration) -> Result<Self> {
        if config.len() != model.n() {
            return Err(Error::DimensionMismatch {
                expected: model.n(),
                actual: config.len(),
            });
        }
        let q = model.q();
        let mut out = ColorCounts::zeros(model.s(), q);
        for (site, &spin) in config.spins().iter().enumerate() {
            if spin < 1 || spin > q {
                return Err(Error::InvalidSpin { site, value: spin, q });
            }
            out.counts[model.block_of_site(site) * q + spin - 1] += 1;
        }
        Ok(out)
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.s != model.s() || self.q != model.q() || self.counts.len() != self.s * self.q {
            return Err(Error::CountMismatch(format!(
                "shape {}x{} does not match model {}x{}",
                self.s,
                self.q,
                model.s(),
                model.q()
            )));
        }
        for (k, &size) in model.block_sizes().iter().enumerate() {
            let total: usize = self.block(k).iter().sum();
            if total != size {
                return Err(Error::CountMismatch(format!(
                    "block {} holds {total} spins but |S_{}| = {size}",
                    k + 1,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, block: usize, color: usize) -> usize {
        self.counts[block * self.q + color]
    }

    pub fn block(&self, block: usize) -> &[usize] {
        &self.counts[block * self.q..(block + 1) * self.q]
    }

    pub fn as_flat(&self) -> &[usize] {
        &self.counts
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [usize] {
        &mut self.counts
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

/// `m[k][c] = n[k][c] / |S_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationVector {
    s: usize,
    q: usize,
    values: Vec<f64>,
}

impl MagnetizationVector {
    pub fn from_values(s: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != s * q {
            return Err(Error::DimensionMismatch {
                expected: s * q,
                actual: values.len(),
            });
        }
        Ok(MagnetizationVector { s, q, values })
    }

    pub fn get(&self, block: usize, color: usize) -> f64 {
        self.values[block * self.q + color]
    }

    pub fn block(&self, block: usize) -> &[f64] {
        &self.values[block * self.q..(block + 1) * self.q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn q(&self) -> usize {
        self.q
    }
}

/// `H_N = −(1/2N) Σ_{j,k} A_{jk} Σ_c n[j][c]·n[k][c]`.
pub fn hamiltonian(model: &Model, counts: &ColorCounts) -> Result<f64> {
    counts.validate(model)?;
    Ok(hamiltonian_unchecked(model, counts.as_flat()))
}

pub(crate) fn hamiltonian_unchecked(model: &Model, counts: &[usize]) -> f64 {
    let (s, q) = (model.s(), model.q());
    let a = model.a();
    let mut total = 0.0;
    for j in 0..s {
        for k in 0..s {
            let overlap: usize = (0..q).map(|c| counts[j * q + c] * counts[k * q + c]).sum();
            total += a[(j, k)] * overlap as f64;
        }
    }
    -total / (2.0 * model.n() as f64)
}

pub fn magnetization(model: &Model, counts: &ColorCounts) -> Result<MagnetizationVector> {
    counts.validate(model)?;
    Ok(magnetization_unchecked(model, counts.as_flat()))
}

pub fn magnetization_of(model: &Model, config: &SpinConfiguration) -> Result<MagnetizationVector> {
    let counts = ColorCounts::from_configuration(model, config)?;
    Ok(magnetization_unchecked(model, counts.as_flat()))
}

pub(crate) fn magnetization_unchecked(model: &Model, counts: &[usize]) -> MagnetizationVector {
    let q = model.q();
    let values = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| n as f64 / model.block_sizes()[i / q] as f64)
        .collect();
    MagnetizationVector {
        s: model.s(),
        q,
        values,
    }
}

/// `‖√Γ𝒜√Γ‖₂`, computed in `R^s` on `√diag(γ)·A·√diag(γ)`.
pub fn interaction_norm(model: &Model) -> f64 {
    linalg::sym_spectral_norm(&scaled_interaction(model))
}

/// `√diag(γ)·A·√diag(γ)`.
pub fn scaled_interaction(model: &Model) -> DMatrix<f64> {
    let sqrt_g = model.gamma().map(f64::sqrt);
    let d = linalg::diag(&sqrt_g);
    &d * model.a() * &d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `norm < 4(q−1)/q`: the fixed-point map is a contraction.
    FixedPointContractive,
    /// `4(q−1)/q ≤ norm < ζ_q`.
    Intermediate,
    /// `norm ≥ ζ_q`.
    LowTemperature,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Regime::FixedPointContractive => "FixedPointContractive",
            Regime::Intermediate => "Intermediate",
            Regime::LowTemperature => "LowTemperature",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub zeta_q: f64,
    pub fixed_point_threshold: f64,
    pub norm: f64,
    pub regime: Regime,
}

/// Critical inverse temperature of the `q`-color mean-field Potts model.
pub fn zeta(q: usize) -> Result<f64> {
    match q {
        0 | 1 => Err(Error::InvalidQ(q)),
        2 => Ok(2.0),
        _ => {
            let qf = q as f64;
            Ok(2.0 * (qf - 1.0) / (qf - 2.0) * (qf - 1.0).ln())
        }
    }
}

/// `4(q−1)/q`.
pub fn fixed_point_threshold(q: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidQ(q));
    }
    let qf = q as f64;
    Ok(4.0 * (qf - 1.0) / qf)
}

pub fn classify(norm: f64, q: usize) -> Result<Regime> {
    let fp = fixed_point_threshold(q)?;
    let z = zeta(q)?;
    Ok(if norm < fp {
        Regime::FixedPointContractive
    } else if norm < z {
        Regime::Intermediate
    } else {
        Regime::LowTemperature
    })
}

pub fn critical_thresholds(model: &Model) -> Result<Thresholds> {
    let norm = interaction_norm(model);
    Ok(Thresholds {
        zeta_q: zeta(model.q())?,
        fixed_point_threshold: fixed_point_threshold(model.q())?,
        norm,
        regime: classify(norm, model.q())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_block() -> Model {
        Model::structured(vec![3, 7], 3, StructuredInteraction::new(0.5, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn single_block_model_is_valid() {
        let m = Model::new(ModelSpec::new(vec![10], 2, DMatrix::from_element(1, 1, 1.0))).unwrap();
        assert_eq!(m.n(), 10);
        assert_eq!(m.gamma().as_slice(), &[1.0]);
    }

    #[test]
    fn two_block_proportions() {
        let m = two_block();
        assert_eq!(m.n(), 10);
        assert_relative_eq!(m.gamma()[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(m.gamma()[1], 0.7, epsilon = 1e-15);
        assert_eq!(m.a_cal().shape(), (6, 6));
    }

    #[test]
    fn rejects_zero_off_diagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let err = Model::new(ModelSpec::new(vec![2, 2], 2, a)).unwrap_err();
        assert!(matches!(err, Error::NonPositiveEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.6, 1.0]);
        assert!(matches!(
            Model::new(ModelSpec::new(vec![2, 2], 2, a)),
            Err(Error::NonSymmetricA { .. })
        ));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            Model::new(ModelSpec::new(vec![2, 2], 2, a)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rejects_block_size_mismatch_and_bad_q() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let spec = ModelSpec {
            n: 11,
            block_sizes: vec![10],
            q: 2,
            a: a.clone(),
        };
        assert!(matches!(Model::new(spec), Err(Error::BlockSizeMismatch { .. })));
        assert!(matches!(
            Model::new(ModelSpec::new(vec![10], 1, a)),
            Err(Error::InvalidQ(1))
        ));
    }

    #[test]
    fn structured_interaction_bounds() {
        assert!(StructuredInteraction::new(1.0, 1.0).is_err());
        assert!(StructuredInteraction::new(0.0, 1.0).is_err());
        let a = StructuredInteraction::new(0.25, 2.0).unwrap().matrix(3);
        assert_eq!(a[(1, 1)], 2.0);
        assert_eq!(a[(0, 2)], 0.25);
    }

    #[test]
    fn all_equal_configuration_energy() {
        let beta = 1.7;
        let n = 9;
        let m = Model::new(ModelSpec::new(vec![n], 4, DMatrix::from_element(1, 1, beta))).unwrap();
        let config = SpinConfiguration::new(vec![3; n], 4).unwrap();
        let counts = ColorCounts::from_configuration(&m, &config).unwrap();
        assert_relative_eq!(
            hamiltonian(&m, &counts).unwrap(),
            -beta * n as f64 / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_site_energy() {
        let m = Model::new(ModelSpec::new(vec![2], 2, DMatrix::from_element(1, 1, 1.0))).unwrap();
        let config = SpinConfiguration::new(vec![1, 2], 2).unwrap();
        let counts = ColorCounts::from_configuration(&m, &config).unwrap();
        assert_eq!(counts.as_flat(), &[1, 1]);
        assert_relative_eq!(hamiltonian(&m, &counts).unwrap(), -0.5, epsilon = 1e-15);
    }

    #[test]
    fn blocks_collapse_when_alpha_equals_beta() {
        // α = β is outside the admissible set (A singular), so evaluate the
        // quadratic form on a nearby valid matrix and compare the limit formula.
        let alpha = 0.8;
        let a = DMatrix::from_row_slice(2, 2, &[alpha, alpha, alpha, alpha]);
        let m = Model::assemble(6, 3, vec![2, 4], a, false);
        let counts = vec![1, 1, 0, 2, 1, 1];
        let h = hamiltonian_unchecked(&m, &counts);
        let pooled: f64 = (0..3).map(|c| ((counts[c] + counts[3 + c]) as f64).powi(2)).sum();
        assert_relative_eq!(h, -alpha / 12.0 * pooled, epsilon = 1e-14);
    }

    #[test]
    fn count_mismatch_is_rejected() {
        let m = two_block();
        let bad = ColorCounts::from_flat_unchecked(2, 3, vec![1, 1, 0, 3, 3, 0]);
        assert!(matches!(hamiltonian(&m, &bad), Err(Error::CountMismatch(_))));
    }

    #[test]
    fn magnetization_examples() {
        let m = two_block();
        let config = SpinConfiguration::new(vec![1, 1, 2, 3, 3, 3, 3, 3, 3, 3], 3).unwrap();
        let mag = magnetization_of(&m, &config).unwrap();
        assert_relative_eq!(mag.get(0, 0), 2.0 / 3.0);
        assert_relative_eq!(mag.get(0, 1), 1.0 / 3.0);
        assert_eq!(mag.get(0, 2), 0.0);
        assert_eq!(mag.block(1), &[0.0, 0.0, 1.0]);

        let all_one = SpinConfiguration::new(vec![1; 10], 3).unwrap();
        let mag = magnetization_of(&m, &all_one).unwrap();
        for k in 0..2 {
            assert_eq!(mag.block(k), &[1.0, 0.0, 0.0]);
        }

        let u = Model::structured(vec![3, 6], 3, StructuredInteraction::new(0.5, 1.0).unwrap()).unwrap();
        let uniform = ColorCounts::from_flat(&u, vec![1, 1, 1, 2, 2, 2]).unwrap();
        let mag = magnetization(&u, &uniform).unwrap();
        assert!(mag.values().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn invalid_spin_value() {
        assert!(matches!(
            SpinConfiguration::new(vec![1, 0], 2),
            Err(Error::InvalidSpin { site: 1, .. })
        ));
        assert!(SpinConfiguration::new(vec![3], 2).is_err());
    }

    #[test]
    fn norm_examples() {
        let m = Model::new(ModelSpec::new(vec![5], 3, DMatrix::from_element(1, 1, 1.3))).unwrap();
        assert_relative_eq!(interaction_norm(&m), 1.3, epsilon = 1e-14);
        let (alpha, beta) = (0.4, 1.1);
        let m = Model::structured(vec![4, 4], 2, StructuredInteraction::new(alpha, beta).unwrap()).unwrap();
        assert_relative_eq!(interaction_norm(&m), (alpha + beta) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn thresholds() {
        assert_eq!(zeta(2).unwrap(), 2.0);
        assert_eq!(fixed_point_threshold(2).unwrap(), 2.0);
        assert_relative_eq!(fixed_point_threshold(5).unwrap(), 3.2, epsilon = 1e-15);
        assert_relative_eq!(zeta(5).unwrap(), 8.0 / 3.0 * 4f64.ln(), epsilon = 1e-14);
        assert!((zeta(5).unwrap() - 3.6968).abs() < 1e-4);
        assert_relative_eq!(zeta(3).unwrap(), 4.0 * 2f64.ln(), epsilon = 1e-14);
        assert!(matches!(zeta(1), Err(Error::InvalidQ(1))));
        for q in 2..12 {
            assert!(fixed_point_threshold(q).unwrap() <= zeta(q).unwrap() + 1e-15);
        }
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify(3.1, 5).unwrap(), Regime::FixedPointContractive);
        assert_eq!(classify(3.65, 5).unwrap(), Regime::Intermediate);
        assert_eq!(classify(3.8, 5).unwrap(), Regime::LowTemperature);
        assert_eq!(classify(2.0, 2).unwrap(), Regime::LowTemperature);
    }

    #[test]
    fn with_norm_rescales() {
        let m = Model::structured(vec![25, 75], 5, StructuredInteraction::new(0.5, 1.0).unwrap()).unwrap();
        let scaled = m.with_norm(3.65).unwrap();
        assert_relative_eq!(interaction_norm(&scaled), 3.65, epsilon = 1e-12);
        assert_eq!(critical_thresholds(&scaled).unwrap().regime, Regime::Intermediate);
    }

    #[test]
    fn equal_block_structure_detection() {
        assert!(!two_block().is_equal_blocks_structured());
        let m = Model::structured(vec![4, 4], 3, StructuredInteraction::new(0.5, 1.0).unwrap()).unwrap();
        assert!(m.is_equal_blocks_structured());
    }
}
