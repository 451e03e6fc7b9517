//! Single-site heat-bath dynamics for the Gibbs measure.
//!
//! Removing site `i` of block `b` from the configuration leaves counts `n̄`, and
//! `P(ω_i = c | rest) ∝ exp((1/N)·Σ_j A[b][j]·n̄[j][c])`.
//!
//! Random streams come from ChaCha8 (`rand_chacha`), whose output is fixed by
//! its key and 64-bit stream id. Chain `i` of a run with master seed `s` uses
//! key `seed_from_u64(s)` and stream `i`, so chains are independent and every
//! stream is reproducible on any platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{magnetization_unchecked, ColorCounts, MagnetizationVector, Model, SpinConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Colors assigned cyclically inside each block (balanced counts).
    Uniform,
    /// Every spin set to the given color, 1-based.
    AllColor(usize),
    /// Independent uniform colors.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in_sweeps: usize,
    pub sweeps: usize,
    pub thinning: usize,
    pub initial_state: InitialState,
}

impl ChainConfig {
    pub fn validate(&self, q: usize) -> Result<()> {
        if self.sweeps < 1 {
            return Err(Error::InvalidConfig("sweeps must be at least 1".into()));
        }
        if self.thinning < 1 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if let InitialState::AllColor(c) = self.initial_state {
            if c < 1 || c > q {
                return Err(Error::InvalidConfig(format!("initial color {c} outside 1..={q}")));
            }
        }
        Ok(())
    }
}

/// Generator for chain `chain_index` of a run seeded with `master_seed`.
pub fn chain_rng(master_seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chain_index);
    rng
}

/// Spins plus incrementally maintained counts and local fields.
#[derive(Debug, Clone)]
pub struct ChainState {
    colors: Vec<usize>,
    counts: ColorCounts,
    // field[k][c] = (1/N)·Σ_j A[k][j]·n[j][c]
    field: Vec<f64>,
}

impl ChainState {
    pub fn new<R: Rng>(model: &Model, init: InitialState, rng: &mut R) -> Result<Self> {
        let q = model.q();
        let mut colors = Vec::with_capacity(model.n());
        for &size in model.block_sizes() {
            for i in 0..size {
                colors.push(match init {
                    InitialState::Uniform => i % q,
                    InitialState::AllColor(c) => {
                        if c < 1 || c > q {
                            return Err(Error::InvalidConfig(format!("initial color {c} outside 1..={q}")));
                        }
                        c - 1
                    }
                    InitialState::Random => rng.random_range(0..q),
                });
            }
        }
        Ok(Self::from_colors(model, colors))
    }

    pub fn from_configuration(model: &Model, config: &SpinConfiguration) -> Result<Self> {
        let counts = ColorCounts::from_configuration(model, config)?;
        let colors = config.spins().iter().map(|&c| c - 1).collect();
        let mut state = ChainState {
            colors,
            counts,
            field: vec![0.0; model.dim()],
        };
        state.refresh_field(model);
        Ok(state)
    }

    fn from_colors(model: &Model, colors: Vec<usize>) -> Self {
        let q = model.q();
        let mut counts = ColorCounts::zeros(model.s(), q);
        for (site, &c) in colors.iter().enumerate() {
            counts.as_flat_mut()[model.block_of_site(site) * q + c] += 1;
        }
        let mut state = ChainState {
            colors,
            counts,
            field: vec![0.0; model.dim()],
        };
        state.refresh_field(model);
        state
    }

    /// Overwrite a spin without updating counts (used to exercise consistency checks).
    pub fn set_color_unchecked(&mut self, site: usize, color: usize) {
        self.colors[site] = color;
    }

    fn refresh_field(&mut self, model: &Model) {
        let (s, q) = (model.s(), model.q());
        let inv_n = 1.0 / model.n() as f64;
        let a = model.a();
        let counts = self.counts.as_flat();
        for k in 0..s {
            for c in 0..q {
                self.field[k * q + c] = (0..s).map(|j| a[(k, j)] * counts[j * q + c] as f64).sum::<f64>() * inv_n;
            }
        }
    }

    pub fn counts(&self) -> &ColorCounts {
        &self.counts
    }

    /// Spins as a 1-based configuration.
    pub fn configuration(&self, model: &Model) -> Result<SpinConfiguration> {
        SpinConfiguration::new(self.colors.iter().map(|c| c + 1).collect(), model.q())
    }

    pub fn magnetization(&self, model: &Model) -> MagnetizationVector {
        magnetization_unchecked(model, self.counts.as_flat())
    }

    pub fn check_consistent(&self, model: &Model) -> Result<()> {
        if self.colors.len() != model.n() {
            return Err(Error::InconsistentState(format!(
                "{} spins for N = {}",
                self.colors.len(),
                model.n()
            )));
        }
        let q = model.q();
        let mut counts = vec![0usize; model.dim()];
        for (site, &c) in self.colors.iter().enumerate() {
            if c >= q {
                return Err(Error::InconsistentState(format!("site {site} has color index {c}")));
            }
            counts[model.block_of_site(site) * q + c] += 1;
        }
        if counts != self.counts.as_flat() {
            return Err(Error::InconsistentState("counts do not match spins".into()));
        }
        Ok(())
    }
}

/// One sweep: every site once, in index order, resampled from its conditional law.
pub fn heat_bath_sweep<R: Rng>(model: &Model, state: &mut ChainState, rng: &mut R) -> Result<()> {
    state.check_consistent(model)?;
    sweep_unchecked(model, state, rng, &mut vec![0.0; model.q()]);
    Ok(())
}

fn sweep_unchecked<R: Rng>(model: &Model, state: &mut ChainState, rng: &mut R, weights: &mut [f64]) {
    for site in 0..model.n() {
        resample_site(model, state, site, rng, weights);
    }
    // drop accumulated rounding in the incremental fields
    state.refresh_field(model);
}

fn resample_site<R: Rng>(model: &Model, state: &mut ChainState, site: usize, rng: &mut R, weights: &mut [f64]) {
    let q = model.q();
    let inv_n = 1.0 / model.n() as f64;
    let a = model.a();
    let b = model.block_of_site(site);
    let old = state.colors[site];
    let self_term = a[(b, b)] * inv_n;
    let row = &state.field[b * q..(b + 1) * q];
    let mut max = f64::NEG_INFINITY;
    for c in 0..q {
        let l = row[c] - if c == old { self_term } else { 0.0 };
        weights[c] = l;
        max = max.max(l);
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    let mut u = rng.random::<f64>() * total;
    let mut new = q - 1;
    for (c, w) in weights.iter().enumerate() {
        if u < *w {
            new = c;
            break;
        }
        u -= w;
    }
    if new != old {
        state.colors[site] = new;
        let counts = state.counts.as_flat_mut();
        counts[b * q + old] -= 1;
        counts[b * q + new] += 1;
        for k in 0..model.s() {
            let delta = a[(k, b)] * inv_n;
            state.field[k * q + old] -= delta;
            state.field[k * q + new] += delta;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSample {
    pub chain: usize,
    /// Post-burn-in sweep index (1-based) at which the sample was taken.
    pub sweep: usize,
    pub m: MagnetizationVector,
}

/// A seeded chain; iterating yields one sample every `thinning` sweeps after burn-in.
pub struct Chain<'a> {
    model: &'a Model,
    config: ChainConfig,
    chain_index: usize,
    state: ChainState,
    rng: ChaCha8Rng,
    sweep: usize,
    burned_in: bool,
    weights: Vec<f64>,
}

impl<'a> Chain<'a> {
    pub fn new(model: &'a Model, config: &ChainConfig, chain_index: usize) -> Result<Self> {
        config.validate(model.q())?;
        let mut rng = chain_rng(config.seed, chain_index as u64);
        let state = ChainState::new(model, config.initial_state, &mut rng)?;
        Ok(Chain {
            model,
            config: config.clone(),
            chain_index,
            state,
            rng,
            sweep: 0,
            burned_in: false,
            weights: vec![0.0; model.q()],
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    fn burn_in(&mut self) {
        for _ in 0..self.config.burn_in_sweeps {
            sweep_unchecked(self.model, &mut self.state, &mut self.rng, &mut self.weights);
        }
        self.burned_in = true;
    }
}

impl Iterator for Chain<'_> {
    type Item = ChainSample;

    fn next(&mut self) -> Option<ChainSample> {
        if !self.burned_in {
            self.burn_in();
        }
        if self.sweep + self.config.thinning > self.config.sweeps {
            return None;
        }
        for _ in 0..self.config.thinning {
            sweep_unchecked(self.model, &mut self.state, &mut self.rng, &mut self.weights);
        }
        self.sweep += self.config.thinning;
        Some(ChainSample {
            chain: self.chain_index,
            sweep: self.sweep,
            m: self.state.magnetization(self.model),
        })
    }
}

/// Samples of chain 0.
pub fn run_chain(model: &Model, config: &ChainConfig) -> Result<Vec<MagnetizationVector>> {
    Ok(Chain::new(model, config, 0)?.map(|s| s.m).collect())
}

/// Independent chains `0..chains`, run in parallel; output order is by chain index.
pub fn run_chains(model: &Model, config: &ChainConfig, chains: usize) -> Result<Vec<Vec<ChainSample>>> {
    (0..chains)
        .into_par_iter()
        .map(|i| Ok(Chain::new(model, config, i)?.collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, StructuredInteraction};
    use crate::sampling::exact::{enumerate_configurations, exact_count_distribution, ExactDistribution};
    use nalgebra::DMatrix;
    use std::collections::HashMap;

    fn config(seed: u64, burn: usize, sweeps: usize) -> ChainConfig {
        ChainConfig {
            seed,
            burn_in_sweeps: burn,
            sweeps,
            thinning: 1,
            initial_state: InitialState::Random,
        }
    }

    fn empirical_tv(model: &Model, exact: &ExactDistribution, cfg: &ChainConfig) -> f64 {
        let mut hist: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut chain = Chain::new(model, cfg, 0).unwrap();
        let mut total = 0usize;
        while chain.next().is_some() {
            *hist.entry(chain.state().counts().as_flat().to_vec()).or_default() += 1;
            total += 1;
        }
        let mut tv = 0.0;
        for (c, p) in exact.support.iter().zip(exact.probabilities()) {
            let f = hist.get(c.as_flat()).copied().unwrap_or(0) as f64 / total as f64;
            tv += (p - f).abs();
        }
        0.5 * tv
    }

    #[test]
    fn two_site_conditional() {
        // N = 2, β = 1, other spin has color 1: P(color 1) = e^{1/2}/(e^{1/2}+1)
        let m = Model::new(ModelSpec::new(vec![2], 2, DMatrix::from_element(1, 1, 1.0))).unwrap();
        let expected = 0.5f64.exp() / (0.5f64.exp() + 1.0);
        let start = ChainState::from_configuration(&m, &SpinConfiguration::new(vec![2, 1], 2).unwrap()).unwrap();
        let mut rng = chain_rng(11, 0);
        let mut w = vec![0.0; 2];
        let trials = 200_000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut state = start.clone();
            resample_site(&m, &mut state, 0, &mut rng, &mut w);
            state.check_consistent(&m).unwrap();
            if state.colors[0] == 0 {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((p - expected).abs() < 4.0 * se, "p = {p}, expected {expected}");
    }

    #[test]
    fn zero_interaction_updates_are_uniform() {
        let m = Model::new(ModelSpec::new(vec![50], 4, DMatrix::from_element(1, 1, 3.0)))
            .unwrap()
            .zero_interaction();
        let samples = run_chain(&m, &config(3, 0, 2000)).unwrap();
        let mean: f64 = samples.iter().map(|s| s.get(0, 2)).sum::<f64>() / samples.len() as f64;
        assert!((mean - 0.25).abs() < 0.01);
    }

    #[test]
    fn detailed_balance_small_system() {
        let m = Model::new(ModelSpec::new(vec![4], 2, DMatrix::from_element(1, 1, 1.5))).unwrap();
        let exact = enumerate_configurations(&m).unwrap();
        let tv = empirical_tv(&m, &exact, &config(5, 100, 1_000_000));
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn matches_count_oracle_two_blocks() {
        let m = Model::structured(vec![4, 4], 3, StructuredInteraction::new(0.8, 1.6).unwrap()).unwrap();
        let exact = exact_count_distribution(&m).unwrap();
        let tv = empirical_tv(&m, &exact, &config(9, 100, 1_000_000));
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn deterministic_given_seed() {
        let m = Model::structured(vec![5, 6], 3, StructuredInteraction::new(0.5, 1.0).unwrap()).unwrap();
        let cfg = config(42, 10, 200);
        let a = run_chain(&m, &cfg).unwrap();
        let b = run_chain(&m, &cfg).unwrap();
        assert_eq!(a, b);
        let c = run_chain(
            &m,
            &ChainConfig {
                seed: 43,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_ne!(a, c);
        let chains = run_chains(&m, &cfg, 3).unwrap();
        assert_eq!(chains[0].iter().map(|s| s.m.clone()).collect::<Vec<_>>(), a);
        assert_ne!(chains[1], chains[2]);
    }

    #[test]
    fn thinning_and_counts() {
        let m = Model::new(ModelSpec::new(vec![6], 2, DMatrix::from_element(1, 1, 1.0))).unwrap();
        let cfg = ChainConfig {
            thinning: 3,
            ..config(1, 0, 10)
        };
        let samples: Vec<_> = Chain::new(&m, &cfg, 0).unwrap().collect();
        assert_eq!(samples.iter().map(|s| s.sweep).collect::<Vec<_>>(), vec![3, 6, 9]);
        assert!(ChainConfig {
            thinning: 0,
            ..cfg.clone()
        }
        .validate(2)
        .is_err());
        assert!(ChainConfig { sweeps: 0, ..cfg }.validate(2).is_err());
    }

    #[test]
    fn inconsistent_state_is_rejected() {
        let m = Model::new(ModelSpec::new(vec![3], 3, DMatrix::from_element(1, 1, 1.0))).unwrap();
        let mut rng = chain_rng(0, 0);
        let mut state = ChainState::new(&m, InitialState::AllColor(2), &mut rng).unwrap();
        assert!(heat_bath_sweep(&m, &mut state, &mut rng).is_ok());
        let current = state.colors[0];
        state.set_color_unchecked(0, (current + 1) % 3);
        assert!(matches!(
            heat_bath_sweep(&m, &mut state, &mut rng),
            Err(Error::InconsistentState(_))
        ));
    }
}
