//! Exact Gibbs distributions of the color counts, by brute force over
//! configurations and by enumeration of count tensors.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::model::{hamiltonian_unchecked, ColorCounts, Model};

/// Guard on `q^N` for configuration-space enumeration.
pub const CONFIGURATION_LIMIT: f64 = 1e7;
/// Guard on `∏_k C(|S_k|+q−1, q−1)` for count-space enumeration.
pub const COUNT_LIMIT: f64 = 1e8;

/// Law of the color counts under the Gibbs measure, kept in log space.
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub support: Vec<ColorCounts>,
    pub log_weights: Vec<f64>,
    pub log_z: f64,
}

impl ExactDistribution {
    fn from_parts(mut entries: Vec<(ColorCounts, f64)>) -> Self {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let log_weights: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let log_z = log_sum_exp(&log_weights);
        ExactDistribution {
            support: entries.into_iter().map(|e| e.0).collect(),
            log_weights,
            log_z,
        }
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn log_probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_weights.iter().map(move |w| w - self.log_z)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probabilities().map(f64::exp).collect()
    }

    pub fn probability_of(&self, counts: &ColorCounts) -> f64 {
        self.support
            .binary_search(counts)
            .map(|i| (self.log_weights[i] - self.log_z).exp())
            .unwrap_or(0.0)
    }

    /// `½ Σ |p − p'|` over the union of both supports.
    pub fn total_variation(&self, other: &ExactDistribution) -> f64 {
        let mut total = 0.0;
        for (c, p) in self.support.iter().zip(self.probabilities()) {
            total += (p - other.probability_of(c)).abs();
        }
        for (c, p) in other.support.iter().zip(other.probabilities()) {
            if self.support.binary_search(c).is_err() {
                total += p;
            }
        }
        0.5 * total
    }

    /// Mean and covariance of the magnetization `m` under this law.
    pub fn moments(&self, model: &Model) -> ExactMoments {
        let mut acc = MomentAccumulator::new(model);
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (c, &lw) in self.support.iter().zip(&self.log_weights) {
            acc.add(c.as_flat(), (lw - max).exp());
        }
        acc.finish(max)
    }
}

/// Exact first and second moments of `m`.
#[derive(Debug, Clone)]
pub struct ExactMoments {
    pub log_z: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

struct MomentAccumulator {
    sizes: Vec<f64>,
    q: usize,
    center: f64,
    total: f64,
    first: DVector<f64>,
    second: DMatrix<f64>,
    scratch: Vec<f64>,
}

impl MomentAccumulator {
    fn new(model: &Model) -> Self {
        let d = model.dim();
        MomentAccumulator {
            sizes: model.block_sizes().iter().map(|&b| b as f64).collect(),
            q: model.q(),
            center: 1.0 / model.q() as f64,
            total: 0.0,
            first: DVector::zeros(d),
            second: DMatrix::zeros(d, d),
            scratch: vec![0.0; d],
        }
    }

    // Accumulates moments of m − 1/q to limit cancellation in the covariance.
    fn add(&mut self, counts: &[usize], weight: f64) {
        for (i, &n) in counts.iter().enumerate() {
            self.scratch[i] = n as f64 / self.sizes[i / self.q] - self.center;
        }
        self.total += weight;
        let d = self.scratch.len();
        for i in 0..d {
            let wi = weight * self.scratch[i];
            self.first[i] += wi;
            for j in i..d {
                self.second[(i, j)] += wi * self.scratch[j];
            }
        }
    }

    fn finish(mut self, log_shift: f64) -> ExactMoments {
        let d = self.first.len();
        for i in 0..d {
            for j in 0..i {
                self.second[(i, j)] = self.second[(j, i)];
            }
        }
        let centered_mean = &self.first / self.total;
        let covariance = &self.second / self.total - &centered_mean * centered_mean.transpose();
        ExactMoments {
            log_z: log_shift + self.total.ln(),
            mean: centered_mean.add_scalar(self.center),
            covariance,
        }
    }
}

/// Brute force over all `q^N` configurations, grouping Boltzmann weights by counts.
pub fn enumerate_configurations(model: &Model) -> Result<ExactDistribution> {
    let (n, q, s) = (model.n(), model.q(), model.s());
    let size = (q as f64).powi(n as i32);
    if size > CONFIGURATION_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: CONFIGURATION_LIMIT,
        });
    }
    let blocks = model.block_of_sites();
    let mut colors = vec![0usize; n];
    let mut counts = vec![0usize; s * q];
    for &b in blocks {
        counts[b * q] += 1;
    }
    // Configurations sharing counts have identical energy; summing exp(w − w_ref)
    // per class keeps every accumulated term exactly 1.
    let mut classes: HashMap<Vec<usize>, (f64, f64)> = HashMap::new();
    loop {
        let log_w = -hamiltonian_unchecked(model, &counts);
        match classes.get_mut(counts.as_slice()) {
            Some((reference, sum)) => *sum += (log_w - *reference).exp(),
            None => {
                classes.insert(counts.clone(), (log_w, 1.0));
            }
        }
        // odometer step
        let mut site = 0;
        loop {
            if site == n {
                let entries = classes
                    .into_iter()
                    .map(|(c, (reference, sum))| (ColorCounts::from_flat_unchecked(s, q, c), reference + sum.ln()))
                    .collect();
                return Ok(ExactDistribution::from_parts(entries));
            }
            let b = blocks[site];
            counts[b * q + colors[site]] -= 1;
            colors[site] += 1;
            if colors[site] == q {
                colors[site] = 0;
                counts[b * q] += 1;
                site += 1;
            } else {
                counts[b * q + colors[site]] += 1;
                break;
            }
        }
    }
}

/// Number of count tensors, `∏_k C(|S_k|+q−1, q−1)`.
pub fn count_space_size(model: &Model) -> f64 {
    model
        .block_sizes()
        .iter()
        .map(|&b| binomial(b + model.q() - 1, model.q() - 1))
        .product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All compositions of `total` into `parts` non-negative integers, lexicographic.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; parts];
    fn fill(pos: usize, remaining: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == current.len() {
            current[pos] = remaining;
            out.push(current.clone());
            return;
        }
        for v in 0..=remaining {
            current[pos] = v;
            fill(pos + 1, remaining - v, current, out);
        }
    }
    if parts > 0 {
        fill(0, total, &mut current, &mut out);
    }
    out
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    table.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        table.push(acc);
    }
    table
}

struct BlockStates {
    counts: Vec<Vec<usize>>,
    // log multinomial + (1/2N)·A_kk·|n_k|²
    own: Vec<f64>,
}

/// Visit every count tensor with its unnormalized log weight
/// `Σ_k log multinomial(|S_k|; n_k) − H_N(n)`.
pub fn for_each_count_state<F: FnMut(&[usize], f64)>(model: &Model, mut visit: F) -> Result<()> {
    let size = count_space_size(model);
    if size > COUNT_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: COUNT_LIMIT,
        });
    }
    let (s, q) = (model.s(), model.q());
    let inv_n = 1.0 / model.n() as f64;
    let lf = ln_factorials(model.n());
    let a = model.a();
    let blocks: Vec<BlockStates> = model
        .block_sizes()
        .iter()
        .enumerate()
        .map(|(k, &size)| {
            let counts = compositions(size, q);
            let own = counts
                .iter()
                .map(|n| {
                    let lmult = lf[size] - n.iter().map(|&x| lf[x]).sum::<f64>();
                    let sq: usize = n.iter().map(|&x| x * x).sum();
                    lmult + 0.5 * inv_n * a[(k, k)] * sq as f64
                })
                .collect();
            BlockStates { counts, own }
        })
        .collect();

    let mut flat = vec![0usize; s * q];
    let mut partial = vec![0.0f64; s + 1];
    // depth-first walk over the product of per-block compositions
    #[allow(clippy::too_many_arguments)]
    fn descend<F: FnMut(&[usize], f64)>(
        level: usize,
        blocks: &[BlockStates],
        a: &DMatrix<f64>,
        inv_n: f64,
        q: usize,
        flat: &mut [usize],
        partial: &mut [f64],
        visit: &mut F,
    ) {
        if level == blocks.len() {
            visit(flat, partial[level]);
            return;
        }
        for (idx, n) in blocks[level].counts.iter().enumerate() {
            let mut w = partial[level] + blocks[level].own[idx];
            for j in 0..level {
                let other = &flat[j * q..(j + 1) * q];
                let overlap: usize = other.iter().zip(n).map(|(x, y)| x * y).sum();
                w += inv_n * a[(j, level)] * overlap as f64;
            }
            flat[level * q..(level + 1) * q].copy_from_slice(n);
            partial[level + 1] = w;
            descend(level + 1, blocks, a, inv_n, q, flat, partial, visit);
        }
    }
    descend(0, &blocks, a, inv_n, q, &mut flat, &mut partial, &mut visit);
    Ok(())
}

/// Exact law of the counts from the count-space sum.
pub fn exact_count_distribution(model: &Model) -> Result<ExactDistribution> {
    let (s, q) = (model.s(), model.q());
    let mut entries = Vec::new();
    for_each_count_state(model, |counts, lw| {
        entries.push((ColorCounts::from_flat_unchecked(s, q, counts.to_vec()), lw));
    })?;
    Ok(ExactDistribution::from_parts(entries))
}

/// Exact moments of `m` without materializing the support (two streaming passes).
pub fn exact_count_moments(model: &Model) -> Result<ExactMoments> {
    let mut max = f64::NEG_INFINITY;
    for_each_count_state(model, |_, lw| max = max.max(lw))?;
    let mut acc = MomentAccumulator::new(model);
    for_each_count_state(model, |counts, lw| acc.add(counts, (lw - max).exp()))?;
    Ok(acc.finish(max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelSpec, StructuredInteraction};

    fn single(n: usize, q: usize, beta: f64) -> Model {
        Model::new(ModelSpec::new(vec![n], q, DMatrix::from_element(1, 1, beta))).unwrap()
    }

    fn ln_multinomial(n: &[usize]) -> f64 {
        let lf = ln_factorials(n.iter().sum());
        lf[n.iter().sum::<usize>()] - n.iter().map(|&x| lf[x]).sum::<f64>()
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 3).len(), 15);
        assert_eq!(compositions(0, 2), vec![vec![0, 0]]);
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn single_site_is_uniform() {
        let m = single(1, 4, 2.5);
        let d = enumerate_configurations(&m).unwrap();
        assert_eq!(d.len(), 4);
        for p in d.probabilities() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_interaction_is_multinomial() {
        let m = Model::structured(vec![3, 4], 3, StructuredInteraction::new(0.3, 0.9).unwrap())
            .unwrap()
            .zero_interaction();
        let d = enumerate_configurations(&m).unwrap();
        let c = exact_count_distribution(&m).unwrap();
        let q_n = 3f64.powi(7);
        for (counts, p) in d.support.iter().zip(d.probabilities()) {
            let lm: f64 = (0..2).map(|k| ln_multinomial(counts.block(k))).sum();
            let expected = lm.exp() / q_n;
            assert!((p - expected).abs() < 1e-14);
            assert!((c.probability_of(counts) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn oracles_agree_small() {
        let m = Model::structured(vec![2, 4], 2, StructuredInteraction::new(0.6, 1.4).unwrap()).unwrap();
        let d = enumerate_configurations(&m).unwrap();
        let c = exact_count_distribution(&m).unwrap();
        assert!(d.total_variation(&c) < 1e-12);
        assert!((d.log_z - c.log_z).abs() < 1e-12);
    }

    #[test]
    fn too_large_is_guarded() {
        let m = single(30, 3, 1.0);
        assert!(matches!(enumerate_configurations(&m), Err(Error::TooLarge { .. })));
        let big = Model::structured(vec![400, 400, 400], 4, StructuredInteraction::new(0.1, 0.5).unwrap()).unwrap();
        assert!(matches!(exact_count_distribution(&big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn streaming_moments_match_materialized() {
        let m = Model::structured(vec![5, 7], 3, StructuredInteraction::new(0.7, 1.9).unwrap()).unwrap();
        let full = exact_count_distribution(&m).unwrap().moments(&m);
        let streamed = exact_count_moments(&m).unwrap();
        assert!((full.log_z - streamed.log_z).abs() < 1e-12);
        assert!((full.covariance - &streamed.covariance).amax() < 1e-14);
        for x in streamed.mean.iter() {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}
