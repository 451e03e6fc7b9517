#![allow(dead_code)]

use block_potts::{Model, ModelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Symmetric, entrywise positive, diagonally dominant (hence positive definite).
pub fn random_interaction(rng: &mut impl Rng, s: usize, scale: f64) -> DMatrix<f64> {
    let base: f64 = rng.random_range(0.05..0.5);
    let mut a = DMatrix::from_element(s, s, base);
    for i in 0..s {
        for j in 0..i {
            let e: f64 = rng.random_range(0.0..0.4);
            a[(i, j)] += e;
            a[(j, i)] += e;
        }
    }
    for i in 0..s {
        let off: f64 = (0..s).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = off + rng.random_range(0.1..1.0);
    }
    a * scale
}

pub fn random_model(seed: u64, max_s: usize, max_q: usize, max_block: usize) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.random_range(1..=max_s);
    let q = rng.random_range(2..=max_q);
    let sizes: Vec<usize> = (0..s).map(|_| rng.random_range(1..=max_block)).collect();
    let scale = rng.random_range(0.2..2.0);
    Model::new(ModelSpec::new(sizes, q, random_interaction(&mut rng, s, scale))).unwrap()
}

/// Random model rescaled so its interaction norm is `fraction` of the
/// fixed-point threshold.
pub fn random_in_regime_model(seed: u64, fraction: f64) -> Model {
    let m = random_model(seed, 4, 5, 12);
    let q = m.q() as f64;
    m.with_norm(fraction * 4.0 * (q - 1.0) / q).unwrap()
}

/// Central finite difference of a scalar function along coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}
