mod common;

use block_potts::limit::{
    clt_covariance, hessian_form, mdp_form_matrix, rotated_covariance, rotated_magnetization, rotation_operator,
    CltOptions,
};
use block_potts::linalg::{asymmetry, max_abs_diff};
use block_potts::MagnetizationVector;
use common::random_in_regime_model;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn covariance_identities_on_random_models() {
    for seed in 0..50u64 {
        let model = random_in_regime_model(seed, 0.95);
        let (s, q) = (model.s(), model.q());
        let clt = clt_covariance(&model, CltOptions::default()).unwrap();
        assert!(clt.regime_checked);
        assert!(asymmetry(&clt.sigma) < 1e-10);
        let zeros = clt.eigenvalues.iter().filter(|l| l.abs() < 1e-10).count();
        assert_eq!(zeros, s, "seed {seed}: {:?}", clt.eigenvalues);
        assert!(clt.eigenvalues[s..].iter().all(|l| *l > 1e-10));
        for k in 0..s {
            let mut e = DVector::zeros(s * q);
            e.rows_mut(k * q, q).fill(1.0);
            assert!((&clt.sigma * e).amax() < 1e-10);
        }
        assert!(max_abs_diff(&clt.sigma, &hessian_form(&model).unwrap()) < 1e-9);

        let r = rotation_operator(&model).r;
        let rotated = rotated_covariance(&model).unwrap();
        assert!(max_abs_diff(&(&r * &clt.sigma * r.transpose()), &rotated) < 1e-9);

        let half = mdp_form_matrix(&model, 0.5).unwrap();
        assert!(max_abs_diff(&half, &rotated.clone().try_inverse().unwrap()) < 1e-9);
        let uniform = model.gamma().iter().all(|g| (g - model.gamma()[0]).abs() < 1e-15);
        if !uniform {
            assert!(max_abs_diff(&mdp_form_matrix(&model, 0.0).unwrap(), &half) > 1e-9);
        }
    }
}

#[test]
fn rotated_magnetization_ignores_block_constant_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..20u64 {
        let model = random_in_regime_model(seed, 0.5);
        let q = model.q();
        let m: Vec<f64> = (0..model.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
        let base = rotated_magnetization(
            &model,
            &MagnetizationVector::from_values(model.s(), q, m.clone()).unwrap(),
        )
        .unwrap();
        // adding c_k·1_q / |S_k| to m adds c_k·1_q/√|S_k| to √𝒮m
        let shifted: Vec<f64> = m
            .iter()
            .enumerate()
            .map(|(i, v)| v + (i / q) as f64 * 0.37 / model.block_sizes()[i / q] as f64)
            .collect();
        let moved = rotated_magnetization(
            &model,
            &MagnetizationVector::from_values(model.s(), q, shifted).unwrap(),
        )
        .unwrap();
        assert!((&base - &moved).amax() < 1e-12);
    }
}
