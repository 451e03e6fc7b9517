//! Empirical mean and covariance of magnetization samples, with batch-means
//! standard errors that account for autocorrelation along a chain.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::MagnetizationVector;

pub const DEFAULT_BATCH_COUNT: usize = 50;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub samples: usize,
    pub batch_size: usize,
    pub mean: DVector<f64>,
    /// Unbiased sample covariance (divides by n − 1).
    pub covariance: DMatrix<f64>,
    /// Batch-means standard error of each covariance entry.
    pub standard_errors: DMatrix<f64>,
    /// Batch-means standard error of each mean entry.
    pub mean_standard_errors: DVector<f64>,
    /// Number of full batches behind the standard errors.
    pub effective_samples: f64,
}

/// Batch size giving `DEFAULT_BATCH_COUNT` batches.
pub fn default_batch_size(samples: usize) -> usize {
    (samples / DEFAULT_BATCH_COUNT).max(1)
}

/// Moments of a single ordered chain. Trailing samples that do not fill a batch
/// are used for the point estimates but not for the standard errors.
pub fn empirical_moments(samples: &[MagnetizationVector], batch_size: usize) -> Result<MomentEstimate> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples(format!(
            "{n} samples, need at least {MIN_SAMPLES}"
        )));
    }
    if batch_size == 0 || n / batch_size < 2 {
        return Err(Error::TooFewSamples(format!(
            "{n} samples with batch size {batch_size} give fewer than 2 batches"
        )));
    }
    let d = samples[0].values().len();
    if let Some(bad) = samples.iter().find(|m| m.values().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.values().len(),
        });
    }

    let mut mean = DVector::zeros(d);
    for m in samples {
        for (acc, v) in mean.iter_mut().zip(m.values()) {
            *acc += v;
        }
    }
    mean /= n as f64;

    let mut covariance = DMatrix::zeros(d, d);
    let mut centred = vec![0.0; d];
    let batches = n / batch_size;
    let mut batch_cov = vec![DMatrix::<f64>::zeros(d, d); batches];
    let mut batch_mean = vec![DVector::<f64>::zeros(d); batches];
    for (t, m) in samples.iter().enumerate() {
        for (c, (v, mu)) in centred.iter_mut().zip(m.values().iter().zip(mean.iter())) {
            *c = v - mu;
        }
        let batch = t / batch_size;
        for i in 0..d {
            for j in i..d {
                let p = centred[i] * centred[j];
                covariance[(i, j)] += p;
                if batch < batches {
                    batch_cov[batch][(i, j)] += p;
                }
            }
            if batch < batches {
                batch_mean[batch][i] += centred[i];
            }
        }
    }
    covariance /= (n - 1) as f64;
    for i in 0..d {
        for j in 0..i {
            covariance[(i, j)] = covariance[(j, i)];
        }
    }

    let bs = batch_size as f64;
    let mut standard_errors = DMatrix::zeros(d, d);
    let mut mean_standard_errors = DVector::zeros(d);
    for i in 0..d {
        for j in i..d {
            let vals: Vec<f64> = batch_cov.iter().map(|b| b[(i, j)] / bs).collect();
            let se = batch_se(&vals);
            standard_errors[(i, j)] = se;
            standard_errors[(j, i)] = se;
        }
        let vals: Vec<f64> = batch_mean.iter().map(|b| b[i] / bs).collect();
        mean_standard_errors[i] = batch_se(&vals);
    }
    Ok(MomentEstimate {
        samples: n,
        batch_size,
        mean,
        covariance,
        standard_errors,
        mean_standard_errors,
        effective_samples: batches as f64,
    })
}

fn batch_se(values: &[f64]) -> f64 {
    let b = values.len() as f64;
    let mu = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (b - 1.0);
    (var / b).sqrt()
}
