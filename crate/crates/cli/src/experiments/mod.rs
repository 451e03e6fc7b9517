//! Experiment runners. Each writes its CSV files through the run's
//! [`RunWriter`] and returns a serializable report.

pub mod covariance;
pub mod duality;
pub mod hs;
pub mod landscape;
pub mod mdp;
pub mod sampling;

use std::io::{self, Write};

use block_potts::csv::join_f64;
use block_potts::sampling::{empirical_moments, MomentEstimate};
use block_potts::MagnetizationVector;
use nalgebra::DMatrix;

use crate::error::LabResult;

/// CSV with header `{prefix}_1,…,{prefix}_n`, one matrix row per line.
pub fn write_matrix<W: Write>(out: &mut W, prefix: &str, m: &DMatrix<f64>) -> io::Result<()> {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("{prefix}_{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in m.row_iter() {
        writeln!(out, "{}", join_f64(row.iter().copied()))?;
    }
    Ok(())
}

/// Moments over several chains with batches that never straddle two chains:
/// each chain is cut to the same whole number of batches and the chains are
/// concatenated.
pub fn pooled_moments(runs: &[Vec<MagnetizationVector>], batches: usize) -> LabResult<MomentEstimate> {
    let per_chain = (batches / runs.len().max(1)).max(1);
    let shortest = runs.iter().map(Vec::len).min().unwrap_or(0);
    let batch_size = shortest / per_chain;
    let used = per_chain * batch_size;
    let pooled: Vec<MagnetizationVector> = runs.iter().flat_map(|r| r[..used].iter().cloned()).collect();
    Ok(empirical_moments(&pooled, batch_size)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_csv_layout() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, "c", &DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c_1,c_2");
        let parsed: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, vec![1.0, 0.5]);
    }

    #[test]
    fn pooled_batches_align_with_chains() {
        let mv = |x: f64| MagnetizationVector::from_values(1, 1, vec![x]).unwrap();
        let a: Vec<_> = (0..103).map(|i| mv(i as f64)).collect();
        let b: Vec<_> = (0..100).map(|i| mv(-(i as f64))).collect();
        let est = pooled_moments(&[a, b], 10).unwrap();
        assert_eq!(est.batch_size, 20);
        assert_eq!(est.samples, 200);
        assert_eq!(est.effective_samples, 10.0);
    }
}
