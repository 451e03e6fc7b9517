//! CSV writers for chain output and exact distributions.

use std::io::{self, Write};

use crate::csv::{fmt_f64, join_f64};
use crate::sampling::chain::ChainSample;
use crate::sampling::exact::ExactDistribution;

/// `prefix_1_1,...,prefix_s_q` with 1-based block and color labels.
pub fn block_color_header(prefix: &str, s: usize, q: usize) -> String {
    let mut cols = Vec::with_capacity(s * q);
    for k in 1..=s {
        for c in 1..=q {
            cols.push(format!("{prefix}_{k}_{c}"));
        }
    }
    cols.join(",")
}

pub fn write_samples<W: Write>(out: &mut W, s: usize, q: usize, samples: &[ChainSample]) -> io::Result<()> {
    writeln!(out, "chain,sweep,{}", block_color_header("m", s, q))?;
    for sample in samples {
        writeln!(
            out,
            "{},{},{}",
            sample.chain,
            sample.sweep,
            join_f64(sample.m.values().iter().copied())
        )?;
    }
    Ok(())
}

pub fn write_exact<W: Write>(out: &mut W, dist: &ExactDistribution) -> io::Result<()> {
    let Some(first) = dist.support.first() else {
        return Ok(());
    };
    writeln!(out, "{},log_prob", block_color_header("n", first.s(), first.q()))?;
    for (counts, lp) in dist.support.iter().zip(dist.log_probabilities()) {
        let cols: Vec<String> = counts.as_flat().iter().map(|n| n.to_string()).collect();
        writeln!(out, "{},{}", cols.join(","), fmt_f64(lp))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MagnetizationVector, Model, ModelSpec};
    use crate::sampling::exact::exact_count_distribution;
    use nalgebra::DMatrix;

    #[test]
    fn sample_csv_layout() {
        let m = MagnetizationVector::from_values(1, 2, vec![0.25, 0.75]).unwrap();
        let samples = vec![ChainSample { chain: 0, sweep: 1, m }];
        let mut buf = Vec::new();
        write_samples(&mut buf, 1, 2, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "chain,sweep,m_1_1,m_1_2");
        let fields: Vec<_> = lines[1].split(',').collect();
        assert_eq!(fields[0], "0");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn exact_csv_probabilities_sum_to_one() {
        let model = Model::new(ModelSpec::new(
            vec![3, 2],
            2,
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]),
        ))
        .unwrap();
        let dist = exact_count_distribution(&model).unwrap();
        let mut buf = Vec::new();
        write_exact(&mut buf, &dist).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n_1_1,n_1_2,n_2_1,n_2_2,log_prob");
        let total: f64 = lines
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap().exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
