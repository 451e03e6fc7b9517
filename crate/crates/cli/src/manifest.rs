//! Run directories: every file goes through one [`RunWriter`], which records
//! a checksum per output, and the run ends with a `manifest.json`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use block_potts::landscape::{contraction_bound, hessian_certificate};
use block_potts::limit::clt_threshold;
use block_potts::{critical_thresholds, Model, Regime};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{LabError, LabResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Scalars that depend only on the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub q: usize,
    pub gamma: Vec<f64>,
    pub norm: f64,
    pub zeta_q: f64,
    pub fixed_point_threshold: f64,
    pub clt_threshold: f64,
    pub regime: Regime,
    pub contraction_bound: f64,
    /// Smallest eigenvalue of the Hessian of `φ` at the uniform point.
    pub hessian_min_eigenvalue: f64,
    pub hessian_positive: bool,
}

impl DerivedScalars {
    pub fn compute(model: &Model) -> LabResult<Self> {
        let thresholds = critical_thresholds(model)?;
        let certificate = hessian_certificate(model)?;
        Ok(DerivedScalars {
            n: model.n(),
            block_sizes: model.block_sizes().to_vec(),
            q: model.q(),
            gamma: model.gamma().iter().copied().collect(),
            norm: thresholds.norm,
            zeta_q: thresholds.zeta_q,
            fixed_point_threshold: thresholds.fixed_point_threshold,
            clt_threshold: clt_threshold(model)?,
            regime: thresholds.regime,
            contraction_bound: contraction_bound(model),
            hessian_min_eigenvalue: certificate.lambda_min,
            hessian_positive: certificate.positive,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: Experiment,
    /// Effective configuration after flag overrides, with the model inlined.
    pub config: ExperimentConfig,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub derived: DerivedScalars,
    /// Experiment-specific summary.
    pub results: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn read(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct RunWriter {
    dir: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl RunWriter {
    pub fn create(dir: &Path) -> LabResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.outputs
    }

    /// Renders `name` in memory, then writes it and records its checksum.
    pub fn write<F>(&mut self, name: &str, render: F) -> LabResult<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        render(&mut buf).map_err(|e| LabError::io(&path, e))?;
        std::fs::write(&path, &buf).map_err(|e| LabError::io(&path, e))?;
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            bytes: buf.len(),
            sha256: sha256_hex(&buf),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> LabResult<PathBuf> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, |w| writeln!(w, "{text}"))
    }

    /// Writes `manifest.json`, which is not itself listed among the outputs.
    pub fn finish(self, mut manifest: RunManifest) -> LabResult<RunManifest> {
        manifest.outputs = self.outputs;
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, format!("{text}\n")).map_err(|e| LabError::io(&path, e))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn writer_records_checksums() {
        let dir = std::env::temp_dir().join(format!("potts-lab-writer-{}", std::process::id()));
        let mut w = RunWriter::create(&dir).unwrap();
        w.write("a.csv", |b| b.write_all(b"x\n1\n")).unwrap();
        w.write("a.csv", |b| b.write_all(b"x\n2\n")).unwrap();
        assert_eq!(w.outputs().len(), 1);
        assert_eq!(w.outputs()[0].sha256, sha256_hex(b"x\n2\n"));
        assert_eq!(std::fs::read(dir.join("a.csv")).unwrap(), b"x\n2\n");
        std::fs::remove_dir_all(dir).unwrap();
    }
}
