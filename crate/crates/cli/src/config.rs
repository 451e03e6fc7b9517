//! Experiment configuration files.
//!
//! One TOML file per experiment. Only the `[model]` table is required; every
//! other section falls back to defaults. Flag overrides are applied on top.
//!
//! ```toml
//! experiment = "landscape_scan"
//! seed = 7
//! output_dir = "runs/landscape-mid"
//!
//! [model]
//! block_sizes = [25, 75]
//! q = 5
//! alpha = 0.5
//! beta = 1.0
//! norm = 3.65
//!
//! [landscape]
//! grid = 201
//! ```
//!
//! `model` may also be a path to a model file, resolved against the directory
//! of the config file. A `manifest.json` written by an earlier run is accepted
//! wherever a config is, and reruns the recorded configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use block_potts::sampling::{ChainConfig, InitialState};
use block_potts::{Model, ModelFile};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    CovarianceMc,
    CovarianceExact,
    LandscapeScan,
    FixedPoint,
    DualityGap,
    HsOracle,
    MdpTable,
    Sample,
    Exact,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::CovarianceMc => "covariance_mc",
            Experiment::CovarianceExact => "covariance_exact",
            Experiment::LandscapeScan => "landscape_scan",
            Experiment::FixedPoint => "fixed_point",
            Experiment::DualityGap => "duality_gap",
            Experiment::HsOracle => "hs_oracle",
            Experiment::MdpTable => "mdp_table",
            Experiment::Sample => "sample",
            Experiment::Exact => "exact",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(PathBuf),
    Inline(ModelFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default = "default_burn_in")]
    pub burn_in_sweeps: usize,
    pub sweeps: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default = "default_initial_state")]
    pub initial_state: InitialState,
    #[serde(default = "one")]
    pub chains: usize,
    /// Batches per run for the batch-means standard errors.
    #[serde(default = "default_batches")]
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    pub grid: usize,
    pub refine_steps: usize,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        LandscapeSection {
            grid: 201,
            refine_steps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointSection {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starts are the `starts_per_axis^s` grid points of `[0, 1]^s`.
    pub starts_per_axis: usize,
}

impl Default for FixedPointSection {
    fn default() -> Self {
        FixedPointSection {
            tolerance: 1e-12,
            max_iterations: 100_000,
            starts_per_axis: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CovarianceSection {
    /// System sizes for the exact ladder. The block proportions of `[model]`
    /// are kept fixed, so each `γ_k·N` must be an integer.
    pub ladder: Vec<usize>,
}

impl Default for CovarianceSection {
    fn default() -> Self {
        CovarianceSection {
            ladder: vec![20, 40, 80, 160],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualitySection {
    pub lower: f64,
    pub upper: f64,
    pub primal_resolutions: Vec<usize>,
    pub dual_resolution: usize,
    pub epsilon: f64,
}

impl Default for DualitySection {
    fn default() -> Self {
        DualitySection {
            lower: -0.05,
            upper: 0.6,
            primal_resolutions: vec![6, 11, 21, 41],
            dual_resolution: 60,
            epsilon: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsSection {
    pub theta: f64,
    /// Centering vector, length `s·q`. Defaults to `1/q` everywhere.
    pub v: Option<Vec<f64>>,
    pub half_width: f64,
    pub grid: usize,
    /// Compare against the exact law convolved with the Gaussian when the
    /// count space has at most this many states.
    pub oracle_limit: f64,
}

impl Default for HsSection {
    fn default() -> Self {
        HsSection {
            theta: 0.5,
            v: None,
            half_width: 4.0,
            grid: 41,
            oracle_limit: 1e5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdpSection {
    pub thetas: Vec<f64>,
    /// Points `t ∈ R^{s(q−1)}` at which the rate is tabulated.
    pub points: Vec<Vec<f64>>,
}

impl Default for MdpSection {
    fn default() -> Self {
        MdpSection {
            thetas: vec![0.1, 0.25, 0.4, 0.49, 0.5],
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub model: ModelSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub landscape: LandscapeSection,
    #[serde(default)]
    pub fixed_point: FixedPointSection,
    #[serde(default)]
    pub covariance: CovarianceSection,
    #[serde(default)]
    pub duality: DualitySection,
    #[serde(default)]
    pub hs: HsSection,
    #[serde(default)]
    pub mdp: MdpSection,
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub theta: Option<f64>,
}

fn default_burn_in() -> usize {
    1000
}
fn one() -> usize {
    1
}
fn default_initial_state() -> InitialState {
    InitialState::Uniform
}
fn default_batches() -> usize {
    block_potts::sampling::DEFAULT_BATCH_COUNT
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> LabResult<Self> {
        toml::from_str(text).map_err(|e| LabError::Config(e.message().to_string()))
    }

    /// Reads a TOML config, or the `config` of a JSON run manifest. Model
    /// paths are inlined so the result is self-contained.
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = read_input(path)?;
        let mut config = if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::manifest::RunManifest =
                serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            manifest.config
        } else {
            Self::from_toml_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?
        };
        if let ModelSource::Path(rel) = &config.model {
            let base = path.parent().unwrap_or(Path::new("."));
            let model_path = base.join(rel);
            let text = read_input(&model_path)?;
            config.model = ModelSource::Inline(ModelFile::from_toml_str(&text)?);
        }
        Ok(config)
    }

    pub fn model_file(&self) -> LabResult<&ModelFile> {
        match &self.model {
            ModelSource::Inline(m) => Ok(m),
            ModelSource::Path(p) => Err(LabError::Config(format!(
                "model path {} was not resolved; load the config from a file",
                p.display()
            ))),
        }
    }

    pub fn build_model(&self) -> LabResult<Model> {
        Ok(self.model_file()?.build()?)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(grid) = overrides.grid {
            self.landscape.grid = grid;
            self.hs.grid = grid;
            self.duality.primal_resolutions = vec![grid];
        }
        if let Some(theta) = overrides.theta {
            self.hs.theta = theta;
            self.mdp.thetas = vec![theta];
        }
    }

    pub fn chain_config(&self) -> LabResult<ChainConfig> {
        let chain = self
            .chain
            .as_ref()
            .ok_or_else(|| LabError::Config("this experiment needs a [chain] section".into()))?;
        Ok(ChainConfig {
            seed: self.seed,
            burn_in_sweeps: chain.burn_in_sweeps,
            sweeps: chain.sweeps,
            thinning: chain.thinning,
            initial_state: chain.initial_state,
        })
    }

    /// Checks the fields `experiment` needs before anything runs.
    pub fn validate(&self, experiment: Experiment, model: &Model) -> LabResult<()> {
        let bad = |msg: String| Err(LabError::Config(msg));
        match experiment {
            Experiment::CovarianceMc | Experiment::Sample => {
                self.chain_config()?.validate(model.q())?;
                let chain = self.chain.as_ref().expect("checked by chain_config");
                if chain.chains < 1 {
                    return bad("chain.chains must be at least 1".into());
                }
                if chain.batches < 2 {
                    return bad("chain.batches must be at least 2".into());
                }
            }
            Experiment::CovarianceExact => {
                if self.covariance.ladder.is_empty() {
                    return bad("covariance.ladder is empty".into());
                }
                for &n in &self.covariance.ladder {
                    ladder_block_sizes(model, n)?;
                }
            }
            Experiment::LandscapeScan | Experiment::FixedPoint => {
                let limit = block_potts::landscape::reduced::MAX_GRID_DIMENSION;
                if model.s() > limit {
                    return bad(format!("landscape scans need s <= {limit}, got s = {}", model.s()));
                }
                if self.landscape.grid < 2 {
                    return bad("landscape.grid must be at least 2".into());
                }
                if self.fixed_point.starts_per_axis < 1 {
                    return bad("fixed_point.starts_per_axis must be at least 1".into());
                }
                if !(self.fixed_point.tolerance > 0.0) {
                    return bad("fixed_point.tolerance must be positive".into());
                }
            }
            Experiment::DualityGap => {
                let d = &self.duality;
                if d.primal_resolutions.is_empty() || d.primal_resolutions.iter().any(|&r| r < 2) {
                    return bad("duality.primal_resolutions must be non-empty and each at least 2".into());
                }
                if !(d.lower < d.upper) {
                    return bad("duality.lower must be below duality.upper".into());
                }
                if d.dual_resolution < 1 {
                    return bad("duality.dual_resolution must be at least 1".into());
                }
                if !(d.epsilon > 0.0 && d.epsilon < 1.0 / model.q() as f64) {
                    return bad(format!("duality.epsilon must lie in (0, 1/q), got {}", d.epsilon));
                }
            }
            Experiment::HsOracle => {
                let h = &self.hs;
                if !(0.0..=0.5).contains(&h.theta) {
                    return Err(block_potts::Error::InvalidTheta(h.theta).into());
                }
                if let Some(v) = &h.v {
                    if v.len() != model.dim() {
                        return bad(format!("hs.v has length {}, expected s·q = {}", v.len(), model.dim()));
                    }
                }
                if !(h.half_width > 0.0) || h.grid < 2 {
                    return bad("hs.half_width must be positive and hs.grid at least 2".into());
                }
            }
            Experiment::MdpTable => {
                if self.mdp.thetas.is_empty() {
                    return bad("mdp.thetas is empty".into());
                }
                if let Some(&t) = self.mdp.thetas.iter().find(|t| !(**t > 0.0 && **t <= 0.5)) {
                    return Err(block_potts::Error::InvalidTheta(t).into());
                }
                let d = model.s() * (model.q() - 1);
                if let Some(p) = self.mdp.points.iter().find(|p| p.len() != d) {
                    return bad(format!("mdp point has length {}, expected s·(q−1) = {d}", p.len()));
                }
            }
            Experiment::Exact => {}
        }
        Ok(())
    }
}

fn read_input(path: &Path) -> LabResult<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Block sizes `γ_k·n`, which must be integers.
pub fn ladder_block_sizes(model: &Model, n: usize) -> LabResult<Vec<usize>> {
    model
        .gamma()
        .iter()
        .map(|g| {
            let size = g * n as f64;
            let rounded = size.round();
            if (size - rounded).abs() > 1e-9 || rounded < 1.0 {
                Err(LabError::Config(format!(
                    "N = {n} does not split into blocks with proportions {:?}",
                    model.gamma().as_slice()
                )))
            } else {
                Ok(rounded as usize)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[model]\nblock_sizes = [25, 75]\nq = 5\nalpha = 0.5\nbeta = 1.0\n";

    #[test]
    fn defaults_and_overrides() {
        let mut cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.landscape.grid, 201);
        assert_eq!(cfg.seed, 0);
        cfg.apply(&Overrides {
            seed: Some(9),
            grid: Some(51),
            theta: Some(0.3),
            ..Default::default()
        });
        assert_eq!((cfg.seed, cfg.landscape.grid, cfg.hs.grid), (9, 51, 51));
        assert_eq!(cfg.mdp.thetas, vec![0.3]);
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(ExperimentConfig::from_toml_str(&format!("{BASE}[landscape]\ngrd = 3\n")).is_err());
        assert!(ExperimentConfig::from_toml_str(&format!("bogus = 1\n{BASE}")).is_err());
    }

    #[test]
    fn validation_per_experiment() {
        let cfg = ExperimentConfig::from_toml_str(BASE).unwrap();
        let model = cfg.build_model().unwrap();
        assert!(cfg.validate(Experiment::LandscapeScan, &model).is_ok());
        assert!(cfg.validate(Experiment::CovarianceMc, &model).is_err());
        // 20·(1/4) is fine, 30·(1/4) is not
        assert_eq!(ladder_block_sizes(&model, 20).unwrap(), vec![5, 15]);
        assert!(ladder_block_sizes(&model, 30).is_err());
        let mut cfg = cfg;
        cfg.covariance.ladder = vec![20, 30];
        assert!(cfg.validate(Experiment::CovarianceExact, &model).is_err());
        cfg.hs.theta = 0.7;
        assert!(cfg.validate(Experiment::HsOracle, &model).unwrap_err().is_validation());
    }

    #[test]
    fn chain_section_round_trips() {
        let text = format!("{BASE}[chain]\nsweeps = 100\ninitial_state = {{ all_color = 2 }}\n");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let chain = cfg.chain_config().unwrap();
        assert_eq!(chain.initial_state, InitialState::AllColor(2));
        assert_eq!(chain.burn_in_sweeps, 1000);
        let back = ExperimentConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
