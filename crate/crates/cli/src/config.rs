//! Run configuration: everything a command needs, so that a manifest holding
//! the command name and this record can replay the run.

use std::path::{Path, PathBuf};

use ocn::scaling::{FitMode, SampleFilter};
use ocn::steiner::{BestOcnConfig, CURVE_SAMPLES};
use ocn::{GridSpec, OptimizerConfig64, RngSeed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSet {
    List(Vec<u64>),
    Range {
        count: usize,
        #[serde(default)]
        base: u64,
    },
}

impl Default for SeedSet {
    fn default() -> Self {
        SeedSet::List(vec![0])
    }
}

impl SeedSet {
    pub fn seeds(&self) -> Vec<RngSeed> {
        match self {
            SeedSet::List(v) => v.iter().map(|&s| RngSeed(s)).collect(),
            SeedSet::Range { count, base } => ocn::ensemble::seed_range(*base, *count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Emit {
    pub trees: bool,
    pub samples: bool,
    pub fits: bool,
    pub trajectories: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            trees: true,
            samples: true,
            fits: true,
            trajectories: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FilterPreset {
    /// Whole basins and all subbasins per dimension.
    #[default]
    LengthTable,
    /// The eight 3D volume populations.
    VolumeTable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Explicit filters; when empty the preset is used.
    pub filters: Vec<SampleFilter>,
    pub preset: FilterPreset,
    pub fit_mode: FitMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsConfig {
    pub n_min: u64,
    pub n_max: u64,
    pub gammas: Vec<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            n_min: 2,
            n_max: 80,
            gammas: vec![0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SteinerConfig {
    pub sizes: Vec<usize>,
    pub data_dir: PathBuf,
    pub tol: f64,
    pub batch: BestOcnConfig,
    pub curve_samples: usize,
}

impl Default for SteinerConfig {
    fn default() -> Self {
        Self {
            sizes: vec![2, 3, 4, 5],
            data_dir: PathBuf::from("data/steiner"),
            tol: 1e-15,
            batch: BestOcnConfig::default(),
            curve_samples: CURVE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub gamma: f64,
    pub optimizer: OptimizerConfig64,
    pub seeds: SeedSet,
    pub out: PathBuf,
    pub emit: Emit,
    /// Tree files consumed by `optimize` and `analyze`.
    pub inputs: Vec<PathBuf>,
    pub analysis: AnalysisConfig,
    pub bounds: BoundsConfig,
    pub steiner: SteinerConfig,
    /// Accepted moves between oracle cross-checks under `--verify`.
    pub verify_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::square(10),
            gamma: 0.5,
            optimizer: OptimizerConfig64::default(),
            seeds: SeedSet::default(),
            out: PathBuf::from("out"),
            emit: Emit::default(),
            inputs: Vec::new(),
            analysis: AnalysisConfig::default(),
            bounds: BoundsConfig::default(),
            steiner: SteinerConfig::default(),
            verify_every: 1000,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.seeds.seeds().is_empty() {
            return Err(Failure::Config("seed list is empty".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Failure::Config(format!(
                "gamma must lie in [0,1], got {}",
                self.gamma
            )));
        }
        self.grid.validate()?;
        self.optimizer_config(false)
            .validate(self.grid.node_count())?;
        if self.verify_every == 0 {
            return Err(Failure::Config("verify_every must be positive".into()));
        }
        Ok(())
    }

    /// Optimizer settings with the top-level `gamma` applied.
    pub fn optimizer_config(&self, verify: bool) -> OptimizerConfig64 {
        let mut c = self.optimizer.clone();
        c.gamma = self.gamma;
        if verify {
            c.verify_every = Some(self.verify_every);
        }
        c
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_sets() {
        let r: SeedSet = serde_json::from_str(r#"{"count":3,"base":5}"#).unwrap();
        assert_eq!(r.seeds(), vec![RngSeed(5), RngSeed(6), RngSeed(7)]);
        let l: SeedSet = serde_json::from_str("[4,2]").unwrap();
        assert_eq!(l.seeds(), vec![RngSeed(4), RngSeed(2)]);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"gamma":1.0,"grid":{"dimension":3,"side":4}}"#).unwrap();
        assert_eq!(c.grid.node_count(), 64);
        assert_eq!(c.optimizer_config(false).gamma, 1.0);
        assert!(serde_json::from_str::<RunConfig>(r#"{"gamm":1.0}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.gamma = 0.4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
