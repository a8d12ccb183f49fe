use std::fs;
use std::path::{Path, PathBuf};

use aft_core::data::CorpusConfig;
use aft_core::model::ModelConfig;
use aft_core::train::TrainConfig;
use aft_core::attention::FocalSet;
use serde::{Deserialize, Serialize};

use crate::error::{io_at, CliError, CliResult};

/// Attention benchmark settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n: usize,
    pub focal: FocalSet,
    pub heads: usize,
    pub d: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 1024,
            focal: FocalSet::new(vec![3, 9, 80]).expect("valid"),
            heads: 4,
            d: 64,
            repetitions: 5,
            seed: 0,
        }
    }
}

/// Everything one run needs. The data-dependent model sizes (`vocab_size`,
/// `classes`, `d_appearance`, `d_motion`) are filled from the dataset when
/// left at 0; a non-zero value must match it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: PathBuf,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: CorpusConfig,
    pub bench: BenchConfig,
}

/// The desk-scale settings shipped as `configs/desk.toml`.
impl Default for RunConfig {
    fn default() -> Self {
        let mut data = CorpusConfig {
            episodes_per_sport: 2334,
            questions_per_episode: 5,
            ratios: [5.0 / 7.0, 1.0 / 7.0, 1.0 / 7.0],
            ..CorpusConfig::default()
        };
        data.episode.min_duration = 8;
        data.episode.max_duration = 16;
        let mut train = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };
        train.adam.lr = 2e-3;
        RunConfig {
            out: PathBuf::from("runs/desk"),
            model: ModelConfig::default(),
            train,
            data,
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Sets every named seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.data.seed = seed;
        self.train.seed = seed;
        self.bench.seed = seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        let mut m = self.model.clone();
        m.vocab_size = m.vocab_size.max(2);
        m.classes = m.classes.max(2);
        m.d_appearance = m.d_appearance.max(1);
        m.d_motion = m.d_motion.max(1);
        m.validate()?;
        self.data.validate()?;
        let sum: f64 = self.data.ratios.iter().sum();
        if self.data.ratios.iter().any(|r| *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CliError::Config(format!("split ratios {:?} must sum to 1", self.data.ratios)));
        }
        if self.train.batch_size == 0 {
            return Err(CliError::Config("batch size must be positive".into()));
        }
        if !(self.train.adam.lr > 0.0) {
            return Err(CliError::Config("learning rate must be positive".into()));
        }
        if self.bench.n < 2 || self.bench.repetitions < 3 {
            return Err(CliError::Config("bench needs n >= 2 and at least 3 repetitions".into()));
        }
        if self.bench.heads == 0 || self.bench.d % self.bench.heads != 0 {
            return Err(CliError::Config("bench width must be divisible by its head count".into()));
        }
        Ok(())
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_toml()).map_err(io_at(path))
    }
}
