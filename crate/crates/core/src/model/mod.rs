//! Question-answering models: the auto-focus transformer, its dense
//! baseline, the question-only baseline and the two random baselines.

mod aft;
mod baselines;
mod blind;
mod fusion;

pub use aft::{aft_model_forward, AftModel, ModelOutput};
pub use baselines::{answer_kind, constrained_classes, random_baseline, semantic_aware_random, AnswerKind};
pub use blind::{blindqa_forward, BlindQa};
pub use fusion::{fuse_and_classify, project_frames, FusionHead};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::attention::{EncoderConfig, FocalSet};
use crate::data::AnswerPool;
use crate::{Error, Result};

/// Shapes and sizes of every model in this module.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    pub d: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff_hidden: usize,
    pub focal: FocalSet,
    pub max_positions: usize,
    pub ln_eps: f64,
    /// Hidden width of each direction of the question GRU.
    pub text_hidden: usize,
    /// Hidden width of the question-only decoder.
    pub blind_hidden: usize,
    /// The last four sizes depend on the data and default to 0 (unset);
    /// they must be filled in before a model is built.
    pub d_appearance: usize,
    pub d_motion: usize,
    pub vocab_size: usize,
    pub classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 64,
            heads: 4,
            layers: 2,
            ff_hidden: 128,
            focal: FocalSet::new(alloc::vec![3, 9, 80]).expect("valid"),
            max_positions: 128,
            ln_eps: 1e-5,
            text_hidden: 64,
            blind_hidden: 128,
            d_appearance: 0,
            d_motion: 0,
            vocab_size: 0,
            classes: 0,
        }
    }
}

impl ModelConfig {
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            d: self.d,
            heads: self.heads,
            layers: self.layers,
            ff_hidden: self.ff_hidden,
            focal: self.focal.clone(),
            max_positions: self.max_positions,
            ln_eps: self.ln_eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder().validate()?;
        if self.text_hidden == 0 || self.blind_hidden == 0 || self.d_appearance == 0 || self.d_motion == 0 {
            return Err(Error::Config("model widths must be positive".into()));
        }
        if self.vocab_size < 2 {
            return Err(Error::Config("vocabulary needs at least the pad and unknown tokens".into()));
        }
        if self.classes < 2 {
            return Err(Error::Config("answer space needs at least two classes".into()));
        }
        Ok(())
    }
}

/// Ordered answer labels; class ids are positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerSpace {
    labels: Vec<String>,
}

impl AnswerSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(Error::Data("answer labels must be unique".into()));
        }
        if labels.len() < 2 {
            return Err(Error::Data("answer space needs at least two classes".into()));
        }
        Ok(AnswerSpace { labels })
    }

    pub fn from_pool(pool: &AnswerPool) -> Result<Self> {
        Self::new(pool.labels().to_vec())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, class: usize) -> Option<&str> {
        self.labels.get(class).map(String::as_str)
    }

    pub fn class_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}
