//! The trainable models behind one enum, and their construction from a config.

use std::fmt;
use std::str::FromStr;
use std::thread;

use aft_core::attention::Focus;
use aft_core::model::{AftModel, BlindQa, ModelConfig};
use aft_core::tensor::kernels::argmax;
use aft_core::train::{self, EpochLog, Focused, QaModel, Sample, TrainConfig, TrainReport};
use aft_core::{rng, Graph, ParamStore};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Auto-focus transformer with the learned gate.
    Aft,
    /// The same network with plain dense attention.
    Dense,
    Blind,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Aft, ModelKind::Dense, ModelKind::Blind];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Aft => "aft",
            ModelKind::Dense => "dense",
            ModelKind::Blind => "blind",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown model {s:?}; expected aft, dense or blind")))
    }
}

#[derive(Debug, Clone)]
pub enum Network {
    Video(AftModel),
    Blind(BlindQa),
}

/// A model, its parameters and the focus mode it runs under.
#[derive(Debug, Clone)]
pub struct Trainable {
    pub kind: ModelKind,
    pub network: Network,
    pub store: ParamStore,
}

impl Trainable {
    /// Fresh parameters drawn from the `init` stream of `seed`.
    pub fn init(kind: ModelKind, config: &ModelConfig, seed: u64) -> CliResult<Self> {
        let mut store = ParamStore::new();
        let mut r = rng::derive(seed, "init");
        let network = match kind {
            ModelKind::Aft | ModelKind::Dense => Network::Video(AftModel::init(&mut store, "aft", config, &mut r)?),
            ModelKind::Blind => Network::Blind(BlindQa::init(&mut store, "blind", config, &mut r)?),
        };
        Ok(Trainable { kind, network, store })
    }

    pub fn config(&self) -> &ModelConfig {
        match &self.network {
            Network::Video(m) => &m.config,
            Network::Blind(m) => &m.config,
        }
    }

    pub fn focus(&self) -> Focus {
        match self.kind {
            ModelKind::Dense => Focus::Dense,
            _ => Focus::Learned,
        }
    }

    fn with_model<R>(&self, f: impl FnOnce(&dyn QaModelDyn) -> R) -> R {
        match &self.network {
            Network::Video(m) => f(&Focused {
                model: m,
                focus: self.focus(),
            }),
            Network::Blind(m) => f(m),
        }
    }

    /// Trains in place; the store ends at the best-validation parameters.
    pub fn train(
        &mut self,
        train_set: &[Sample<'_>],
        val_set: &[Sample<'_>],
        config: &TrainConfig,
        on_epoch: impl FnMut(&EpochLog),
    ) -> CliResult<TrainReport> {
        let report = match &self.network {
            Network::Video(m) => {
                let model = Focused {
                    model: m,
                    focus: self.focus(),
                };
                train::train(&model, &mut self.store, train_set, val_set, config, on_epoch)?
            }
            Network::Blind(m) => train::train(m, &mut self.store, train_set, val_set, config, on_epoch)?,
        };
        Ok(report)
    }

    /// Predicted class per sample, spread over worker threads that share the
    /// parameters read-only. The result does not depend on the thread count.
    pub fn predict(&self, samples: &[Sample<'_>]) -> CliResult<Vec<usize>> {
        let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(samples.len().max(1));
        let chunk = samples.len().div_ceil(workers).max(1);
        self.with_model(|model| {
            thread::scope(|scope| {
                let handles: Vec<_> = samples
                    .chunks(chunk)
                    .map(|part| scope.spawn(move || part.iter().map(|s| model.predict_one(&self.store, s)).collect::<CliResult<Vec<_>>>()))
                    .collect();
                let mut out = Vec::with_capacity(samples.len());
                for h in handles {
                    out.extend(h.join().expect("prediction worker panicked")?);
                }
                Ok(out)
            })
        })
    }

    /// Gate output per question; `None` for models without a learned gate.
    pub fn focus_weights(&self, tokens: &[usize]) -> CliResult<Option<Vec<f64>>> {
        match (&self.network, self.kind) {
            (Network::Video(m), ModelKind::Aft) => Ok(Some(m.focus_weights(&self.store, tokens)?)),
            _ => Ok(None),
        }
    }
}

/// Object-safe view of [`QaModel`] used for thread fan-out.
trait QaModelDyn: Sync {
    fn predict_one(&self, store: &ParamStore, sample: &Sample<'_>) -> CliResult<usize>;
}

impl<M: QaModel + Sync> QaModelDyn for M {
    fn predict_one(&self, store: &ParamStore, sample: &Sample<'_>) -> CliResult<usize> {
        let mut g = Graph::new();
        let logits = self.logits(&mut g, store, sample)?;
        Ok(argmax(g.value(logits)))
    }
}

/// Fills data-derived model sizes (vocabulary, classes, feature widths,
/// positions) and rejects explicit values that disagree with the dataset.
pub fn resolve_model_config(config: &ModelConfig, data: &Dataset) -> CliResult<ModelConfig> {
    let (frames, da, dm) = data.feature_dims()?;
    let mut m = config.clone();
    let fill = |field: &str, slot: &mut usize, actual: usize| -> CliResult<()> {
        match *slot {
            0 => {
                *slot = actual;
                Ok(())
            }
            v if v == actual => Ok(()),
            v => Err(CliError::Config(format!("model.{field} = {v} but the dataset has {actual}"))),
        }
    };
    fill("vocab_size", &mut m.vocab_size, data.vocab.len())?;
    fill("classes", &mut m.classes, data.pool.len())?;
    fill("d_appearance", &mut m.d_appearance, da)?;
    fill("d_motion", &mut m.d_motion, dm)?;
    if m.max_positions != 0 && m.max_positions < frames {
        return Err(CliError::Config(format!(
            "model.max_positions = {} is shorter than the {frames}-frame episodes",
            m.max_positions
        )));
    }
    m.validate()?;
    Ok(m)
}
