//! Mini-batch training with Adam and cross-entropy, keeping the parameters
//! of the epoch with the best validation accuracy.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::attention::Focus;
use crate::model::{AftModel, BlindQa};
use crate::tensor::kernels::argmax;
use crate::tensor::{Adam, AdamConfig};
use crate::{metrics, rng, Error, Graph, NodeId, ParamStore, Result, Tensor};

/// One training or evaluation example.
#[derive(Debug, Clone)]
pub struct Sample<'a> {
    pub appearance: &'a Tensor,
    pub motion: &'a Tensor,
    pub tokens: Vec<usize>,
    pub label: usize,
}

/// Anything that maps a sample to `1 × C` logits inside a graph.
pub trait QaModel {
    fn logits(&self, g: &mut Graph, store: &ParamStore, sample: &Sample<'_>) -> Result<NodeId>;
}

impl QaModel for BlindQa {
    fn logits(&self, g: &mut Graph, store: &ParamStore, sample: &Sample<'_>) -> Result<NodeId> {
        self.forward(g, store, &sample.tokens)
    }
}

/// An AFT model run under a fixed focus mode.
#[derive(Debug, Clone)]
pub struct Focused<'a> {
    pub model: &'a AftModel,
    pub focus: Focus,
}

impl QaModel for Focused<'_> {
    fn logits(&self, g: &mut Graph, store: &ParamStore, s: &Sample<'_>) -> Result<NodeId> {
        Ok(self
            .model
            .forward(g, store, s.appearance, s.motion, &s.tokens, &self.focus)?
            .logits)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// 0 when no epoch beat the initial parameters (or none ran).
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
}

/// Predicted class per sample (lowest index wins ties).
pub fn predict<M: QaModel>(model: &M, store: &ParamStore, samples: &[Sample<'_>]) -> Result<Vec<usize>> {
    samples
        .iter()
        .map(|s| {
            let mut g = Graph::new();
            let l = model.logits(&mut g, store, s)?;
            Ok(argmax(g.value(l)))
        })
        .collect()
}

pub fn accuracy<M: QaModel>(model: &M, store: &ParamStore, samples: &[Sample<'_>]) -> Result<f64> {
    let pred = predict(model, store, samples)?;
    let gold: Vec<usize> = samples.iter().map(|s| s.label).collect();
    metrics::accuracy(&pred, &gold)
}

fn snapshot(store: &ParamStore) -> Vec<Vec<f64>> {
    store.iter().map(|(_, t)| t.data().to_vec()).collect()
}

fn restore(store: &mut ParamStore, snap: &[Vec<f64>]) -> Result<()> {
    let ids: Vec<_> = store.ids().collect();
    for (id, data) in ids.into_iter().zip(snap) {
        store.set_data(id, data)?;
    }
    Ok(())
}

/// Trains `model` in place. Each epoch shuffles the training set under the
/// configured seed, steps Adam on the mean loss of every batch, then scores
/// the validation set. On return the store holds the best-validation
/// parameters; ties keep the earlier epoch. `on_epoch` sees every log row.
pub fn train<M: QaModel>(
    model: &M,
    store: &mut ParamStore,
    train_set: &[Sample<'_>],
    val_set: &[Sample<'_>],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if train_set.is_empty() && config.epochs > 0 {
        return Err(Error::Data("empty training set".into()));
    }
    let mut opt = Adam::new(config.adam, store);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffler = rng::derive(config.seed, "shuffle");
    let mut best = (f64::NEG_INFINITY, 0usize, snapshot(store));
    let mut logs = Vec::with_capacity(config.epochs);
    store.zero_grad();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffler);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(config.batch_size) {
            for &i in batch {
                let s = &train_set[i];
                let mut g = Graph::new();
                let logits = model.logits(&mut g, store, s)?;
                if argmax(g.value(logits)) == s.label {
                    correct += 1;
                }
                let loss = g.cross_entropy(logits, &[s.label])?;
                loss_sum += g.scalar(loss);
                g.backward(loss, store)?;
            }
            opt.step(store, 1.0 / batch.len() as f64)?;
        }
        let val_accuracy = if val_set.is_empty() { 0.0 } else { accuracy(model, store, val_set)? };
        let log = EpochLog {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_accuracy,
        };
        on_epoch(&log);
        if val_accuracy > best.0 {
            best = (val_accuracy, epoch, snapshot(store));
        }
        logs.push(log);
    }
    restore(store, &best.2)?;
    store.clear_grad();
    Ok(TrainReport {
        epochs: logs,
        best_epoch: best.1,
        best_val_accuracy: if best.0.is_finite() { best.0 } else { 0.0 },
    })
}
