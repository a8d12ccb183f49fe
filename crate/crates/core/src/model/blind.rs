use alloc::format;
use alloc::vec::Vec;

use super::ModelConfig;
use crate::rng::Rng;
use crate::tensor::init;
use crate::text::TextEncoder;
use crate::{Graph, NodeId, ParamId, ParamStore, Result};

/// Question-only baseline: the question encoder followed by a one-hidden-layer
/// MLP decoder over the global vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindQa {
    pub config: ModelConfig,
    pub text: TextEncoder,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

impl BlindQa {
    pub fn init(store: &mut ParamStore, prefix: &str, config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let (d, h) = (config.d, config.blind_hidden);
        Ok(BlindQa {
            text: TextEncoder::init(store, &format!("{prefix}.text"), config.vocab_size, d, config.text_hidden, rng)?,
            w1: init::weight(store, &format!("{prefix}.mlp.w1"), h, d, rng)?,
            b1: init::zeros(store, &format!("{prefix}.mlp.b1"), h)?,
            w2: init::weight(store, &format!("{prefix}.mlp.w2"), config.classes, h, rng)?,
            b2: init::zeros(store, &format!("{prefix}.mlp.b2"), config.classes)?,
            config: config.clone(),
        })
    }

    pub fn forward(&self, g: &mut Graph, store: &ParamStore, tokens: &[usize]) -> Result<NodeId> {
        let q = self.text.encode(g, store, tokens)?;
        let (w1, b1) = (g.param(store, self.w1), g.param(store, self.b1));
        let h = g.linear(q.w, w1, b1)?;
        let h = g.relu(h);
        let (w2, b2) = (g.param(store, self.w2), g.param(store, self.b2));
        g.linear(h, w2, b2)
    }
}

/// Eager question-only logits.
pub fn blindqa_forward(model: &BlindQa, store: &ParamStore, tokens: &[usize]) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let logits = model.forward(&mut g, store, tokens)?;
    Ok(g.value(logits).to_vec())
}
