use alloc::format;
use alloc::vec::Vec;

use super::fusion::{frames_node, FusionHead};
use super::ModelConfig;
use crate::attention::{AftEncoder, Focus};
use crate::rng::Rng;
use crate::tensor::init;
use crate::text::TextEncoder;
use crate::{Graph, NodeId, ParamId, ParamStore, Result, Tensor};

/// Frames and question in, answer logits out.
#[derive(Debug, Clone, PartialEq)]
pub struct AftModel {
    pub config: ModelConfig,
    pub text: TextEncoder,
    /// `d × (d_a + d_m)` frame projection.
    pub frame_proj: ParamId,
    pub encoder: AftEncoder,
    pub head: FusionHead,
}

/// Graph nodes of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ModelOutput {
    pub logits: NodeId,
    pub alpha: Option<NodeId>,
}

impl AftModel {
    pub fn init(store: &mut ParamStore, prefix: &str, config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        Ok(AftModel {
            text: TextEncoder::init(store, &format!("{prefix}.text"), config.vocab_size, d, config.text_hidden, rng)?,
            frame_proj: init::weight(
                store,
                &format!("{prefix}.frames.w"),
                d,
                config.d_appearance + config.d_motion,
                rng,
            )?,
            encoder: AftEncoder::init(store, &format!("{prefix}.encoder"), config.encoder(), rng)?,
            head: FusionHead::init(store, &format!("{prefix}.head"), d, config.classes, rng)?,
            config: config.clone(),
        })
    }

    pub fn forward(
        &self,
        g: &mut Graph,
        store: &ParamStore,
        appearance: &Tensor,
        motion: &Tensor,
        tokens: &[usize],
        focus: &Focus,
    ) -> Result<ModelOutput> {
        let q = self.text.encode(g, store, tokens)?;
        let a = g.input(appearance);
        let m = g.input(motion);
        let p = g.param(store, self.frame_proj);
        let r = frames_node(g, a, m, p)?;
        let enc = self.encoder.forward(g, store, r, q.w, focus)?;
        let logits = self.head.forward(g, store, enc.m, q.w)?;
        Ok(ModelOutput {
            logits,
            alpha: enc.alpha,
        })
    }

    /// Focus weights the gate assigns to a question.
    pub fn focus_weights(&self, store: &ParamStore, tokens: &[usize]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let q = self.text.encode(&mut g, store, tokens)?;
        let a = self.encoder.focus(&mut g, store, q.w)?;
        Ok(g.value(a).to_vec())
    }
}

/// Eager forward pass returning the logits.
pub fn aft_model_forward(
    model: &AftModel,
    store: &ParamStore,
    appearance: &Tensor,
    motion: &Tensor,
    tokens: &[usize],
    focus: &Focus,
) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let out = model.forward(&mut g, store, appearance, motion, tokens, focus)?;
    Ok(g.value(out.logits).to_vec())
}
