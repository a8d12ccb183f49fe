use alloc::format;
use alloc::vec::Vec;

use super::focal::{FocalSet, FocusWeights};
use super::multihead::{check_heads, multi_head_afa, multi_head_dense, AttentionParams};
use crate::rng::Rng;
use crate::tensor::init;
use crate::{Error, Graph, NodeId, ParamId, ParamStore, Result, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub d: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff_hidden: usize,
    pub focal: FocalSet,
    /// Length of the learned positional table; 0 disables positions.
    pub max_positions: usize,
    pub ln_eps: f64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        check_heads(self.d, self.heads)?;
        if self.layers == 0 {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        if self.ff_hidden == 0 {
            return Err(Error::Config("feed-forward width must be positive".into()));
        }
        Ok(())
    }
}

/// How the attention sublayers pick their focus.
#[derive(Debug, Clone, PartialEq)]
pub enum Focus {
    /// Gate the focal set with `softmax(gate · w + b)`.
    Learned,
    /// Use fixed weights, ignoring the question.
    Frozen(FocusWeights),
    /// Plain dense multi-head attention (the standard transformer encoder).
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerParams {
    pub attn: AttentionParams,
    pub ln1_gain: ParamId,
    pub ln1_bias: ParamId,
    pub ff_w1: ParamId,
    pub ff_b1: ParamId,
    pub ff_w2: ParamId,
    pub ff_b2: ParamId,
    pub ln2_gain: ParamId,
    pub ln2_bias: ParamId,
}

/// Transformer encoder whose attention sublayers use auto-focus attention.
#[derive(Debug, Clone, PartialEq)]
pub struct AftEncoder {
    pub config: EncoderConfig,
    pub layers: Vec<LayerParams>,
    /// `|F| × d` focus gate and its `1 × |F|` bias.
    pub gate_w: ParamId,
    pub gate_b: ParamId,
    pub positions: Option<ParamId>,
}

/// Encoder output `M` together with the focus weights used (absent for dense attention).
#[derive(Debug, Clone, Copy)]
pub struct EncoderOutput {
    pub m: NodeId,
    pub alpha: Option<NodeId>,
}

impl AftEncoder {
    pub fn init(store: &mut ParamStore, prefix: &str, config: EncoderConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let p = format!("{prefix}.layer{l}");
            layers.push(LayerParams {
                attn: AttentionParams::init(store, &format!("{p}.attn"), d, config.heads, rng)?,
                ln1_gain: init::ones(store, &format!("{p}.ln1.gain"), d)?,
                ln1_bias: init::zeros(store, &format!("{p}.ln1.bias"), d)?,
                ff_w1: init::weight(store, &format!("{p}.ff.w1"), config.ff_hidden, d, rng)?,
                ff_b1: init::zeros(store, &format!("{p}.ff.b1"), config.ff_hidden)?,
                ff_w2: init::weight(store, &format!("{p}.ff.w2"), d, config.ff_hidden, rng)?,
                ff_b2: init::zeros(store, &format!("{p}.ff.b2"), d)?,
                ln2_gain: init::ones(store, &format!("{p}.ln2.gain"), d)?,
                ln2_bias: init::zeros(store, &format!("{p}.ln2.bias"), d)?,
            });
        }
        let nf = config.focal.len();
        // A zero gate starts every question at uniform focus.
        let gate_w = store.insert(&format!("{prefix}.gate.w"), Tensor::zeros(&[nf, d]))?;
        let gate_b = init::zeros(store, &format!("{prefix}.gate.b"), nf)?;
        let positions = match config.max_positions {
            0 => None,
            n => Some(init::table(store, &format!("{prefix}.positions"), n, d, 0.1, rng)?),
        };
        Ok(AftEncoder {
            config,
            layers,
            gate_w,
            gate_b,
            positions,
        })
    }

    /// Focus weights `softmax(gate · w + b)` for a `1 × d` question vector.
    pub fn focus(&self, g: &mut Graph, store: &ParamStore, w: NodeId) -> Result<NodeId> {
        let gw = g.param(store, self.gate_w);
        let gb = g.param(store, self.gate_b);
        let logits = g.linear(w, gw, gb)?;
        Ok(g.softmax_rows(logits))
    }

    /// Encodes frames `r` (`N × d`). The focus weights are computed once from
    /// `w` and shared by every layer and head.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, r: NodeId, w: NodeId, focus: &Focus) -> Result<EncoderOutput> {
        let (n, d) = g.dims(r);
        if d != self.config.d {
            return Err(Error::shape("encoder input", &[n, d], &[n, self.config.d]));
        }
        let alpha = match focus {
            Focus::Learned => Some(self.focus(g, store, w)?),
            Focus::Frozen(a) => {
                if a.len() != self.config.focal.len() {
                    return Err(Error::Simplex(format!("{} frozen weights for {} foci", a.len(), self.config.focal.len())));
                }
                a.validate()?;
                Some(g.constant(1, a.len(), a.values().to_vec())?)
            }
            Focus::Dense => None,
        };
        let mut x = r;
        if let Some(pos) = self.positions {
            let table = g.param(store, pos);
            let max = g.dims(table).0;
            if n > max {
                return Err(Error::Index {
                    what: "positional table",
                    index: n,
                    bound: max,
                });
            }
            let p = g.slice_rows(table, 0, n)?;
            x = g.add(x, p)?;
        }
        let eps = self.config.ln_eps;
        for layer in &self.layers {
            let att = match alpha {
                Some(a) => multi_head_afa(g, store, x, &layer.attn, a, &self.config.focal)?,
                None => multi_head_dense(g, store, x, &layer.attn)?,
            };
            let h = g.add(x, att)?;
            let (g1, b1) = (g.param(store, layer.ln1_gain), g.param(store, layer.ln1_bias));
            let h = g.layer_norm(h, g1, b1, eps)?;
            let (w1, bb1) = (g.param(store, layer.ff_w1), g.param(store, layer.ff_b1));
            let f = g.linear(h, w1, bb1)?;
            let f = g.relu(f);
            let (w2, bb2) = (g.param(store, layer.ff_w2), g.param(store, layer.ff_b2));
            let f = g.linear(f, w2, bb2)?;
            let h2 = g.add(h, f)?;
            let (g2, b2) = (g.param(store, layer.ln2_gain), g.param(store, layer.ln2_bias));
            x = g.layer_norm(h2, g2, b2, eps)?;
        }
        Ok(EncoderOutput { m: x, alpha })
    }
}

/// Runs the encoder eagerly on plain tensors and returns `M`.
pub fn aft_encoder_forward(encoder: &AftEncoder, store: &ParamStore, r: &Tensor, w: &[f64], focus: &Focus) -> Result<Tensor> {
    let mut g = Graph::new();
    let rn = g.input(r);
    let wn = g.constant(1, w.len(), w.to_vec())?;
    let out = encoder.forward(&mut g, store, rn, wn, focus)?;
    Ok(g.tensor(out.m))
}
