use alloc::format;
use alloc::vec::Vec;

use crate::rng::Rng;
use crate::tensor::init;
use crate::{Error, Graph, NodeId, ParamId, ParamStore, Result, Tensor};

/// `R[t] = P · [appearance[t]; motion[t]]` with `P` of shape `d × (d_a + d_m)`.
pub fn project_frames(appearance: &Tensor, motion: &Tensor, projection: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let a = g.input(appearance);
    let m = g.input(motion);
    let p = g.input(projection);
    let r = frames_node(&mut g, a, m, p)?;
    Ok(g.tensor(r))
}

pub(crate) fn frames_node(g: &mut Graph, appearance: NodeId, motion: NodeId, projection: NodeId) -> Result<NodeId> {
    let (na, _) = g.dims(appearance);
    let (nm, _) = g.dims(motion);
    if na != nm {
        return Err(Error::shape("project_frames", &[na], &[nm]));
    }
    let x = g.concat_cols(&[appearance, motion])?;
    g.matmul_bt(x, projection)
}

/// Gated fusion of pooled video and question vectors followed by a linear
/// answer head: `s = σ(U [m̄; w] + u) ⊙ (P_m m̄ + P_w w + b)`, `logits = H s + h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionHead {
    pub gate_w: ParamId,
    pub gate_b: ParamId,
    pub video_w: ParamId,
    pub question_w: ParamId,
    pub blend_b: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl FusionHead {
    pub fn init(store: &mut ParamStore, prefix: &str, d: usize, classes: usize, rng: &mut Rng) -> Result<Self> {
        Ok(FusionHead {
            gate_w: init::weight(store, &format!("{prefix}.gate.w"), d, 2 * d, rng)?,
            gate_b: init::zeros(store, &format!("{prefix}.gate.b"), d)?,
            video_w: init::weight(store, &format!("{prefix}.video.w"), d, d, rng)?,
            question_w: init::weight(store, &format!("{prefix}.question.w"), d, d, rng)?,
            blend_b: init::zeros(store, &format!("{prefix}.blend.b"), d)?,
            out_w: init::weight(store, &format!("{prefix}.out.w"), classes, d, rng)?,
            out_b: init::zeros(store, &format!("{prefix}.out.b"), classes)?,
        })
    }

    /// Logits `1 × C` from encoder output `m` (`N × d`) and question `w` (`1 × d`).
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, m: NodeId, w: NodeId) -> Result<NodeId> {
        let pooled = g.mean_rows(m);
        let z = g.concat_cols(&[pooled, w])?;
        let (uw, ub) = (g.param(store, self.gate_w), g.param(store, self.gate_b));
        let gate = g.linear(z, uw, ub)?;
        let gate = g.sigmoid(gate);
        let (pv, pq, pb) = (
            g.param(store, self.video_w),
            g.param(store, self.question_w),
            g.param(store, self.blend_b),
        );
        let v = g.matmul_bt(pooled, pv)?;
        let q = g.linear(w, pq, pb)?;
        let blend = g.add(v, q)?;
        let s = g.mul(gate, blend)?;
        let (ow, ob) = (g.param(store, self.out_w), g.param(store, self.out_b));
        g.linear(s, ow, ob)
    }
}

/// Eager fusion and classification of an encoder output.
pub fn fuse_and_classify(head: &FusionHead, store: &ParamStore, m: &Tensor, w: &[f64]) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let mn = g.input(m);
    let wn = g.constant(1, w.len(), w.to_vec())?;
    let logits = head.forward(&mut g, store, mn, wn)?;
    Ok(g.value(logits).to_vec())
}
