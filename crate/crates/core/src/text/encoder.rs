use alloc::format;
use alloc::vec::Vec;

use crate::rng::Rng;
use crate::tensor::init;
use crate::{Error, Graph, NodeId, ParamId, ParamStore, Result, Tensor};

/// One direction of a gated recurrent unit. Gate blocks are stacked in the
/// order reset, update, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruParams {
    /// `3H × E`
    pub w_x: ParamId,
    /// `3H × H`
    pub w_h: ParamId,
    pub b_x: ParamId,
    pub b_h: ParamId,
}

impl GruParams {
    fn init(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        Ok(GruParams {
            w_x: init::weight(store, &format!("{prefix}.w_x"), 3 * hidden, input, rng)?,
            w_h: init::weight(store, &format!("{prefix}.w_h"), 3 * hidden, hidden, rng)?,
            b_x: init::zeros(store, &format!("{prefix}.b_x"), 3 * hidden)?,
            b_h: init::zeros(store, &format!("{prefix}.b_h"), 3 * hidden)?,
        })
    }

    /// Hidden states after each input row of `x` (`L × E`), read in `order`.
    fn run(&self, g: &mut Graph, store: &ParamStore, x: NodeId, order: &[usize], hidden: usize) -> Result<Vec<NodeId>> {
        let (wx, bx) = (g.param(store, self.w_x), g.param(store, self.b_x));
        let xs = g.linear(x, wx, bx)?;
        let (wh, bh) = (g.param(store, self.w_h), g.param(store, self.b_h));
        let mut h = g.constant(1, hidden, alloc::vec![0.0; hidden])?;
        let mut states = alloc::vec![h; order.len()];
        for &t in order {
            let xt = g.slice_rows(xs, t, 1)?;
            let hh = g.linear(h, wh, bh)?;
            let gate = |g: &mut Graph, block: usize| -> Result<(NodeId, NodeId)> {
                Ok((g.slice_cols(xt, block * hidden, hidden)?, g.slice_cols(hh, block * hidden, hidden)?))
            };
            let (xr, hr) = gate(g, 0)?;
            let pre_r = g.add(xr, hr)?;
            let r = g.sigmoid(pre_r);
            let (xz, hz) = gate(g, 1)?;
            let pre_z = g.add(xz, hz)?;
            let z = g.sigmoid(pre_z);
            let (xn, hn) = gate(g, 2)?;
            let rh = g.mul(r, hn)?;
            let pre_n = g.add(xn, rh)?;
            let cand = g.tanh(pre_n);
            let keep = g.mul(z, h)?;
            let one_minus_z = g.affine(z, -1.0, 1.0);
            let fresh = g.mul(one_minus_z, cand)?;
            h = g.add(fresh, keep)?;
            states[t] = h;
        }
        Ok(states)
    }
}

/// Word embeddings followed by a single-layer bidirectional GRU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextEncoder {
    pub vocab_size: usize,
    pub d: usize,
    pub hidden: usize,
    pub embedding: ParamId,
    pub forward: GruParams,
    pub backward: GruParams,
    /// `d × 2H` projections of the local and global states.
    pub local_w: ParamId,
    pub local_b: ParamId,
    pub global_w: ParamId,
    pub global_b: ParamId,
}

/// Graph nodes produced by [`TextEncoder::encode`].
#[derive(Debug, Clone)]
pub struct TextEncoderNodes {
    /// Global question vector, `1 × d`.
    pub w: NodeId,
    /// Per-token representations, `L × d`.
    pub local: NodeId,
    pub forward_states: Vec<NodeId>,
    pub backward_states: Vec<NodeId>,
}

/// Global vector `w` and per-token matrix `W` of a question.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionEncoding {
    pub w: Vec<f64>,
    pub local: Tensor,
}

impl TextEncoder {
    pub fn init(store: &mut ParamStore, prefix: &str, vocab_size: usize, d: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        if vocab_size == 0 || d == 0 || hidden == 0 {
            return Err(Error::Config("text encoder sizes must be positive".into()));
        }
        Ok(TextEncoder {
            vocab_size,
            d,
            hidden,
            embedding: init::table(store, &format!("{prefix}.embedding"), vocab_size, d, 0.5, rng)?,
            forward: GruParams::init(store, &format!("{prefix}.gru_fwd"), d, hidden, rng)?,
            backward: GruParams::init(store, &format!("{prefix}.gru_bwd"), d, hidden, rng)?,
            local_w: init::weight(store, &format!("{prefix}.local.w"), d, 2 * hidden, rng)?,
            local_b: init::zeros(store, &format!("{prefix}.local.b"), d)?,
            global_w: init::weight(store, &format!("{prefix}.global.w"), d, 2 * hidden, rng)?,
            global_b: init::zeros(store, &format!("{prefix}.global.b"), d)?,
        })
    }

    /// `W[t]` projects `[fwd_t; bwd_t]`; `w` projects the two final states
    /// `[fwd_{L-1}; bwd_0]`.
    pub fn encode(&self, g: &mut Graph, store: &ParamStore, ids: &[usize]) -> Result<TextEncoderNodes> {
        if ids.is_empty() {
            return Err(Error::Data("question has no tokens".into()));
        }
        let emb = g.param(store, self.embedding);
        let x = g.gather(emb, ids)?;
        let l = ids.len();
        let fwd_order: Vec<usize> = (0..l).collect();
        let bwd_order: Vec<usize> = (0..l).rev().collect();
        let fwd = self.forward.run(g, store, x, &fwd_order, self.hidden)?;
        let bwd = self.backward.run(g, store, x, &bwd_order, self.hidden)?;

        let rows: Vec<NodeId> = (0..l)
            .map(|t| g.concat_cols(&[fwd[t], bwd[t]]))
            .collect::<Result<_>>()?;
        let states = g.concat_rows(&rows)?;
        let (lw, lb) = (g.param(store, self.local_w), g.param(store, self.local_b));
        let local = g.linear(states, lw, lb)?;

        let fin = g.concat_cols(&[fwd[l - 1], bwd[0]])?;
        let (gw, gb) = (g.param(store, self.global_w), g.param(store, self.global_b));
        let w = g.linear(fin, gw, gb)?;
        Ok(TextEncoderNodes {
            w,
            local,
            forward_states: fwd,
            backward_states: bwd,
        })
    }
}

/// Eager question encoding.
pub fn encode_question(encoder: &TextEncoder, store: &ParamStore, ids: &[usize]) -> Result<QuestionEncoding> {
    let mut g = Graph::new();
    let nodes = encoder.encode(&mut g, store, ids)?;
    Ok(QuestionEncoding {
        w: g.value(nodes.w).to_vec(),
        local: g.tensor(nodes.local),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::grad_check;

    fn encoder(d: usize, hidden: usize) -> (ParamStore, TextEncoder) {
        let mut store = ParamStore::new();
        let enc = TextEncoder::init(&mut store, "q", 7, d, hidden, &mut rng::seeded(11)).unwrap();
        (store, enc)
    }

    #[test]
    fn shapes() {
        let (store, enc) = encoder(6, 5);
        let e = encode_question(&enc, &store, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(e.local.shape(), &[5, 6]);
        assert_eq!(e.w.len(), 6);
        let single = encode_question(&enc, &store, &[3]).unwrap();
        assert_eq!(single.local.shape(), &[1, 6]);
        assert_eq!(single, encode_question(&enc, &store, &[3]).unwrap());
        assert!(encode_question(&enc, &store, &[7]).is_err());
        assert!(encode_question(&enc, &store, &[]).is_err());
    }

    #[test]
    fn deterministic() {
        let (store, enc) = encoder(4, 4);
        let a = encode_question(&enc, &store, &[2, 5, 1]).unwrap();
        let b = encode_question(&enc, &store, &[2, 5, 1]).unwrap();
        assert_eq!(a.w, b.w);
        assert_eq!(a.local.data(), b.local.data());
    }

    #[test]
    fn reversal_swaps_directions_under_mirrored_params() {
        let (mut store, enc) = encoder(3, 3);
        for (f, b) in [
            (enc.forward.w_x, enc.backward.w_x),
            (enc.forward.w_h, enc.backward.w_h),
            (enc.forward.b_x, enc.backward.b_x),
            (enc.forward.b_h, enc.backward.b_h),
        ] {
            let v = store.get(f).data().to_vec();
            store.set_data(b, &v).unwrap();
        }
        let run = |ids: &[usize]| {
            let mut g = Graph::new();
            let n = enc.encode(&mut g, &store, ids).unwrap();
            let l = ids.len();
            (g.value(n.forward_states[l - 1]).to_vec(), g.value(n.backward_states[0]).to_vec())
        };
        let (f1, b1) = run(&[2, 5]);
        let (f2, b2) = run(&[5, 2]);
        assert_eq!(f1, b2);
        assert_eq!(b1, f2);
        assert_ne!(f1, b1);
    }

    #[test]
    fn gradients_match_central_differences() {
        let (mut store, enc) = encoder(3, 2);
        let report = grad_check(&mut store, 1e-6, |g, s| {
            let n = enc.encode(g, s, &[1, 4, 2])?;
            let both = g.concat_rows(&[n.w, n.local])?;
            let sq = g.mul(both, both)?;
            let t = g.tanh(sq);
            Ok(g.sum(t))
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-5, "{report:?}");
    }
}
