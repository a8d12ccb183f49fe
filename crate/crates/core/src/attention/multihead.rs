use alloc::format;
use alloc::vec::Vec;

use super::focal::FocalSet;
use crate::rng::Rng;
use crate::tensor::init;
use crate::{Error, Graph, NodeId, ParamId, ParamStore, Result};

/// Projections of a multi-head attention block. Each `d × d` matrix is stored
/// `out × in`; head `h` owns output rows `h·d_h .. (h+1)·d_h` of the query,
/// key and value projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionParams {
    pub heads: usize,
    pub d: usize,
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
}

impl AttentionParams {
    pub fn init(store: &mut ParamStore, prefix: &str, d: usize, heads: usize, rng: &mut Rng) -> Result<Self> {
        check_heads(d, heads)?;
        Ok(AttentionParams {
            heads,
            d,
            wq: init::weight(store, &format!("{prefix}.wq"), d, d, rng)?,
            bq: init::zeros(store, &format!("{prefix}.bq"), d)?,
            wk: init::weight(store, &format!("{prefix}.wk"), d, d, rng)?,
            bk: init::zeros(store, &format!("{prefix}.bk"), d)?,
            wv: init::weight(store, &format!("{prefix}.wv"), d, d, rng)?,
            bv: init::zeros(store, &format!("{prefix}.bv"), d)?,
            wo: init::weight(store, &format!("{prefix}.wo"), d, d, rng)?,
            bo: init::zeros(store, &format!("{prefix}.bo"), d)?,
        })
    }

    pub fn head_dim(&self) -> usize {
        self.d / self.heads
    }

    fn project(&self, g: &mut Graph, store: &ParamStore, x: NodeId) -> Result<(NodeId, NodeId, NodeId)> {
        let (cols, d) = (g.dims(x).1, self.d);
        if cols != d {
            return Err(Error::shape("attention input", &[g.dims(x).0, cols], &[d, d]));
        }
        let mut lin = |w, b| -> Result<NodeId> {
            let (w, b) = (g.param(store, w), g.param(store, b));
            g.linear(x, w, b)
        };
        Ok((lin(self.wq, self.bq)?, lin(self.wk, self.bk)?, lin(self.wv, self.bv)?))
    }

    fn output(&self, g: &mut Graph, store: &ParamStore, heads: &[NodeId]) -> Result<NodeId> {
        let cat = if heads.len() == 1 { heads[0] } else { g.concat_cols(heads)? };
        let (w, b) = (g.param(store, self.wo), g.param(store, self.bo));
        g.linear(cat, w, b)
    }
}

pub(crate) fn check_heads(d: usize, heads: usize) -> Result<()> {
    if heads == 0 || d == 0 || d % heads != 0 {
        return Err(Error::Config(format!("model width {d} is not divisible by {heads} heads")));
    }
    Ok(())
}

/// Multi-head auto-focus attention; all heads share the focus weights `alpha`.
pub fn multi_head_afa(
    g: &mut Graph,
    store: &ParamStore,
    x: NodeId,
    params: &AttentionParams,
    alpha: NodeId,
    focal: &FocalSet,
) -> Result<NodeId> {
    check_heads(params.d, params.heads)?;
    let (q, k, v) = params.project(g, store, x)?;
    let dh = params.head_dim();
    let mut outs = Vec::with_capacity(params.heads);
    for h in 0..params.heads {
        let (qh, kh, vh) = if params.heads == 1 {
            (q, k, v)
        } else {
            (
                g.slice_cols(q, h * dh, dh)?,
                g.slice_cols(k, h * dh, dh)?,
                g.slice_cols(v, h * dh, dh)?,
            )
        };
        outs.push(g.afa(qh, kh, vh, alpha, focal.lengths())?);
    }
    params.output(g, store, &outs)
}

/// Standard multi-head scaled-dot-product attention built from matrix
/// products and a row softmax (no bands).
pub fn multi_head_dense(g: &mut Graph, store: &ParamStore, x: NodeId, params: &AttentionParams) -> Result<NodeId> {
    check_heads(params.d, params.heads)?;
    let (q, k, v) = params.project(g, store, x)?;
    let dh = params.head_dim();
    let scale = 1.0 / libm::sqrt(dh as f64);
    let mut outs = Vec::with_capacity(params.heads);
    for h in 0..params.heads {
        let qh = g.slice_cols(q, h * dh, dh)?;
        let kh = g.slice_cols(k, h * dh, dh)?;
        let vh = g.slice_cols(v, h * dh, dh)?;
        let scores = g.matmul_bt(qh, kh)?;
        let scores = g.affine(scores, scale, 0.0);
        let p = g.softmax_rows(scores);
        outs.push(g.matmul(p, vh)?);
    }
    params.output(g, store, &outs)
}
