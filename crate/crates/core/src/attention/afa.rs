//! Banded multi-focus attention kernel, its gradient, and the dense
//! scaled-dot-product reference it reduces to.

use alloc::vec;
use alloc::vec::Vec;

use super::focal::{band_index_set, FocalSet, FocusWeights};
use crate::tensor::kernels::{dot, matmul_acc, matmul_at_acc, matmul_bt_acc, softmax_in_place};
use crate::{Error, Result, Tensor};

/// Per-focus attention probabilities and outputs kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct AfaCache {
    focal: Vec<usize>,
    /// `probs[offsets[f * n + j]..]` holds the band softmax of query `j` under focus `f`.
    probs: Vec<f64>,
    offsets: Vec<usize>,
}

impl AfaCache {
    /// Band softmax of query `j` under the `f`-th focal length.
    pub fn band_probs(&self, f: usize, j: usize, n: usize) -> &[f64] {
        let start = self.offsets[f * n + j];
        let (lo, hi) = band(j, self.focal[f], n);
        &self.probs[start..start + (hi - lo + 1)]
    }
}

#[inline]
fn band(j: usize, f: usize, n: usize) -> (usize, usize) {
    (j.saturating_sub(f), (j + f).min(n - 1))
}

pub(crate) struct AfaGrads {
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Query rows processed together. Each block multiplies against the union
/// of its rows' widest bands, so the products run through the blocked
/// matmul kernels; entries outside a row's own band carry zero weight.
const BLOCK: usize = 16;

/// Rows `j0..j1` of a block and the key range `lo..=hi` their widest bands cover.
#[inline]
fn block_span(j0: usize, n: usize, fmax: usize) -> (usize, usize, usize, usize) {
    let j1 = (j0 + BLOCK).min(n);
    (j1, j0.saturating_sub(fmax), (j1 - 1 + fmax).min(n - 1), j1 - j0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn forward(
    q: &[f64],
    k: &[f64],
    v: &[f64],
    alpha: &[f64],
    focal: &[usize],
    n: usize,
    dh: usize,
    dv: usize,
) -> (Vec<f64>, AfaCache) {
    let scale = 1.0 / libm::sqrt(dh as f64);
    let fmax = focal.iter().copied().max().unwrap_or(0);
    let mut out = vec![0.0; n * dv];
    let mut offsets = vec![0; focal.len() * n];
    let mut probs = Vec::new();
    let mut scores = Vec::new();
    let mut weights = Vec::new();
    let mut j0 = 0;
    while j0 < n {
        let (j1, lo, hi, b) = block_span(j0, n, fmax);
        let width = hi - lo + 1;
        scores.clear();
        scores.resize(b * width, 0.0);
        matmul_bt_acc(&q[j0 * dh..j1 * dh], &k[lo * dh..(hi + 1) * dh], b, dh, width, &mut scores);
        weights.clear();
        weights.resize(b * width, 0.0);
        for j in j0..j1 {
            let row = (j - j0) * width;
            for (fi, &f) in focal.iter().enumerate() {
                let (flo, fhi) = band(j, f, n);
                offsets[fi * n + j] = probs.len();
                let start = probs.len();
                probs.extend(scores[row + flo - lo..=row + fhi - lo].iter().map(|s| s * scale));
                let p = &mut probs[start..];
                softmax_in_place(p);
                // the mixture of band outputs is one attention with mixed weights
                let a = alpha[fi];
                for (w, pi) in weights[row + flo - lo..].iter_mut().zip(p.iter()) {
                    *w += a * pi;
                }
            }
        }
        matmul_acc(&weights, &v[lo * dv..(hi + 1) * dv], b, width, dv, &mut out[j0 * dv..j1 * dv]);
        j0 = j1;
    }
    let cache = AfaCache {
        focal: focal.to_vec(),
        probs,
        offsets,
    };
    (out, cache)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(
    g: &[f64],
    q: &[f64],
    k: &[f64],
    v: &[f64],
    alpha: &[f64],
    cache: &AfaCache,
    n: usize,
    dh: usize,
    dv: usize,
) -> AfaGrads {
    let focal = &cache.focal;
    let scale = 1.0 / libm::sqrt(dh as f64);
    let fmax = focal.iter().copied().max().unwrap_or(0);
    let mut dq = vec![0.0; n * dh];
    let mut dk = vec![0.0; n * dh];
    let mut dvv = vec![0.0; n * dv];
    let mut dalpha = vec![0.0; focal.len()];
    let (mut gv, mut ds, mut wsum) = (Vec::new(), Vec::new(), Vec::new());
    let mut j0 = 0;
    while j0 < n {
        let (j1, lo, hi, b) = block_span(j0, n, fmax);
        let width = hi - lo + 1;
        let gb = &g[j0 * dv..j1 * dv];
        gv.clear();
        gv.resize(b * width, 0.0);
        matmul_bt_acc(gb, &v[lo * dv..(hi + 1) * dv], b, dv, width, &mut gv);
        ds.clear();
        ds.resize(b * width, 0.0);
        wsum.clear();
        wsum.resize(b * width, 0.0);
        for j in j0..j1 {
            let row = (j - j0) * width;
            for (fi, &f) in focal.iter().enumerate() {
                let off = row + band(j, f, n).0 - lo;
                let p = cache.band_probs(fi, j, n);
                let a = alpha[fi];
                // g·o_f, the gradient of the f-th mixture weight
                let mean: f64 = p.iter().zip(&gv[off..]).map(|(pi, gi)| pi * gi).sum();
                dalpha[fi] += mean;
                for (t, &pi) in p.iter().enumerate() {
                    ds[off + t] += a * pi * (gv[off + t] - mean) * scale;
                    wsum[off + t] += a * pi;
                }
            }
        }
        matmul_at_acc(&wsum, gb, b, width, dv, &mut dvv[lo * dv..(hi + 1) * dv]);
        matmul_acc(&ds, &k[lo * dh..(hi + 1) * dh], b, width, dh, &mut dq[j0 * dh..j1 * dh]);
        matmul_at_acc(&ds, &q[j0 * dh..j1 * dh], b, width, dh, &mut dk[lo * dh..(hi + 1) * dh]);
        j0 = j1;
    }
    AfaGrads {
        q: dq,
        k: dk,
        v: dvv,
        alpha: dalpha,
    }
}

/// Auto-focus attention on plain matrices: for every query row `j`, the
/// `alpha`-weighted mixture over focal lengths of softmax attention
/// restricted to the band `|i - j| <= f`, each band normalised on its own.
pub fn afa(q: &Tensor, k: &Tensor, v: &Tensor, alpha: &FocusWeights, focal: &FocalSet) -> Result<Tensor> {
    let (n, dh) = (q.rows(), q.cols());
    if k.rows() != n || k.cols() != dh || v.rows() != n {
        return Err(Error::shape("afa", q.shape(), k.shape()));
    }
    if alpha.len() != focal.len() {
        return Err(Error::Simplex(alloc::format!(
            "{} weights for {} focal lengths",
            alpha.len(),
            focal.len()
        )));
    }
    alpha.validate()?;
    let (out, _) = forward(
        q.data(),
        k.data(),
        v.data(),
        alpha.values(),
        focal.lengths(),
        n,
        dh,
        v.cols(),
    );
    Tensor::matrix(n, v.cols(), out)
}

/// Per-focus band probabilities for query `j` (diagnostics and tests).
pub fn band_attention(q: &Tensor, k: &Tensor, j: usize, f: usize) -> Result<Vec<f64>> {
    let n = q.rows();
    let r = band_index_set(j, f, n)?;
    let scale = 1.0 / libm::sqrt(q.cols() as f64);
    let mut s: Vec<f64> = (r.lo..=r.hi).map(|i| dot(q.row(j), k.row(i)) * scale).collect();
    softmax_in_place(&mut s);
    Ok(s)
}

/// `softmax(Q Kᵀ / sqrt(d_h)) V` by direct double loops, no masking.
pub fn dense_attention_oracle(q: &Tensor, k: &Tensor, v: &Tensor) -> Result<Tensor> {
    let (n, dh) = (q.rows(), q.cols());
    if k.rows() != n || k.cols() != dh || v.rows() != n {
        return Err(Error::shape("dense_attention", q.shape(), k.shape()));
    }
    let dv = v.cols();
    let root = libm::sqrt(dh as f64);
    let mut out = vec![0.0; n * dv];
    for j in 0..n {
        let mut scores = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for t in 0..dh {
                s += q.get(j, t) * k.get(i, t);
            }
            scores[i] = s / root;
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for s in scores.iter_mut() {
            *s = libm::exp(*s - max);
            z += *s;
        }
        for i in 0..n {
            for t in 0..dv {
                out[j * dv + t] += scores[i] / z * v.get(i, t);
            }
        }
    }
    Tensor::matrix(n, dv, out)
}
