//! Forward kernels on plain slices. Reductions always run left to right so
//! results are bit-identical across runs.

use alloc::vec;
use alloc::vec::Vec;

use super::Tensor;
use crate::{Error, Result};

/// `out += a · b` with `a: m×k`, `b: k×n`. Each output element sums its `k`
/// products in index order, whatever the blocking.
pub fn matmul_acc(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    const R: usize = 4;
    const C: usize = 8;
    let mut i = 0;
    while i + R <= m {
        let mut j = 0;
        while j + C <= n {
            let mut acc = [[0.0f64; C]; R];
            for (r, row) in acc.iter_mut().enumerate() {
                row.copy_from_slice(&out[(i + r) * n + j..(i + r) * n + j + C]);
            }
            for t in 0..k {
                let bv: &[f64; C] = b[t * n + j..t * n + j + C].try_into().expect("block width");
                for (r, row) in acc.iter_mut().enumerate() {
                    let av = a[(i + r) * k + t];
                    for c in 0..C {
                        row[c] += av * bv[c];
                    }
                }
            }
            for (r, row) in acc.iter().enumerate() {
                out[(i + r) * n + j..(i + r) * n + j + C].copy_from_slice(row);
            }
            j += C;
        }
        if j < n {
            rows_acc(a, b, i, i + R, k, n, j, out);
        }
        i += R;
    }
    rows_acc(a, b, i, m, k, n, 0, out);
}

#[allow(clippy::too_many_arguments)]
fn rows_acc(a: &[f64], b: &[f64], lo: usize, hi: usize, k: usize, n: usize, j0: usize, out: &mut [f64]) {
    for i in lo..hi {
        let out_row = &mut out[i * n + j0..(i + 1) * n];
        for t in 0..k {
            let av = a[i * k + t];
            let b_row = &b[t * n + j0..(t + 1) * n];
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// Row-major transpose of an `r×c` matrix.
pub fn transpose(x: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut t = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            t[j * r + i] = x[i * c + j];
        }
    }
    t
}

/// `out += a · bᵀ` with `a: m×k`, `b: n×k`.
pub fn matmul_bt_acc(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    if m == 1 {
        for j in 0..n {
            out[j] += b[j * k..(j + 1) * k].iter().zip(a).fold(0.0, |s, (x, y)| s + x * y);
        }
        return;
    }
    matmul_acc(a, &transpose(b, n, k), m, k, n, out);
}

/// `out += aᵀ · b` with `a: m×k`, `b: m×n`, `out: k×n`.
pub fn matmul_at_acc(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    matmul_acc(&transpose(a, m, k), b, k, m, n, out);
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four partial sums, combined in a fixed order.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Matrix product of two 2-D tensors.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    matmul_acc(a.data(), b.data(), m, k, n, &mut out);
    Tensor::matrix(m, n, out)
}

/// Softmax in place, stabilised by the maximum.
pub fn softmax_in_place(x: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in x.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in x.iter_mut() {
        *v /= sum;
    }
}

/// Softmax over the entries where `mask` is true; masked-out entries are 0.
pub fn masked_softmax(scores: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    if scores.len() != mask.len() {
        return Err(Error::shape("masked_softmax", &[scores.len()], &[mask.len()]));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptySupport);
    }
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; scores.len()];
    let mut sum = 0.0;
    for ((o, &s), &m) in out.iter_mut().zip(scores).zip(mask) {
        if m {
            *o = libm::exp(s - max);
            sum += *o;
        }
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    Ok(out)
}

/// Normalises `x` to zero mean and unit variance, then applies `gain` and `bias`.
pub fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64], eps: f64) -> Result<Vec<f64>> {
    if x.is_empty() || gain.len() != x.len() || bias.len() != x.len() {
        return Err(Error::shape("layer_norm", &[x.len()], &[gain.len(), bias.len()]));
    }
    if !(eps > 0.0) {
        return Err(Error::Config("layer_norm eps must be positive".into()));
    }
    let (mean, rstd) = moments(x, eps);
    Ok(x.iter()
        .zip(gain)
        .zip(bias)
        .map(|((v, g), b)| (v - mean) * rstd * g + b)
        .collect())
}

/// Mean and `1/sqrt(var + eps)` with the biased variance.
pub(crate) fn moments(x: &[f64], eps: f64) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, 1.0 / libm::sqrt(var + eps))
}

/// `log Σ exp(x)`, stabilised.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = x.iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(s)
}

/// Mean over rows of `-log softmax(logits)[target]`.
pub fn cross_entropy_loss(logits: &Tensor, targets: &[usize]) -> Result<f64> {
    let (b, c) = (logits.rows(), logits.cols());
    if targets.len() != b {
        return Err(Error::shape("cross_entropy", logits.shape(), &[targets.len()]));
    }
    let mut total = 0.0;
    for (i, &t) in targets.iter().enumerate() {
        if t >= c {
            return Err(Error::Index {
                what: "class",
                index: t,
                bound: c,
            });
        }
        let row = logits.row(i);
        total += log_sum_exp(row) - row[t];
    }
    Ok(total / b as f64)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > x[best] {
            best = i;
        }
    }
    best
}
