//! Reverse-mode automatic differentiation over a linear tape of coarse
//! matrix operations. Every node is a row-major `rows × cols` matrix.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::mem;

use super::kernels::{self, dot, matmul_acc, matmul_at_acc, matmul_bt_acc};
use super::{ParamId, ParamStore, Tensor};
use crate::attention::afa::{self, AfaCache};
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    MatMulBt(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Affine(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    SoftmaxRows(NodeId),
    MaskedSoftmax(NodeId),
    LayerNorm {
        x: NodeId,
        gain: NodeId,
        bias: NodeId,
        // per row: mean, rstd
        stats: Vec<(f64, f64)>,
    },
    SliceCols(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    SliceRows(NodeId, usize),
    ConcatRows(Vec<NodeId>),
    MeanRows(NodeId),
    Sum(NodeId),
    Gather(NodeId, Vec<usize>),
    Afa {
        q: NodeId,
        k: NodeId,
        v: NodeId,
        alpha: NodeId,
        cache: AfaCache,
    },
    CrossEntropy {
        logits: NodeId,
        targets: Vec<usize>,
        probs: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// A tape of forward computations that can be differentiated in reverse.
///
/// Parameter values are copied in when first referenced; [`Graph::backward`]
/// adds the resulting gradients into the store's gradient buffers.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: BTreeMap<ParamId, NodeId>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op, needs_grad: bool) -> NodeId {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    fn ng(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|&i| self.nodes[i.0].needs_grad)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn dims(&self, id: NodeId) -> (usize, usize) {
        let n = self.node(id);
        (n.rows, n.cols)
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value[0]
    }

    pub fn tensor(&self, id: NodeId) -> Tensor {
        let n = self.node(id);
        Tensor::matrix(n.rows, n.cols, n.value.clone()).expect("node shapes are valid")
    }

    /// Constant input; 1-D tensors become a single row.
    pub fn input(&mut self, t: &Tensor) -> NodeId {
        self.push(t.rows(), t.cols(), t.data().to_vec(), Op::Input, false)
    }

    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> Result<NodeId> {
        if value.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::shape("constant", &[rows, cols], &[value.len()]));
        }
        Ok(self.push(rows, cols, value, Op::Input, false))
    }

    /// Leaf for a trainable parameter; repeated references share one node.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        if let Some(&n) = self.params.get(&id) {
            return n;
        }
        let t = store.get(id);
        let n = self.push(t.rows(), t.cols(), t.data().to_vec(), Op::Param(id), true);
        self.params.insert(id, n);
        n
    }

    /// Parameter leaf that is excluded from differentiation.
    pub fn frozen(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        self.input(store.get(id))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let ((m, k), (k2, n)) = (self.dims(a), self.dims(b));
        if k != k2 {
            return Err(Error::shape("matmul", &[m, k], &[k2, n]));
        }
        let mut out = vec![0.0; m * n];
        matmul_acc(self.value(a), self.value(b), m, k, n, &mut out);
        let ng = self.ng(&[a, b]);
        Ok(self.push(m, n, out, Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ`; with `b` stored as `out × in` this is a linear layer.
    pub fn matmul_bt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let ((m, k), (n, k2)) = (self.dims(a), self.dims(b));
        if k != k2 {
            return Err(Error::shape("matmul_bt", &[m, k], &[n, k2]));
        }
        let mut out = vec![0.0; m * n];
        matmul_bt_acc(self.value(a), self.value(b), m, k, n, &mut out);
        let ng = self.ng(&[a, b]);
        Ok(self.push(m, n, out, Op::MatMulBt(a, b), ng))
    }

    /// `x · Wᵀ + b` with `w: out × in` and `b: 1 × out`.
    pub fn linear(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let y = self.matmul_bt(x, w)?;
        self.add_row(y, b)
    }

    fn same_dims(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(usize, usize)> {
        let (da, db) = (self.dims(a), self.dims(b));
        if da != db {
            return Err(Error::shape(op, &[da.0, da.1], &[db.0, db.1]));
        }
        Ok(da)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_dims("add", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let ng = self.ng(&[a, b]);
        Ok(self.push(r, c, out, Op::Add(a, b), ng))
    }

    /// Adds the `1 × cols` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let ((r, c), (br, bc)) = (self.dims(a), self.dims(b));
        if br != 1 || bc != c {
            return Err(Error::shape("add_row", &[r, c], &[br, bc]));
        }
        let bv = self.value(b);
        let out = self
            .value(a)
            .chunks(c)
            .flat_map(|row| row.iter().zip(bv).map(|(x, y)| x + y))
            .collect();
        let ng = self.ng(&[a, b]);
        Ok(self.push(r, c, out, Op::AddRow(a, b), ng))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.same_dims("mul", a, b)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let ng = self.ng(&[a, b]);
        Ok(self.push(r, c, out, Op::Mul(a, b), ng))
    }

    /// `scale · a + shift`.
    pub fn affine(&mut self, a: NodeId, scale: f64, shift: f64) -> NodeId {
        let (r, c) = self.dims(a);
        let out = self.value(a).iter().map(|x| scale * x + shift).collect();
        let ng = self.ng(&[a]);
        self.push(r, c, out, Op::Affine(a, scale), ng)
    }

    fn unary(&mut self, a: NodeId, f: impl Fn(f64) -> f64, op: Op) -> NodeId {
        let (r, c) = self.dims(a);
        let out = self.value(a).iter().map(|&x| f(x)).collect();
        let ng = self.ng(&[a]);
        self.push(r, c, out, op, ng)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, libm::tanh, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.unary(a, |x| if x > 0.0 { x } else { 0.0 }, Op::Relu(a))
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.dims(a);
        let mut out = self.value(a).to_vec();
        out.chunks_mut(c).for_each(kernels::softmax_in_place);
        let ng = self.ng(&[a]);
        self.push(r, c, out, Op::SoftmaxRows(a), ng)
    }

    /// Softmax of a single row restricted to `mask`.
    pub fn masked_softmax(&mut self, a: NodeId, mask: Vec<bool>) -> Result<NodeId> {
        let (r, c) = self.dims(a);
        if r != 1 {
            return Err(Error::shape("masked_softmax", &[r, c], &[1, mask.len()]));
        }
        let out = kernels::masked_softmax(self.value(a), &mask)?;
        let ng = self.ng(&[a]);
        Ok(self.push(1, c, out, Op::MaskedSoftmax(a), ng))
    }

    /// Row-wise layer normalisation with `1 × cols` gain and bias.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId, eps: f64) -> Result<NodeId> {
        let (r, c) = self.dims(x);
        if self.dims(gain) != (1, c) || self.dims(bias) != (1, c) {
            return Err(Error::shape("layer_norm", &[r, c], &[self.dims(gain).1, self.dims(bias).1]));
        }
        if !(eps > 0.0) {
            return Err(Error::Config("layer_norm eps must be positive".into()));
        }
        let (xv, gv, bv) = (self.value(x), self.value(gain), self.value(bias));
        let mut out = Vec::with_capacity(r * c);
        let mut stats = Vec::with_capacity(r);
        for row in xv.chunks(c) {
            let (mean, rstd) = kernels::moments(row, eps);
            stats.push((mean, rstd));
            out.extend(row.iter().zip(gv).zip(bv).map(|((v, g), b)| (v - mean) * rstd * g + b));
        }
        let ng = self.ng(&[x, gain, bias]);
        Ok(self.push(r, c, out, Op::LayerNorm { x, gain, bias, stats }, ng))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, width: usize) -> Result<NodeId> {
        let (r, c) = self.dims(a);
        if width == 0 || start + width > c {
            return Err(Error::Index {
                what: "column slice",
                index: start + width,
                bound: c,
            });
        }
        let out = self
            .value(a)
            .chunks(c)
            .flat_map(|row| row[start..start + width].iter().copied())
            .collect();
        let ng = self.ng(&[a]);
        Ok(self.push(r, width, out, Op::SliceCols(a, start), ng))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let r = parts.first().map(|&p| self.dims(p).0).ok_or(Error::Config("empty concat".into()))?;
        if parts.iter().any(|&p| self.dims(p).0 != r) {
            return Err(Error::Config("concat_cols: row counts differ".into()));
        }
        let c: usize = parts.iter().map(|&p| self.dims(p).1).sum();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for &p in parts {
                let pc = self.dims(p).1;
                out.extend_from_slice(&self.value(p)[i * pc..(i + 1) * pc]);
            }
        }
        let ng = self.ng(parts);
        Ok(self.push(r, c, out, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, count: usize) -> Result<NodeId> {
        let (r, c) = self.dims(a);
        if count == 0 || start + count > r {
            return Err(Error::Index {
                what: "row slice",
                index: start + count,
                bound: r,
            });
        }
        let out = self.value(a)[start * c..(start + count) * c].to_vec();
        let ng = self.ng(&[a]);
        Ok(self.push(count, c, out, Op::SliceRows(a, start), ng))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let c = parts.first().map(|&p| self.dims(p).1).ok_or(Error::Config("empty concat".into()))?;
        if parts.iter().any(|&p| self.dims(p).1 != c) {
            return Err(Error::Config("concat_rows: column counts differ".into()));
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let r = out.len() / c;
        let ng = self.ng(parts);
        Ok(self.push(r, c, out, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.dims(a);
        let mut out = vec![0.0; c];
        for row in self.value(a).chunks(c) {
            out.iter_mut().zip(row).for_each(|(o, v)| *o += v);
        }
        out.iter_mut().for_each(|o| *o /= r as f64);
        let ng = self.ng(&[a]);
        self.push(1, c, out, Op::MeanRows(a), ng)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).iter().sum();
        let ng = self.ng(&[a]);
        self.push(1, 1, vec![s], Op::Sum(a), ng)
    }

    /// Rows of `table` selected by `ids` (embedding lookup).
    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (r, c) = self.dims(table);
        if ids.is_empty() {
            return Err(Error::Config("gather with no ids".into()));
        }
        let mut out = Vec::with_capacity(ids.len() * c);
        for &i in ids {
            if i >= r {
                return Err(Error::Index {
                    what: "embedding table",
                    index: i,
                    bound: r,
                });
            }
            out.extend_from_slice(&self.value(table)[i * c..(i + 1) * c]);
        }
        let ng = self.ng(&[table]);
        Ok(self.push(ids.len(), c, out, Op::Gather(table, ids.to_vec()), ng))
    }

    /// Auto-focus attention for one head; `alpha` is a `1 × |F|` row.
    pub fn afa(&mut self, q: NodeId, k: NodeId, v: NodeId, alpha: NodeId, focal: &[usize]) -> Result<NodeId> {
        let (n, dh) = self.dims(q);
        if self.dims(k) != (n, dh) || self.dims(v).0 != n {
            return Err(Error::shape("afa", &[n, dh], &[self.dims(k).0, self.dims(k).1]));
        }
        let (ar, ac) = self.dims(alpha);
        if ar != 1 || ac != focal.len() {
            return Err(Error::shape("afa alpha", &[ar, ac], &[1, focal.len()]));
        }
        let dv = self.dims(v).1;
        let (out, cache) = afa::forward(
            self.value(q),
            self.value(k),
            self.value(v),
            self.value(alpha),
            focal,
            n,
            dh,
            dv,
        );
        let ng = self.ng(&[q, k, v, alpha]);
        Ok(self.push(n, dv, out, Op::Afa { q, k, v, alpha, cache }, ng))
    }

    /// Mean cross-entropy of row-wise logits against class targets.
    pub fn cross_entropy(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (b, c) = self.dims(logits);
        if targets.len() != b {
            return Err(Error::shape("cross_entropy", &[b, c], &[targets.len()]));
        }
        let mut probs = self.value(logits).to_vec();
        let mut loss = 0.0;
        for (row, &t) in probs.chunks_mut(c).zip(targets) {
            if t >= c {
                return Err(Error::Index {
                    what: "class",
                    index: t,
                    bound: c,
                });
            }
            loss += kernels::log_sum_exp(row) - row[t];
            kernels::softmax_in_place(row);
        }
        let ng = self.ng(&[logits]);
        let op = Op::CrossEntropy {
            logits,
            targets: targets.to_vec(),
            probs,
        };
        Ok(self.push(1, 1, vec![loss / b as f64], op, ng))
    }

    /// Back-propagates from the scalar `loss` and adds parameter gradients
    /// into `store`. Gradients accumulate across calls until zeroed.
    pub fn backward(&self, loss: NodeId, store: &mut ParamStore) -> Result<()> {
        let ln = self.node(loss);
        if ln.rows * ln.cols != 1 {
            return Err(Error::NotScalar(vec![ln.rows, ln.cols]));
        }
        if !ln.value[0].is_finite() {
            return Err(Error::NonFinite("loss"));
        }
        let mut grads: Vec<Vec<f64>> = (0..self.nodes.len()).map(|_| Vec::new()).collect();
        grads[loss.0] = vec![1.0];
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad || grads[idx].is_empty() {
                continue;
            }
            let g = mem::take(&mut grads[idx]);
            if let Op::Param(pid) = node.op {
                store.get_mut(pid).accumulate_grad(&g)?;
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }
        Ok(())
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Vec<f64>]) {
        let (rows, cols) = (node.rows, node.cols);
        match &node.op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.dims(*a);
                let n = cols;
                if self.node(*a).needs_grad {
                    // dA = G · Bᵀ
                    matmul_bt_acc(g, self.value(*b), m, n, k, slot(grads, *a, m * k));
                }
                if self.node(*b).needs_grad {
                    // dB = Aᵀ · G
                    matmul_at_acc(self.value(*a), g, m, k, n, slot(grads, *b, k * n));
                }
            }
            Op::MatMulBt(a, b) => {
                let (m, k) = self.dims(*a);
                let n = cols;
                if self.node(*a).needs_grad {
                    // dA = G · B
                    matmul_acc(g, self.value(*b), m, n, k, slot(grads, *a, m * k));
                }
                if self.node(*b).needs_grad {
                    // dB = Gᵀ · A
                    matmul_at_acc(g, self.value(*a), m, n, k, slot(grads, *b, n * k));
                }
            }
            Op::Add(a, b) => {
                for p in [a, b] {
                    if self.node(*p).needs_grad {
                        add_into(slot(grads, *p, g.len()), g);
                    }
                }
            }
            Op::AddRow(a, b) => {
                if self.node(*a).needs_grad {
                    add_into(slot(grads, *a, g.len()), g);
                }
                if self.node(*b).needs_grad {
                    let gb = slot(grads, *b, cols);
                    for row in g.chunks(cols) {
                        add_into(gb, row);
                    }
                }
            }
            Op::Mul(a, b) => {
                if self.node(*a).needs_grad {
                    let bv = self.value(*b);
                    let ga = slot(grads, *a, g.len());
                    for i in 0..g.len() {
                        ga[i] += g[i] * bv[i];
                    }
                }
                if self.node(*b).needs_grad {
                    let av = self.value(*a);
                    let gb = slot(grads, *b, g.len());
                    for i in 0..g.len() {
                        gb[i] += g[i] * av[i];
                    }
                }
            }
            Op::Affine(a, scale) => {
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += scale * g[i];
                }
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * y[i] * (1.0 - y[i]);
                }
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    ga[i] += g[i] * (1.0 - y[i] * y[i]);
                }
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let ga = slot(grads, *a, g.len());
                for i in 0..g.len() {
                    if x[i] > 0.0 {
                        ga[i] += g[i];
                    }
                }
            }
            Op::SoftmaxRows(a) | Op::MaskedSoftmax(a) => {
                let y = &node.value;
                let ga = slot(grads, *a, g.len());
                for (r, (yr, gr)) in y.chunks(cols).zip(g.chunks(cols)).enumerate() {
                    let s = dot(yr, gr);
                    for j in 0..cols {
                        ga[r * cols + j] += yr[j] * (gr[j] - s);
                    }
                }
            }
            Op::LayerNorm { x, gain, bias, stats } => {
                let xv = self.value(*x);
                let gv = self.value(*gain);
                let c = cols as f64;
                if self.node(*gain).needs_grad || self.node(*bias).needs_grad {
                    let mut dg = vec![0.0; cols];
                    let mut db = vec![0.0; cols];
                    for r in 0..rows {
                        let (mean, rstd) = stats[r];
                        for j in 0..cols {
                            let gij = g[r * cols + j];
                            dg[j] += gij * (xv[r * cols + j] - mean) * rstd;
                            db[j] += gij;
                        }
                    }
                    if self.node(*gain).needs_grad {
                        add_into(slot(grads, *gain, cols), &dg);
                    }
                    if self.node(*bias).needs_grad {
                        add_into(slot(grads, *bias, cols), &db);
                    }
                }
                if self.node(*x).needs_grad {
                    let gx = slot(grads, *x, rows * cols);
                    let mut dxhat = vec![0.0; cols];
                    for r in 0..rows {
                        let (mean, rstd) = stats[r];
                        let xr = &xv[r * cols..(r + 1) * cols];
                        let mut sum_d = 0.0;
                        let mut sum_dx = 0.0;
                        for j in 0..cols {
                            dxhat[j] = g[r * cols + j] * gv[j];
                            sum_d += dxhat[j];
                            sum_dx += dxhat[j] * (xr[j] - mean) * rstd;
                        }
                        for j in 0..cols {
                            let xhat = (xr[j] - mean) * rstd;
                            gx[r * cols + j] += rstd * (dxhat[j] - sum_d / c - xhat * sum_dx / c);
                        }
                    }
                }
            }
            Op::SliceCols(a, start) => {
                let ac = self.dims(*a).1;
                let ga = slot(grads, *a, rows * ac);
                for r in 0..rows {
                    add_into(&mut ga[r * ac + start..r * ac + start + cols], &g[r * cols..(r + 1) * cols]);
                }
            }
            Op::ConcatCols(parts) => {
                let mut off = 0;
                for &p in parts {
                    let pc = self.dims(p).1;
                    if self.node(p).needs_grad {
                        let gp = slot(grads, p, rows * pc);
                        for r in 0..rows {
                            add_into(&mut gp[r * pc..(r + 1) * pc], &g[r * cols + off..r * cols + off + pc]);
                        }
                    }
                    off += pc;
                }
            }
            Op::SliceRows(a, start) => {
                let ar = self.dims(*a).0;
                let ga = slot(grads, *a, ar * cols);
                add_into(&mut ga[start * cols..(start + rows) * cols], g);
            }
            Op::ConcatRows(parts) => {
                let mut off = 0;
                for &p in parts {
                    let len = self.value(p).len();
                    if self.node(p).needs_grad {
                        add_into(slot(grads, p, len), &g[off..off + len]);
                    }
                    off += len;
                }
            }
            Op::MeanRows(a) => {
                let ar = self.dims(*a).0;
                let ga = slot(grads, *a, ar * cols);
                let inv = 1.0 / ar as f64;
                for row in ga.chunks_mut(cols) {
                    for (x, gv) in row.iter_mut().zip(g) {
                        *x += gv * inv;
                    }
                }
            }
            Op::Sum(a) => {
                let len = self.value(*a).len();
                slot(grads, *a, len).iter_mut().for_each(|x| *x += g[0]);
            }
            Op::Gather(table, ids) => {
                let tr = self.dims(*table).0;
                let gt = slot(grads, *table, tr * cols);
                for (row, &i) in ids.iter().enumerate() {
                    add_into(&mut gt[i * cols..(i + 1) * cols], &g[row * cols..(row + 1) * cols]);
                }
            }
            Op::Afa { q, k, v, alpha, cache } => {
                let (n, dh) = self.dims(*q);
                let grads_out = afa::backward(
                    g,
                    self.value(*q),
                    self.value(*k),
                    self.value(*v),
                    self.value(*alpha),
                    cache,
                    n,
                    dh,
                    cols,
                );
                for (p, gp) in [(q, grads_out.q), (k, grads_out.k), (v, grads_out.v), (alpha, grads_out.alpha)] {
                    if self.node(*p).needs_grad {
                        add_into(slot(grads, *p, gp.len()), &gp);
                    }
                }
            }
            Op::CrossEntropy { logits, targets, probs } => {
                let (b, c) = self.dims(*logits);
                let scale = g[0] / b as f64;
                let gl = slot(grads, *logits, b * c);
                for (r, &t) in targets.iter().enumerate() {
                    for j in 0..c {
                        let ind = if j == t { 1.0 } else { 0.0 };
                        gl[r * c + j] += scale * (probs[r * c + j] - ind);
                    }
                }
            }
        }
    }
}

fn slot(grads: &mut [Vec<f64>], id: NodeId, len: usize) -> &mut [f64] {
    let g = &mut grads[id.0];
    if g.is_empty() {
        *g = vec![0.0; len];
    }
    g
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(name: &str, t: Tensor) -> (ParamStore, ParamId) {
        let mut s = ParamStore::new();
        let id = s.insert(name, t).unwrap();
        (s, id)
    }

    #[test]
    fn square_derivative() {
        let (mut store, x) = store_with("x", Tensor::scalar(3.0));
        let mut g = Graph::new();
        let xn = g.param(&store, x);
        let sq = g.mul(xn, xn).unwrap();
        g.backward(sq, &mut store).unwrap();
        assert_eq!(store.get(x).grad().unwrap(), &[6.0]);
    }

    #[test]
    fn sum_gives_ones_and_accumulates() {
        let (mut store, v) = store_with("v", Tensor::row_vector(vec![1.0, -2.0, 5.0]).unwrap());
        for expected in [1.0, 2.0] {
            let mut g = Graph::new();
            let vn = g.param(&store, v);
            let s = g.sum(vn);
            g.backward(s, &mut store).unwrap();
            assert_eq!(store.get(v).grad().unwrap(), &[expected; 3]);
        }
        store.zero_grad();
        assert_eq!(store.get(v).grad().unwrap(), &[0.0; 3]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let (mut store, v) = store_with("v", Tensor::row_vector(vec![1.0, 2.0]).unwrap());
        let mut g = Graph::new();
        let vn = g.param(&store, v);
        assert_eq!(g.backward(vn, &mut store), Err(Error::NotScalar(vec![1, 2])));
    }

    #[test]
    fn inputs_do_not_receive_gradients() {
        let (mut store, w) = store_with("w", Tensor::from_rows(&[&[1.0, 2.0]]).unwrap());
        let mut g = Graph::new();
        let x = g.input(&Tensor::from_rows(&[&[3.0, 4.0]]).unwrap());
        let wn = g.param(&store, w);
        let y = g.matmul_bt(x, wn).unwrap();
        g.backward(y, &mut store).unwrap();
        assert_eq!(store.get(w).grad().unwrap(), &[3.0, 4.0]);
    }
}
