//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! referenced from a borrowed [`ParamStore`] rather than copied, and
//! [`Tape::backward`] accumulates their gradients into a [`Gradients`]
//! buffer aligned with the store.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{gemm, matmul, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Named parameter tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> ParamId {
        let name = name.into();
        assert!(self.find(&name).is_none(), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Matrix)> {
        self.names
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (n, v))| (ParamId(i), n.as_str(), v))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }
}

/// Gradient buffers, one per parameter of a store.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Matrix>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self {
            grads: store.values.iter().map(|m| Matrix::zeros(m.rows, m.cols)).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn zero(&mut self) {
        self.grads.iter_mut().for_each(|g| g.data.fill(0.0));
    }

    pub fn scale(&mut self, s: f64) {
        self.grads.iter_mut().for_each(|g| g.scale_assign(s));
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.grads.iter().map(Matrix::sum_sq).sum())
    }

    /// L2 norm over parameters whose name starts with `prefix`.
    pub fn group_norm(&self, store: &ParamStore, prefix: &str) -> f64 {
        let sq: f64 = store
            .iter()
            .filter(|(_, name, _)| name.starts_with(prefix))
            .map(|(id, _, _)| self.grads[id.0].sum_sq())
            .sum();
        libm::sqrt(sq)
    }

    pub fn is_finite(&self) -> bool {
        self.grads.iter().all(|g| g.data.iter().all(|x| x.is_finite()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul { a: Var, b: Var, trans_b: bool },
    Add(Var, Var),
    AddRow { x: Var, bias: Var },
    Scale(Var, f64),
    Mask { x: Var, mask: Matrix },
    Gelu(Var),
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Matrix, rstd: Vec<f64> },
    Softmax(Var),
    VStack(Vec<Var>),
    HStack(Vec<Var>),
    SliceRows { x: Var, start: usize },
    SliceCols { x: Var, start: usize },
    Gather { table: Var, ids: Vec<usize> },
    Reshape(Var),
    MeanRows(Var),
    RepeatRows(Var),
    CrossEntropy { logits: Var, golds: Vec<usize>, probs: Matrix },
    Sum(Vec<Var>),
}

struct Node {
    value: Matrix,
    op: Op,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;
const LN_EPS: f64 = 1e-5;

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
    dropout: Option<(f64, ChaCha8Rng)>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::with_capacity(1024),
            param_vars: vec![None; params.len()],
            dropout: None,
        }
    }

    /// Tape whose [`Tape::dropout`] zeroes entries with probability `rate`.
    pub fn with_dropout(params: &'p ParamStore, rate: f64, seed: u64) -> Self {
        let mut t = Self::new(params);
        if rate > 0.0 {
            t.dropout = Some((rate.min(0.95), ChaCha8Rng::seed_from_u64(seed)));
        }
        t
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        match self.nodes[v.0].op {
            Op::Param(p) => self.params.get(p),
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.value(v).shape()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives no gradient outside the tape.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let v = self.push(Matrix::default(), Op::Param(id));
        self.param_vars[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        assert_eq!(ca, rb, "matmul {ra}x{ca} by {rb}x{cb}");
        let value = matmul(self.value(a), false, self.value(b), false);
        self.push(value, Op::MatMul { a, b, trans_b: false })
    }

    /// `a * b^T`.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let (ra, ca) = self.shape(a);
        let (rb, cb) = self.shape(b);
        assert_eq!(ca, cb, "matmul_bt {ra}x{ca} by ({rb}x{cb})^T");
        let value = matmul(self.value(a), false, self.value(b), true);
        self.push(value, Op::MatMul { a, b, trans_b: true })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "add shape mismatch");
        let mut value = self.value(a).clone();
        value.add_assign(self.value(b));
        self.push(value, Op::Add(a, b))
    }

    /// Adds a `1 x c` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let (_, c) = self.shape(x);
        assert_eq!(self.shape(bias), (1, c), "bias shape mismatch");
        let mut value = self.value(x).clone();
        let b = self.value(bias).data.clone();
        for r in 0..value.rows {
            for (y, bb) in value.row_mut(r).iter_mut().zip(&b) {
                *y += bb;
            }
        }
        self.push(value, Op::AddRow { x, bias })
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let mut value = self.value(x).clone();
        value.scale_assign(s);
        self.push(value, Op::Scale(x, s))
    }

    /// Inverted dropout; the identity on tapes built without a rate.
    pub fn dropout(&mut self, x: Var) -> Var {
        let (rows, cols) = self.shape(x);
        let Some((rate, rng)) = self.dropout.as_mut() else { return x };
        let keep = 1.0 - *rate;
        let mask: Vec<f64> = (0..rows * cols)
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let mask = Matrix::from_vec(rows, cols, mask);
        let mut value = self.value(x).clone();
        for (v, m) in value.data.iter_mut().zip(&mask.data) {
            *v *= m;
        }
        self.push(value, Op::Mask { x, mask })
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        for v in value.data.iter_mut() {
            let u = GELU_C * (*v + GELU_A * *v * *v * *v);
            *v = 0.5 * *v * (1.0 + libm::tanh(u));
        }
        self.push(value, Op::Gelu(x))
    }

    /// Row-wise layer normalization with learned gain and bias (`1 x c` each).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let xv = self.value(x);
        let (rows, cols) = xv.shape();
        assert_eq!(self.shape(gain), (1, cols));
        assert_eq!(self.shape(bias), (1, cols));
        let mut xhat = Matrix::zeros(rows, cols);
        let mut rstd = vec![0.0; rows];
        for r in 0..rows {
            let row = xv.row(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let s = 1.0 / libm::sqrt(var + LN_EPS);
            rstd[r] = s;
            for (h, v) in xhat.row_mut(r).iter_mut().zip(row) {
                *h = (v - mean) * s;
            }
        }
        let g = &self.value(gain).data;
        let b = &self.value(bias).data;
        let mut value = xhat.clone();
        for r in 0..rows {
            for ((y, gg), bb) in value.row_mut(r).iter_mut().zip(g).zip(b) {
                *y = *y * gg + bb;
            }
        }
        self.push(value, Op::LayerNorm { x, gain, bias, xhat, rstd })
    }

    /// Row-wise softmax. Entries equal to `-inf` get probability zero.
    pub fn softmax(&mut self, x: Var) -> Var {
        let mut value = self.value(x).clone();
        for r in 0..value.rows {
            softmax_in_place(value.row_mut(r));
        }
        self.push(value, Op::Softmax(x))
    }

    /// Scaled dot-product scores with an optional causal mask, then softmax.
    pub fn masked_scores(&mut self, q: Var, k: Var, scale: f64, causal: bool) -> Var {
        let s = self.matmul_bt(q, k);
        let s = self.scale(s, scale);
        if !causal {
            return self.softmax(s);
        }
        let mut value = self.value(s).clone();
        for r in 0..value.rows {
            let row = value.row_mut(r);
            for v in row.iter_mut().skip(r + 1) {
                *v = f64::NEG_INFINITY;
            }
        }
        // The mask is a constant offset, so the gradient passes straight through.
        let masked = self.push(value, Op::Scale(s, 1.0));
        self.softmax(masked)
    }

    pub fn vstack(&mut self, parts: &[Var]) -> Var {
        let cols = parts
            .iter()
            .map(|&p| self.shape(p).1)
            .max()
            .expect("vstack of nothing");
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let v = self.value(p);
            if v.rows == 0 {
                continue;
            }
            assert_eq!(v.cols, cols, "vstack width mismatch");
            data.extend_from_slice(&v.data);
            rows += v.rows;
        }
        self.push(Matrix::from_vec(rows, cols, data), Op::VStack(parts.to_vec()))
    }

    pub fn hstack(&mut self, parts: &[Var]) -> Var {
        let rows = self.shape(parts[0]).0;
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut value = Matrix::zeros(rows, cols);
        let mut off = 0;
        for &p in parts {
            let v = self.value(p);
            assert_eq!(v.rows, rows, "hstack height mismatch");
            for r in 0..rows {
                value.row_mut(r)[off..off + v.cols].copy_from_slice(v.row(r));
            }
            off += v.cols;
        }
        self.push(value, Op::HStack(parts.to_vec()))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x);
        assert!(start + len <= v.rows, "row slice out of range");
        let data = v.data[start * v.cols..(start + len) * v.cols].to_vec();
        let value = Matrix::from_vec(len, v.cols, data);
        self.push(value, Op::SliceRows { x, start })
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let v = self.value(x);
        assert!(start + len <= v.cols, "column slice out of range");
        let mut value = Matrix::zeros(v.rows, len);
        for r in 0..v.rows {
            value.row_mut(r).copy_from_slice(&v.row(r)[start..start + len]);
        }
        self.push(value, Op::SliceCols { x, start })
    }

    /// Row lookup: output row `i` is `table[ids[i]]`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut value = Matrix::zeros(ids.len(), t.cols);
        for (i, &id) in ids.iter().enumerate() {
            value.row_mut(i).copy_from_slice(t.row(id));
        }
        self.push(value, Op::Gather { table, ids: ids.to_vec() })
    }

    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        let v = self.value(x);
        assert_eq!(v.len(), rows * cols, "reshape changes element count");
        let value = Matrix::from_vec(rows, cols, v.data.clone());
        self.push(value, Op::Reshape(x))
    }

    /// Column means as a `1 x c` row.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let v = self.value(x);
        assert!(v.rows > 0, "mean of zero rows");
        let mut value = Matrix::zeros(1, v.cols);
        for r in 0..v.rows {
            for (o, x) in value.data.iter_mut().zip(v.row(r)) {
                *o += x;
            }
        }
        value.scale_assign(1.0 / v.rows as f64);
        self.push(value, Op::MeanRows(x))
    }

    /// Stacks `n` copies of a single row.
    pub fn repeat_rows(&mut self, x: Var, n: usize) -> Var {
        let v = self.value(x);
        assert_eq!(v.rows, 1, "repeat_rows expects a single row");
        let mut data = Vec::with_capacity(n * v.cols);
        for _ in 0..n {
            data.extend_from_slice(&v.data);
        }
        let value = Matrix::from_vec(n, v.cols, data);
        self.push(value, Op::RepeatRows(x))
    }

    /// Mean over rows of `-log softmax(logits[r])[golds[r]]`, as a `1 x 1`.
    pub fn cross_entropy(&mut self, logits: Var, golds: &[usize]) -> Var {
        let l = self.value(logits);
        assert_eq!(l.rows, golds.len(), "one gold index per logit row");
        assert!(!golds.is_empty());
        let mut probs = l.clone();
        let mut total = 0.0;
        for (r, &g) in golds.iter().enumerate() {
            assert!(g < l.cols, "gold index {g} out of arity {}", l.cols);
            let row = l.row(r);
            let lse = log_sum_exp(row);
            total += lse - row[g];
            softmax_in_place(probs.row_mut(r));
        }
        let value = Matrix::scalar(total / golds.len() as f64);
        self.push(value, Op::CrossEntropy { logits, golds: golds.to_vec(), probs })
    }

    /// Sum of equally shaped nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Var {
        let mut value = self.value(parts[0]).clone();
        for &p in &parts[1..] {
            assert_eq!(self.shape(p), value.shape(), "sum shape mismatch");
            value.add_assign(self.value(p));
        }
        self.push(value, Op::Sum(parts.to_vec()))
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.shape(), (1, 1), "not a scalar");
        m.data[0]
    }

    /// Backpropagates from the scalar `loss`, adding parameter gradients
    /// into `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) {
        assert_eq!(self.shape(loss), (1, 1), "backward from a non-scalar");
        let mut gs: Vec<Option<Matrix>> = Vec::new();
        gs.resize_with(loss.0 + 1, || None);
        gs[loss.0] = Some(Matrix::scalar(1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = gs[i].take() else { continue };
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Param(p) => grads.grads[p.0].add_assign(&g),
                Op::MatMul { a, b, trans_b } => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    // C = A B   => dA = G B^T, dB = A^T G
                    // C = A B^T => dA = G B,   dB = G^T A
                    let ga = slot(&mut gs, *a, av.shape());
                    gemm(1.0, &g, false, bv, !trans_b, 1.0, ga);
                    let gb = slot(&mut gs, *b, bv.shape());
                    if *trans_b {
                        gemm(1.0, &g, true, av, false, 1.0, gb);
                    } else {
                        gemm(1.0, av, true, &g, false, 1.0, gb);
                    }
                }
                Op::Add(a, b) => {
                    accum(&mut gs, *b, g.clone());
                    accum(&mut gs, *a, g);
                }
                Op::AddRow { x, bias } => {
                    accum(&mut gs, *bias, col_sums(&g));
                    accum(&mut gs, *x, g);
                }
                Op::Scale(x, s) => {
                    let mut g = g;
                    if *s != 1.0 {
                        g.scale_assign(*s);
                    }
                    accum(&mut gs, *x, g);
                }
                Op::Mask { x, mask } => {
                    let mut g = g;
                    for (gg, m) in g.data.iter_mut().zip(&mask.data) {
                        *gg *= m;
                    }
                    accum(&mut gs, *x, g);
                }
                Op::Gelu(x) => {
                    let xv = self.value(*x);
                    let mut g = g;
                    for (gg, &v) in g.data.iter_mut().zip(&xv.data) {
                        let u = GELU_C * (v + GELU_A * v * v * v);
                        let t = libm::tanh(u);
                        let du = GELU_C * (1.0 + 3.0 * GELU_A * v * v);
                        *gg *= 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
                    }
                    accum(&mut gs, *x, g);
                }
                Op::LayerNorm { x, gain, bias, xhat, rstd } => {
                    let gv = &self.value(*gain).data;
                    let (rows, cols) = xhat.shape();
                    let mut dgain = Matrix::zeros(1, cols);
                    let dbias = col_sums(&g);
                    let mut dx = Matrix::zeros(rows, cols);
                    let mut dxhat = vec![0.0; cols];
                    for r in 0..rows {
                        let (gr, hr) = (g.row(r), xhat.row(r));
                        let mut mean_d = 0.0;
                        let mut mean_dh = 0.0;
                        for c in 0..cols {
                            dgain.data[c] += gr[c] * hr[c];
                            dxhat[c] = gr[c] * gv[c];
                            mean_d += dxhat[c];
                            mean_dh += dxhat[c] * hr[c];
                        }
                        mean_d /= cols as f64;
                        mean_dh /= cols as f64;
                        for (c, o) in dx.row_mut(r).iter_mut().enumerate() {
                            *o = rstd[r] * (dxhat[c] - mean_d - hr[c] * mean_dh);
                        }
                    }
                    accum(&mut gs, *gain, dgain);
                    accum(&mut gs, *bias, dbias);
                    accum(&mut gs, *x, dx);
                }
                Op::Softmax(x) => {
                    let y = &self.nodes[i].value;
                    let mut dx = g;
                    for r in 0..y.rows {
                        let yr = y.row(r);
                        let dot: f64 = dx.row(r).iter().zip(yr).map(|(a, b)| a * b).sum();
                        for (d, &yy) in dx.row_mut(r).iter_mut().zip(yr) {
                            *d = yy * (*d - dot);
                        }
                    }
                    accum(&mut gs, *x, dx);
                }
                Op::VStack(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        if rows == 0 {
                            continue;
                        }
                        let data = g.data[off * cols..(off + rows) * cols].to_vec();
                        accum(&mut gs, p, Matrix::from_vec(rows, cols, data));
                        off += rows;
                    }
                }
                Op::HStack(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let (rows, cols) = self.shape(p);
                        let mut gp = Matrix::zeros(rows, cols);
                        for r in 0..rows {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[off..off + cols]);
                        }
                        accum(&mut gs, p, gp);
                        off += cols;
                    }
                }
                Op::SliceRows { x, start } => {
                    let dst = slot(&mut gs, *x, self.shape(*x));
                    let off = start * dst.cols;
                    for (o, v) in dst.data[off..off + g.len()].iter_mut().zip(&g.data) {
                        *o += v;
                    }
                }
                Op::SliceCols { x, start } => {
                    let dst = slot(&mut gs, *x, self.shape(*x));
                    for r in 0..g.rows {
                        for (o, v) in dst.row_mut(r)[*start..start + g.cols].iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                }
                Op::Gather { table, ids } => {
                    let dst = slot(&mut gs, *table, self.shape(*table));
                    for (r, &id) in ids.iter().enumerate() {
                        for (o, v) in dst.row_mut(id).iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                }
                Op::Reshape(x) => {
                    let (rows, cols) = self.shape(*x);
                    accum(&mut gs, *x, Matrix::from_vec(rows, cols, g.data));
                }
                Op::MeanRows(x) => {
                    let (rows, cols) = self.shape(*x);
                    let inv = 1.0 / rows as f64;
                    let mut gx = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        for (o, v) in gx.row_mut(r).iter_mut().zip(&g.data) {
                            *o = v * inv;
                        }
                    }
                    accum(&mut gs, *x, gx);
                }
                Op::RepeatRows(x) => accum(&mut gs, *x, col_sums(&g)),
                Op::CrossEntropy { logits, golds, probs } => {
                    let scale = g.data[0] / golds.len() as f64;
                    let mut gl = probs.clone();
                    for (r, &gold) in golds.iter().enumerate() {
                        gl.row_mut(r)[gold] -= 1.0;
                    }
                    gl.scale_assign(scale);
                    accum(&mut gs, *logits, gl);
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        accum(&mut gs, p, g.clone());
                    }
                }
            }
        }
    }
}

fn accum(gs: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut gs[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot => *slot = Some(g),
    }
}

/// Gradient slot of `v`, zero-initialized on first use.
fn slot(gs: &mut [Option<Matrix>], v: Var, shape: (usize, usize)) -> &mut Matrix {
    gs[v.0].get_or_insert_with(|| Matrix::zeros(shape.0, shape.1))
}

fn col_sums(g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, g.cols);
    for r in 0..g.rows {
        for (o, v) in out.data.iter_mut().zip(g.row(r)) {
            *o += v;
        }
    }
    out
}

pub fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(row.iter().map(|v| libm::exp(v - m)).sum::<f64>())
}

pub fn softmax_in_place(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - m);
        z += *v;
    }
    for v in row.iter_mut() {
        *v /= z;
    }
}
