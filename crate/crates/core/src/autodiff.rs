//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] borrows a [`ParamStore`] and records every operation in
//! execution order, so operands always precede their results. Parameter
//! values are read in place and never copied onto the tape; their
//! gradients are written straight into a [`Gradients`] buffer during
//! [`Tape::backward`]. Every operation checks its output for NaN/Inf and
//! fails immediately instead of propagating it.

use crate::error::TensorError;
use crate::params::{Gradients, ParamId, ParamStore};
use crate::tensor::{axpy, dot, Tensor};

type Result<T> = std::result::Result<T, TensorError>;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn node_id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    AddRowBias(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Softmax(Var),
    Concat(Vec<Var>),
    StackRows(Vec<Var>),
    Slice(Var, usize),
    Row(Var, usize),
    RowMax(Var, Vec<usize>),
    CrossEntropy(Var, usize, Vec<f64>),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            op,
            left: a.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok(())
}

fn need_vector(op: &'static str, t: &Tensor) -> Result<usize> {
    match t.shape() {
        [n] => Ok(*n),
        other => Err(TensorError::ShapeMismatch {
            op,
            left: other.to_vec(),
            right: vec![],
        }),
    }
}

fn need_matrix(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        other => Err(TensorError::ShapeMismatch {
            op,
            left: other.to_vec(),
            right: vec![],
        }),
    }
}

/// Numerically stable softmax of a slice.
pub fn softmax_slice(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Numerically stable log-softmax of a slice.
pub fn log_softmax_slice(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
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

    /// Drops every node recorded after `mark` (a previous [`Tape::len`]).
    /// Handles created after the mark become invalid.
    pub fn rewind(&mut self, mark: usize) {
        self.nodes.truncate(mark);
        for slot in &mut self.param_nodes {
            if matches!(slot, Some(v) if v.0 >= mark) {
                *slot = None;
            }
        }
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => self.params.get(*id),
            (None, _) => unreachable!("only parameter leaves omit their value"),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        self.nodes.push(Node {
            value: Some(value),
            op,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.push(value, Op::Constant, "constant")
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    fn binary(
        &mut self,
        a: Var,
        b: Var,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        same_shape(name, ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        let out = Tensor::new(ta.shape(), data)?;
        self.push(out, op, name)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| x * factor).collect();
        let out = Tensor::new(ta.shape(), data)?;
        self.push(out, Op::Scale(a, factor), "scale")
    }

    /// `A[m×k] × B[k×n]`, or `A[m×k] × b[k]` giving a length-`m` vector.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (m, k) = need_matrix("matmul", ta)?;
        let mismatch = || TensorError::ShapeMismatch {
            op: "matmul",
            left: ta.shape().to_vec(),
            right: tb.shape().to_vec(),
        };
        let out = match tb.shape() {
            [kb] if *kb == k => {
                let x = tb.data();
                let data = (0..m).map(|i| dot(ta.row(i), x)).collect();
                Tensor::vector(data)?
            }
            [kb, n] if *kb == k => {
                let n = *n;
                let mut data = vec![0.0; m * n];
                for i in 0..m {
                    let out_row = &mut data[i * n..(i + 1) * n];
                    for (p, &a_ip) in ta.row(i).iter().enumerate() {
                        if a_ip != 0.0 {
                            axpy(a_ip, tb.row(p), out_row);
                        }
                    }
                }
                Tensor::matrix(m, n, data)?
            }
            _ => return Err(mismatch()),
        };
        self.push(out, Op::MatMul(a, b), "matmul")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        let (r, c) = need_matrix("transpose", ta)?;
        let src = ta.data();
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = src[i * c + j];
            }
        }
        let out = Tensor::matrix(c, r, data)?;
        self.push(out, Op::Transpose(a), "transpose")
    }

    /// Adds `bias[i]` to every entry of row `i` of `m`.
    pub fn add_row_bias(&mut self, m: Var, bias: Var) -> Result<Var> {
        let (tm, tb) = (self.value(m), self.value(bias));
        let (r, c) = need_matrix("add_row_bias", tm)?;
        if tb.shape() != [r] {
            return Err(TensorError::ShapeMismatch {
                op: "add_row_bias",
                left: tm.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let mut data = tm.data().to_vec();
        for (i, b) in tb.data().iter().enumerate() {
            data[i * c..(i + 1) * c].iter_mut().for_each(|v| *v += b);
        }
        let out = Tensor::matrix(r, c, data)?;
        self.push(out, Op::AddRowBias(m, bias), "add_row_bias")
    }

    fn unary(&mut self, a: Var, name: &'static str, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let ta = self.value(a);
        let data = ta.data().iter().map(|x| f(*x)).collect();
        let out = Tensor::new(ta.shape(), data)?;
        self.push(out, op, name)
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "tanh", f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.unary(a, "sigmoid", |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let ta = self.value(a);
        need_vector("softmax", ta)?;
        let out = Tensor::vector(softmax_slice(ta.data()))?;
        self.push(out, Op::Softmax(a), "softmax")
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(TensorError::Empty { op: "concat" });
        }
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            need_vector("concat", t)?;
            data.extend_from_slice(t.data());
        }
        let out = Tensor::vector(data)?;
        self.push(out, Op::Concat(parts.to_vec()), "concat")
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let first = *rows.first().ok_or(TensorError::Empty { op: "stack_rows" })?;
        let width = need_vector("stack_rows", self.value(first))?;
        let mut data = Vec::with_capacity(width * rows.len());
        for &r in rows {
            let t = self.value(r);
            if t.shape() != [width] {
                return Err(TensorError::ShapeMismatch {
                    op: "stack_rows",
                    left: vec![width],
                    right: t.shape().to_vec(),
                });
            }
            data.extend_from_slice(t.data());
        }
        let out = Tensor::matrix(rows.len(), width, data)?;
        self.push(out, Op::StackRows(rows.to_vec()), "stack_rows")
    }

    /// Elements `start..start + len` of a vector.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let ta = self.value(a);
        let n = need_vector("slice", ta)?;
        if len == 0 || start + len > n {
            return Err(TensorError::Index {
                op: "slice",
                index: start + len,
                bound: n,
            });
        }
        let out = Tensor::vector(ta.data()[start..start + len].to_vec())?;
        self.push(out, Op::Slice(a, start), "slice")
    }

    /// Row `index` of a matrix, as a vector. Used for embedding lookup.
    pub fn row(&mut self, m: Var, index: usize) -> Result<Var> {
        let tm = self.value(m);
        let (r, _) = need_matrix("row", tm)?;
        if index >= r {
            return Err(TensorError::Index {
                op: "row",
                index,
                bound: r,
            });
        }
        let out = Tensor::vector(tm.row(index).to_vec())?;
        self.push(out, Op::Row(m, index), "row")
    }

    /// Per-row maximum. Ties resolve to the lowest column, which alone
    /// receives the gradient.
    pub fn rowmax(&mut self, m: Var) -> Result<Var> {
        let tm = self.value(m);
        let (r, _) = need_matrix("rowmax", tm)?;
        let mut arg = Vec::with_capacity(r);
        let mut data = Vec::with_capacity(r);
        for i in 0..r {
            let row = tm.row(i);
            let mut best = 0;
            for (j, v) in row.iter().enumerate().skip(1) {
                if *v > row[best] {
                    best = j;
                }
            }
            arg.push(best);
            data.push(row[best]);
        }
        let out = Tensor::vector(data)?;
        self.push(out, Op::RowMax(m, arg), "rowmax")
    }

    /// `-log softmax(logits)[target]`, evaluated through log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let tl = self.value(logits);
        let v = need_vector("cross_entropy", tl)?;
        if target >= v {
            return Err(TensorError::Index {
                op: "cross_entropy",
                index: target,
                bound: v,
            });
        }
        let z = tl.data();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = z.iter().map(|x| (x - max).exp()).sum();
        let loss = max + total.ln() - z[target];
        let probs = z.iter().map(|x| (x - max).exp() / total).collect();
        let out = Tensor::vector(vec![loss])?;
        self.push(out, Op::CrossEntropy(logits, target, probs), "cross_entropy")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let total = self.value(a).sum();
        self.push(Tensor::vector(vec![total])?, Op::Sum(a), "sum")
    }

    /// Sums a list of scalars.
    pub fn add_all(&mut self, terms: &[Var]) -> Result<Var> {
        let first = *terms.first().ok_or(TensorError::Empty { op: "add_all" })?;
        let mut acc = first;
        for &t in &terms[1..] {
            acc = self.add(acc, t)?;
        }
        Ok(acc)
    }

    /// Accumulates `d loss / d param` for every parameter reached from
    /// `loss` into `grads`. Existing contents of `grads` are added to.
    pub fn backward(&self, loss: Var, grads: &mut Gradients) -> Result<()> {
        let shape = self.value(loss).shape();
        if shape != [1] {
            return Err(TensorError::NotScalar {
                shape: shape.to_vec(),
            });
        }
        let mut node_grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        node_grads[loss.0] = Some(vec![1.0]);
        let mut deferred: Vec<(ParamId, Vec<f64>, Var)> = Vec::new();

        for idx in (0..=loss.0).rev() {
            let Some(g) = node_grads[idx].take() else {
                continue;
            };
            let mut sink = Sink {
                tape: self,
                node_grads: &mut node_grads,
                grads: &mut *grads,
            };
            match &self.nodes[idx].op {
                Op::Constant | Op::Param(_) => {}
                Op::Add(a, b) => {
                    axpy(1.0, &g, sink.slot(*a));
                    axpy(1.0, &g, sink.slot(*b));
                }
                Op::Sub(a, b) => {
                    axpy(1.0, &g, sink.slot(*a));
                    axpy(-1.0, &g, sink.slot(*b));
                }
                Op::Mul(a, b) => {
                    let va = self.value(*a).data();
                    let vb = self.value(*b).data();
                    for ((d, gi), y) in sink.slot(*a).iter_mut().zip(&g).zip(vb) {
                        *d += gi * y;
                    }
                    for ((d, gi), x) in sink.slot(*b).iter_mut().zip(&g).zip(va) {
                        *d += gi * x;
                    }
                }
                Op::Scale(a, factor) => axpy(*factor, &g, sink.slot(*a)),
                Op::MatMul(a, b) => {
                    let ta = self.value(*a);
                    let tb = self.value(*b);
                    let (m, _) = ta.dims2();
                    match tb.shape() {
                        [_] => {
                            let db = sink.slot(*b);
                            for (i, gi) in g.iter().enumerate() {
                                if *gi != 0.0 {
                                    axpy(*gi, ta.row(i), db);
                                }
                            }
                            if let Op::Param(id) = self.nodes[a.0].op {
                                // Outer products into weight matrices are
                                // flushed together after the sweep.
                                deferred.push((id, g, *b));
                                continue;
                            }
                            let x = tb.data();
                            let da = sink.slot(*a);
                            let k = x.len();
                            for (i, gi) in g.iter().enumerate() {
                                if *gi != 0.0 {
                                    axpy(*gi, x, &mut da[i * k..(i + 1) * k]);
                                }
                            }
                        }
                        _ => {
                            let (k, n) = tb.dims2();
                            let da = sink.slot(*a);
                            for i in 0..m {
                                let g_row = &g[i * n..(i + 1) * n];
                                for p in 0..k {
                                    da[i * k + p] += dot(g_row, tb.row(p));
                                }
                            }
                            let db = sink.slot(*b);
                            for i in 0..m {
                                let g_row = &g[i * n..(i + 1) * n];
                                for (p, &a_ip) in ta.row(i).iter().enumerate() {
                                    if a_ip != 0.0 {
                                        axpy(a_ip, g_row, &mut db[p * n..(p + 1) * n]);
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Transpose(a) => {
                    let (r, c) = self.value(*a).dims2();
                    let da = sink.slot(*a);
                    for i in 0..r {
                        for j in 0..c {
                            da[i * c + j] += g[j * r + i];
                        }
                    }
                }
                Op::AddRowBias(m, bias) => {
                    let (_, c) = self.value(*m).dims2();
                    axpy(1.0, &g, sink.slot(*m));
                    for (b, chunk) in sink.slot(*bias).iter_mut().zip(g.chunks(c)) {
                        *b += chunk.iter().sum::<f64>();
                    }
                }
                Op::Tanh(a) => {
                    let y = self.nodes[idx].value.as_ref().unwrap().data();
                    for ((d, gi), yi) in sink.slot(*a).iter_mut().zip(&g).zip(y) {
                        *d += gi * (1.0 - yi * yi);
                    }
                }
                Op::Sigmoid(a) => {
                    let y = self.nodes[idx].value.as_ref().unwrap().data();
                    for ((d, gi), yi) in sink.slot(*a).iter_mut().zip(&g).zip(y) {
                        *d += gi * yi * (1.0 - yi);
                    }
                }
                Op::Softmax(a) => {
                    let y = self.nodes[idx].value.as_ref().unwrap().data();
                    let gy = dot(&g, y);
                    for ((d, gi), yi) in sink.slot(*a).iter_mut().zip(&g).zip(y) {
                        *d += yi * (gi - gy);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.value(*p).numel();
                        axpy(1.0, &g[offset..offset + n], sink.slot(*p));
                        offset += n;
                    }
                }
                Op::StackRows(rows) => {
                    for (r, chunk) in rows.iter().zip(g.chunks(g.len() / rows.len())) {
                        axpy(1.0, chunk, sink.slot(*r));
                    }
                }
                Op::Slice(a, start) => {
                    let da = sink.slot(*a);
                    axpy(1.0, &g, &mut da[*start..*start + g.len()]);
                }
                Op::Row(m, index) => {
                    let n = g.len();
                    let dm = sink.slot(*m);
                    axpy(1.0, &g, &mut dm[index * n..(index + 1) * n]);
                }
                Op::RowMax(m, arg) => {
                    let (_, c) = self.value(*m).dims2();
                    let dm = sink.slot(*m);
                    for (i, (&j, gi)) in arg.iter().zip(&g).enumerate() {
                        dm[i * c + j] += gi;
                    }
                }
                Op::CrossEntropy(logits, target, probs) => {
                    let dl = sink.slot(*logits);
                    for (d, p) in dl.iter_mut().zip(probs) {
                        *d += g[0] * p;
                    }
                    dl[*target] -= g[0];
                }
                Op::Sum(a) => {
                    sink.slot(*a).iter_mut().for_each(|d| *d += g[0]);
                }
            }
        }
        self.flush_outer_products(deferred, grads);
        Ok(())
    }

    /// Adds `Σ g xᵀ` for every deferred `(param, g, x)` triple, visiting
    /// each gradient row once.
    fn flush_outer_products(&self, mut deferred: Vec<(ParamId, Vec<f64>, Var)>, grads: &mut Gradients) {
        deferred.sort_by_key(|(id, _, _)| *id);
        for group in deferred.chunk_by(|a, b| a.0 == b.0) {
            let id = group[0].0;
            let k = self.value(group[0].2).numel();
            let dm = grads.get_mut(id);
            for (i, row) in dm.chunks_exact_mut(k).enumerate() {
                for (_, g, x) in group {
                    let gi = g[i];
                    if gi != 0.0 {
                        axpy(gi, self.value(*x).data(), row);
                    }
                }
            }
        }
    }
}

/// Routes gradient contributions either to a node buffer or, for
/// parameter leaves, straight into the parameter gradients.
struct Sink<'a, 'p> {
    tape: &'a Tape<'p>,
    node_grads: &'a mut Vec<Option<Vec<f64>>>,
    grads: &'a mut Gradients,
}

impl Sink<'_, '_> {
    fn slot(&mut self, v: Var) -> &mut [f64] {
        match &self.tape.nodes[v.0].op {
            Op::Param(id) => self.grads.get_mut(*id),
            _ => {
                let n = self.tape.value(v).numel();
                self.node_grads[v.0].get_or_insert_with(|| vec![0.0; n])
            }
        }
    }
}
