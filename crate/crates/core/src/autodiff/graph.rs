//! Tape-based reverse-mode differentiation over dense vectors and matrices.
//!
//! A [`Graph`] borrows a [`ParamSet`] immutably and records every operation
//! as a node. [`Graph::backward`] consumes the tape and returns the
//! gradient of a scalar node with respect to every parameter it reached.

use rand::Rng;

use super::params::{ParamId, ParamSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle of a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddN(Vec<NodeId>),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Concat(Vec<NodeId>),
    Slice { src: NodeId, start: usize },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Softmax(NodeId),
    LogSoftmax(NodeId),
    ClampMin { src: NodeId, floor: f64 },
    Embedding { table: NodeId, row: usize },
    Dropout { src: NodeId, mask: Vec<f64> },
    CrossEntropy { probs: NodeId, label: usize },
    Pick { src: NodeId, index: usize },
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    // Empty for parameter nodes; their values live in the ParamSet.
    value: Vec<f64>,
    op: Op,
}

/// Per-parameter gradients produced by one backward pass.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    per_param: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// `None` means the parameter was not reachable from the loss (gradient zero).
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.per_param.get(id.0).and_then(|g| g.as_deref())
    }

    /// Adds another pass's gradients into this one.
    pub fn merge(&mut self, other: Gradients) {
        if self.per_param.len() < other.per_param.len() {
            self.per_param.resize(other.per_param.len(), None);
        }
        for (mine, theirs) in self.per_param.iter_mut().zip(other.per_param) {
            match (mine.as_mut(), theirs) {
                (Some(a), Some(b)) => axpy(1.0, &b, a),
                (None, Some(b)) => *mine = Some(b),
                (_, None) => {}
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.per_param.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn reached(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.per_param
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_some())
            .map(|(i, _)| ParamId(i))
    }
}

pub struct Graph<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_softmax_values(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamSet {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        match self.nodes[id.0].op {
            Op::Param(pid) => self.params.get(pid).values(),
            _ => &self.nodes[id.0].value,
        }
    }

    /// Value of a single-element node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.value(id)[0]
    }

    pub fn to_tensor(&self, id: NodeId) -> Tensor {
        Tensor::new(self.shape(id).to_vec(), self.value(id).to_vec())
            .expect("recorded nodes have valid shapes")
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> Result<NodeId> {
        if let Some(bad) = value.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{} (element {bad})",
                op_name(&op)
            )));
        }
        self.nodes.push(Node { shape, value, op });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn len_of(&self, id: NodeId) -> usize {
        self.shape(id).iter().product()
    }

    fn require_vector(&self, op: &'static str, id: NodeId) -> Result<usize> {
        match self.shape(id) {
            [n] => Ok(*n),
            other => Err(Error::shape(op, format!("expected a vector, got {other:?}"))),
        }
    }

    /// Constant leaf; receives no gradient.
    pub fn input(&mut self, tensor: Tensor) -> NodeId {
        let shape = tensor.shape().to_vec();
        let value = tensor.values().to_vec();
        self.nodes.push(Node {
            shape,
            value,
            op: Op::Input,
        });
        NodeId(self.nodes.len() - 1)
    }

    pub fn vector(&mut self, values: Vec<f64>) -> NodeId {
        self.input(Tensor::vector(values))
    }

    /// Leaf bound to a parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(node) = self.param_nodes[id.0] {
            return node;
        }
        let shape = self.params.get(id).shape().to_vec();
        self.nodes.push(Node {
            shape,
            value: Vec::new(),
            op: Op::Param(id),
        });
        let node = NodeId(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(node);
        node
    }

    /// `[m, k] x [k, n] -> [m, n]`, or `[m, k] x [k] -> [m]`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = match self.shape(a) {
            [m, k] => (*m, *k),
            other => {
                return Err(Error::shape(
                    "matmul",
                    format!("{other:?} x {:?}", self.shape(b)),
                ))
            }
        };
        let (kb, n, vector_rhs) = match self.shape(b) {
            [k] => (*k, 1, true),
            [k, n] => (*k, *n, false),
            other => return Err(Error::shape("matmul", format!("[{m}, {k}] x {other:?}"))),
        };
        if k != kb {
            return Err(Error::shape(
                "matmul",
                format!("{:?} x {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = vec![0.0; m * n];
        if n == 1 {
            for (i, o) in out.iter_mut().enumerate() {
                *o = dot(&av[i * k..(i + 1) * k], bv);
            }
        } else {
            for i in 0..m {
                let row = &mut out[i * n..(i + 1) * n];
                for p in 0..k {
                    axpy(av[i * k + p], &bv[p * n..(p + 1) * n], row);
                }
            }
        }
        let shape = if vector_rhs { vec![m] } else { vec![m, n] };
        self.push(shape, out, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(
                "add",
                format!("{:?} + {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        self.push(self.shape(a).to_vec(), out, Op::Add(a, b))
    }

    /// Sum of same-shaped nodes.
    pub fn add_n(&mut self, items: &[NodeId]) -> Result<NodeId> {
        let first = *items.first().ok_or(Error::Empty("add_n inputs"))?;
        let shape = self.shape(first).to_vec();
        let mut out = vec![0.0; self.len_of(first)];
        for &id in items {
            if self.shape(id) != shape.as_slice() {
                return Err(Error::shape(
                    "add_n",
                    format!("{shape:?} vs {:?}", self.shape(id)),
                ));
            }
            for (o, v) in out.iter_mut().zip(self.value(id)) {
                *o += v;
            }
        }
        self.push(shape, out, Op::AddN(items.to_vec()))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::shape(
                "elementwise-mul",
                format!("{:?} * {:?}", self.shape(a), self.shape(b)),
            ));
        }
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        self.push(self.shape(a).to_vec(), out, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let out = self.value(a).iter().map(|x| x * factor).collect();
        self.push(self.shape(a).to_vec(), out, Op::Scale(a, factor))
    }

    /// Concatenation of vectors.
    pub fn concat(&mut self, items: &[NodeId]) -> Result<NodeId> {
        if items.is_empty() {
            return Err(Error::Empty("concat inputs"));
        }
        let mut out = Vec::new();
        for &id in items {
            self.require_vector("concat", id)?;
            out.extend_from_slice(self.value(id));
        }
        let n = out.len();
        self.push(vec![n], out, Op::Concat(items.to_vec()))
    }

    pub fn slice(&mut self, src: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let n = self.require_vector("slice", src)?;
        if len == 0 || start + len > n {
            return Err(Error::shape(
                "slice",
                format!("[{start}..{}] of [{n}]", start + len),
            ));
        }
        let out = self.value(src)[start..start + len].to_vec();
        self.push(vec![len], out, Op::Slice { src, start })
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(self.shape(a).to_vec(), out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let out = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(self.shape(a).to_vec(), out, Op::Tanh(a))
    }

    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        self.require_vector("softmax", a)?;
        let out = log_softmax_values(self.value(a))
            .into_iter()
            .map(f64::exp)
            .collect();
        self.push(self.shape(a).to_vec(), out, Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: NodeId) -> Result<NodeId> {
        self.require_vector("log-softmax", a)?;
        let out = log_softmax_values(self.value(a));
        self.push(self.shape(a).to_vec(), out, Op::LogSoftmax(a))
    }

    /// Elementwise `max(x, floor)`; no gradient flows through clamped entries.
    pub fn clamp_min(&mut self, src: NodeId, floor: f64) -> Result<NodeId> {
        let out = self.value(src).iter().map(|&x| x.max(floor)).collect();
        self.push(self.shape(src).to_vec(), out, Op::ClampMin { src, floor })
    }

    /// Row `row` of a `[rows, dim]` table.
    pub fn embedding(&mut self, table: NodeId, row: usize) -> Result<NodeId> {
        let (rows, dim) = match self.shape(table) {
            [r, d] => (*r, *d),
            other => {
                return Err(Error::shape(
                    "embedding-lookup",
                    format!("table {other:?}"),
                ))
            }
        };
        if row >= rows {
            return Err(Error::shape(
                "embedding-lookup",
                format!("row {row} of [{rows}, {dim}]"),
            ));
        }
        let out = self.value(table)[row * dim..(row + 1) * dim].to_vec();
        self.push(vec![dim], out, Op::Embedding { table, row })
    }

    /// Inverted dropout. In eval mode (`train == false`) the input is
    /// returned unchanged and nothing is recorded.
    pub fn dropout<R: Rng>(
        &mut self,
        src: NodeId,
        keep_prob: f64,
        train: bool,
        rng: &mut R,
    ) -> Result<NodeId> {
        if !(keep_prob > 0.0 && keep_prob <= 1.0) {
            return Err(Error::Invalid(format!(
                "dropout keep probability {keep_prob} not in (0, 1]"
            )));
        }
        if !train || keep_prob == 1.0 {
            return Ok(src);
        }
        let n = self.len_of(src);
        let mask: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < keep_prob {
                    1.0 / keep_prob
                } else {
                    0.0
                }
            })
            .collect();
        let out = self
            .value(src)
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        self.push(self.shape(src).to_vec(), out, Op::Dropout { src, mask })
    }

    /// `-ln(probs[label])` for a probability vector.
    pub fn cross_entropy(&mut self, probs: NodeId, label: usize) -> Result<NodeId> {
        let n = self.require_vector("cross-entropy", probs)?;
        if label >= n {
            return Err(Error::shape(
                "cross-entropy",
                format!("label {label} for [{n}]"),
            ));
        }
        let p = self.value(probs)[label];
        self.push(vec![1], vec![-p.ln()], Op::CrossEntropy { probs, label })
    }

    /// Single element of a vector as a scalar node.
    pub fn pick(&mut self, src: NodeId, index: usize) -> Result<NodeId> {
        let n = self.require_vector("pick", src)?;
        if index >= n {
            return Err(Error::shape("pick", format!("index {index} of [{n}]")));
        }
        let v = self.value(src)[index];
        self.push(vec![1], vec![v], Op::Pick { src, index })
    }

    /// Negative log-likelihood `-logp[label]` from log-probabilities.
    pub fn nll(&mut self, log_probs: NodeId, label: usize) -> Result<NodeId> {
        let picked = self.pick(log_probs, label)?;
        self.scale(picked, -1.0)
    }

    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        let s = self.value(a).iter().sum();
        self.push(vec![1], vec![s], Op::Sum(a))
    }

    /// Reverse pass from a scalar node. Consumes the tape.
    pub fn backward(self, loss: NodeId) -> Result<Gradients> {
        if self.len_of(loss) != 1 {
            return Err(Error::NonScalarLoss(self.shape(loss).to_vec()));
        }
        if !self.scalar(loss).is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut per_param: Vec<Option<Vec<f64>>> = vec![None; self.params.len()];

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(pid) => {
                    if let Some(bad) = g.iter().position(|v| !v.is_finite()) {
                        return Err(Error::NonFinite(format!(
                            "gradient of `{}` (element {bad})",
                            self.params.name(*pid)
                        )));
                    }
                    per_param[pid.0] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                    let n = if self.shape(*b).len() == 1 {
                        1
                    } else {
                        self.shape(*b)[1]
                    };
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    {
                        let da = buf(&mut grads, *a, m * k);
                        if n == 1 {
                            for i in 0..m {
                                axpy(g[i], bv, &mut da[i * k..(i + 1) * k]);
                            }
                        } else {
                            for i in 0..m {
                                for p in 0..k {
                                    da[i * k + p] += dot(&g[i * n..(i + 1) * n], &bv[p * n..(p + 1) * n]);
                                }
                            }
                        }
                    }
                    let db = buf(&mut grads, *b, k * n);
                    if n == 1 {
                        for i in 0..m {
                            axpy(g[i], &av[i * k..(i + 1) * k], db);
                        }
                    } else {
                        for i in 0..m {
                            for p in 0..k {
                                axpy(av[i * k + p], &g[i * n..(i + 1) * n], &mut db[p * n..(p + 1) * n]);
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(buf(&mut grads, *a, g.len()), &g);
                    add_into(buf(&mut grads, *b, g.len()), &g);
                }
                Op::AddN(items) => {
                    for id in items {
                        add_into(buf(&mut grads, *id, g.len()), &g);
                    }
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    {
                        let da = buf(&mut grads, *a, g.len());
                        for ((d, gi), bi) in da.iter_mut().zip(&g).zip(bv) {
                            *d += gi * bi;
                        }
                    }
                    let db = buf(&mut grads, *b, g.len());
                    for ((d, gi), ai) in db.iter_mut().zip(&g).zip(av) {
                        *d += gi * ai;
                    }
                }
                Op::Scale(a, factor) => {
                    axpy(*factor, &g, buf(&mut grads, *a, g.len()));
                }
                Op::Concat(items) => {
                    let mut offset = 0;
                    for id in items {
                        let n = self.len_of(*id);
                        add_into(buf(&mut grads, *id, n), &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Slice { src, start } => {
                    let n = self.len_of(*src);
                    let d = buf(&mut grads, *src, n);
                    add_into(&mut d[*start..*start + g.len()], &g);
                }
                Op::Sigmoid(a) => {
                    let d = buf(&mut grads, *a, g.len());
                    for ((d, gi), y) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let d = buf(&mut grads, *a, g.len());
                    for ((d, gi), y) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d += gi * (1.0 - y * y);
                    }
                }
                Op::Softmax(a) => {
                    let gy = dot(&g, &node.value);
                    let d = buf(&mut grads, *a, g.len());
                    for ((d, gi), y) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d += y * (gi - gy);
                    }
                }
                Op::LogSoftmax(a) => {
                    let total: f64 = g.iter().sum();
                    let d = buf(&mut grads, *a, g.len());
                    for ((d, gi), lp) in d.iter_mut().zip(&g).zip(&node.value) {
                        *d += gi - lp.exp() * total;
                    }
                }
                Op::ClampMin { src, floor } => {
                    let xv = self.value(*src);
                    let d = buf(&mut grads, *src, g.len());
                    for ((d, gi), x) in d.iter_mut().zip(&g).zip(xv) {
                        if *x > *floor {
                            *d += gi;
                        }
                    }
                }
                Op::Embedding { table, row } => {
                    let n = self.len_of(*table);
                    let dim = g.len();
                    let d = buf(&mut grads, *table, n);
                    add_into(&mut d[row * dim..(row + 1) * dim], &g);
                }
                Op::Dropout { src, mask } => {
                    let d = buf(&mut grads, *src, g.len());
                    for ((d, gi), m) in d.iter_mut().zip(&g).zip(mask) {
                        *d += gi * m;
                    }
                }
                Op::CrossEntropy { probs, label } => {
                    let n = self.len_of(*probs);
                    let p = self.value(*probs)[*label];
                    buf(&mut grads, *probs, n)[*label] -= g[0] / p;
                }
                Op::Pick { src, index } => {
                    let n = self.len_of(*src);
                    buf(&mut grads, *src, n)[*index] += g[0];
                }
                Op::Sum(a) => {
                    let d = buf(&mut grads, *a, self.len_of(*a));
                    d.iter_mut().for_each(|v| *v += g[0]);
                }
            }
        }
        Ok(Gradients { per_param })
    }
}

fn buf(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut [f64] {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Input => "input",
        Op::Param(_) => "param",
        Op::MatMul(..) => "matmul",
        Op::Add(..) => "add",
        Op::AddN(_) => "add_n",
        Op::Mul(..) => "elementwise-mul",
        Op::Scale(..) => "scale",
        Op::Concat(_) => "concat",
        Op::Slice { .. } => "slice",
        Op::Sigmoid(_) => "sigmoid",
        Op::Tanh(_) => "tanh",
        Op::Softmax(_) => "softmax",
        Op::LogSoftmax(_) => "log-softmax",
        Op::ClampMin { .. } => "clamp_min",
        Op::Embedding { .. } => "embedding-lookup",
        Op::Dropout { .. } => "dropout",
        Op::CrossEntropy { .. } => "cross-entropy",
        Op::Pick { .. } => "pick",
        Op::Sum(_) => "sum",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_param(values: Vec<f64>) -> (ParamSet, ParamId) {
        let mut p = ParamSet::new(0);
        let id = p.insert("x", Tensor::vector(values)).unwrap();
        (p, id)
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = ParamSet::new(0);
        let mut g = Graph::new(&p);
        let x = g.vector(vec![0.0; 3]);
        let y = g.softmax(x).unwrap();
        for v in g.value(y) {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let ce = g.cross_entropy(y, 0).unwrap();
        assert!((g.scalar(ce) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let p = ParamSet::new(0);
        let mut g = Graph::new(&p);
        let a = g.input(Tensor::zeros(vec![2, 3]));
        let b = g.input(Tensor::zeros(vec![4, 5]));
        let err = g.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("matmul") && msg.contains("[2, 3]") && msg.contains("[4, 5]"), "{msg}");
    }

    #[test]
    fn square_gradient() {
        let (p, id) = one_param(vec![3.0]);
        let mut g = Graph::new(&p);
        let x = g.param(id);
        let sq = g.mul(x, x).unwrap();
        let loss = g.sum(sq).unwrap();
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(id).unwrap(), &[6.0]);
    }

    #[test]
    fn unreachable_parameter_has_no_gradient() {
        let mut p = ParamSet::new(0);
        let used = p.insert("used", Tensor::vector(vec![1.0, 2.0])).unwrap();
        let unused = p.insert("unused", Tensor::vector(vec![5.0])).unwrap();
        let mut g = Graph::new(&p);
        let x = g.param(used);
        let loss = g.sum(x).unwrap();
        let grads = g.backward(loss).unwrap();
        assert!(grads.get(unused).is_none());
        let mut p = p.clone();
        p.accumulate(&grads);
        assert!(p.get(unused).grad().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let (p, id) = one_param(vec![1.0, 2.0]);
        let mut g = Graph::new(&p);
        let x = g.param(id);
        assert!(matches!(g.backward(x), Err(Error::NonScalarLoss(_))));
    }

    #[test]
    fn eval_dropout_is_identity() {
        let p = ParamSet::new(0);
        let mut g = Graph::new(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = g.vector(vec![1.0, -2.0, 3.0]);
        let y = g.dropout(x, 0.5, false, &mut rng).unwrap();
        assert_eq!(x, y);
        let z = g.dropout(x, 0.5, true, &mut rng).unwrap();
        assert!(g.value(z).iter().zip(g.value(x)).all(|(z, x)| *z == 0.0 || *z == 2.0 * x));
    }

    #[test]
    fn shape_errors_name_the_op() {
        let p = ParamSet::new(0);
        let mut g = Graph::new(&p);
        let a = g.vector(vec![1.0, 2.0]);
        let b = g.vector(vec![1.0, 2.0, 3.0]);
        assert!(g.add(a, b).unwrap_err().to_string().starts_with("add"));
        assert!(g.mul(a, b).unwrap_err().to_string().starts_with("elementwise-mul"));
        assert!(g.slice(a, 1, 2).is_err());
        let t = g.input(Tensor::zeros(vec![3, 2]));
        assert!(g.embedding(t, 3).is_err());
        assert!(g.cross_entropy(a, 2).is_err());
    }
}
