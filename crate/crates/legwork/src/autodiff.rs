//! Reverse-mode automatic differentiation over a recorded op graph.
//!
//! The primitive set is deliberately small: matmul, add, mul, sigmoid, tanh,
//! relu, fused softmax-cross-entropy, slice/concat and reduce-sum/mean. That
//! is the minimal closure needed to express the MLP and LSTM models plus
//! their loss, and every primitive has a hand-written VJP that is checked
//! against central finite differences.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{matmul, matmul_nt, matmul_tn, Tensor};

/// Handle to a node inside a [`TapeGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Placeholder { name: String },
    Constant,
    MatMul { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Relu { x: NodeId },
    /// Fused, log-sum-exp stabilized. Produces per-row losses of shape
    /// [batch]; labels ride along as attached data, not graph inputs.
    SoftmaxCrossEntropy { logits: NodeId, labels: Vec<usize> },
    Slice { x: NodeId, axis: usize, start: usize, len: usize },
    Concat { parts: Vec<NodeId>, axis: usize },
    ReduceSum { x: NodeId },
    ReduceMean { x: NodeId },
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
}

/// Recorded computation graph.
///
/// Nodes are appended in construction order, so the list is always
/// topologically sorted: every node's inputs precede it. `forward` fills in
/// per-node values which `backward` then consumes; replaying `forward` on
/// identical inputs reproduces identical values bit for bit.
#[derive(Clone, Debug, Default)]
pub struct TapeGraph {
    nodes: Vec<Node>,
    values: Vec<Option<Tensor>>,
    placeholders: Vec<(String, NodeId)>,
}

impl TapeGraph {
    pub fn new() -> Self {
        TapeGraph::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn shape_of(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    /// Names of all placeholders in declaration order.
    pub fn placeholder_names(&self) -> Vec<String> {
        self.placeholders.iter().map(|(n, _)| n.clone()).collect()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, shape });
        self.values.push(None);
        id
    }

    fn node_label(&self, id: NodeId) -> String {
        let kind = match &self.nodes[id.0].op {
            Op::Placeholder { name } => return format!("placeholder '{name}'"),
            Op::Constant => "constant",
            Op::MatMul { .. } => "matmul",
            Op::Add { .. } => "add",
            Op::Mul { .. } => "mul",
            Op::Sigmoid { .. } => "sigmoid",
            Op::Tanh { .. } => "tanh",
            Op::Relu { .. } => "relu",
            Op::SoftmaxCrossEntropy { .. } => "softmax_cross_entropy",
            Op::Slice { .. } => "slice",
            Op::Concat { .. } => "concat",
            Op::ReduceSum { .. } => "reduce_sum",
            Op::ReduceMean { .. } => "reduce_mean",
        };
        format!("node #{} ({kind})", id.0)
    }

    // ---- builders ---------------------------------------------------------

    pub fn placeholder(&mut self, name: &str, shape: &[usize]) -> Result<NodeId> {
        if self.placeholders.iter().any(|(n, _)| n == name) {
            return Err(Error::invalid(format!("duplicate placeholder '{name}'")));
        }
        let id = self.push(
            Op::Placeholder { name: name.to_string() },
            shape.to_vec(),
        );
        self.placeholders.push((name.to_string(), id));
        Ok(id)
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        let shape = value.shape().to_vec();
        let id = self.push(Op::Constant, shape);
        self.values[id.0] = Some(value);
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, ka) = self.dims2(a)?;
        let (kb, n) = self.dims2(b)?;
        if ka != kb {
            return Err(self.shape_err(b, vec![ka, n], "matmul inner dimension"));
        }
        Ok(self.push(Op::MatMul { a, b }, vec![m, n]))
    }

    /// Elementwise add. `b` may also be a scalar, or a rank-1 bias broadcast
    /// over the rows of a rank-2 `a`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let sa = self.nodes[a.0].shape.clone();
        let sb = self.nodes[b.0].shape.clone();
        let compatible = sa == sb
            || sb.iter().product::<usize>() == 1
            || (sa.len() == 2 && sb.len() == 1 && sb[0] == sa[1]);
        if !compatible {
            return Err(self.shape_err(b, sa, "add operand"));
        }
        Ok(self.push(Op::Add { a, b }, sa))
    }

    /// Elementwise multiply; either side may be a scalar.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let sa = self.nodes[a.0].shape.clone();
        let sb = self.nodes[b.0].shape.clone();
        let shape = if sa == sb || sb.iter().product::<usize>() == 1 {
            sa
        } else if sa.iter().product::<usize>() == 1 {
            sb
        } else {
            return Err(self.shape_err(b, sa, "mul operand"));
        };
        Ok(self.push(Op::Mul { a, b }, shape))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let shape = self.nodes[x.0].shape.clone();
        self.push(Op::Sigmoid { x }, shape)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let shape = self.nodes[x.0].shape.clone();
        self.push(Op::Tanh { x }, shape)
    }

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let shape = self.nodes[x.0].shape.clone();
        self.push(Op::Relu { x }, shape)
    }

    /// Per-row cross-entropy of `logits` ([batch, classes]) against integer
    /// labels, computed through log-sum-exp so large logits cannot overflow.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let (batch, classes) = self.dims2(logits)?;
        if labels.len() != batch {
            return Err(self.shape_err(logits, vec![labels.len(), classes], "label count"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(self.push(
            Op::SoftmaxCrossEntropy { logits, labels: labels.to_vec() },
            vec![batch],
        ))
    }

    /// Contiguous range along one axis of a rank-1 or rank-2 tensor.
    pub fn slice(&mut self, x: NodeId, axis: usize, start: usize, len: usize) -> Result<NodeId> {
        let shape = self.nodes[x.0].shape.clone();
        if axis >= shape.len() || start + len > shape[axis] || len == 0 {
            return Err(Error::invalid(format!(
                "slice [{start}..{}] on axis {axis} of shape {shape:?} at {}",
                start + len,
                self.node_label(x)
            )));
        }
        let mut out_shape = shape;
        out_shape[axis] = len;
        Ok(self.push(Op::Slice { x, axis, start, len }, out_shape))
    }

    /// Concatenate along one axis; all other dimensions must match.
    pub fn concat(&mut self, parts: &[NodeId], axis: usize) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(Error::invalid("concat of zero tensors"));
        }
        let first = self.nodes[parts[0].0].shape.clone();
        if axis >= first.len() {
            return Err(Error::invalid(format!(
                "concat axis {axis} out of range for shape {first:?}"
            )));
        }
        let mut total = 0usize;
        for &p in parts {
            let s = &self.nodes[p.0].shape;
            if s.len() != first.len()
                || s.iter()
                    .enumerate()
                    .any(|(i, &d)| i != axis && d != first[i])
            {
                return Err(self.shape_err(p, first.clone(), "concat operand"));
            }
            total += s[axis];
        }
        let mut out_shape = first;
        out_shape[axis] = total;
        Ok(self.push(Op::Concat { parts: parts.to_vec(), axis }, out_shape))
    }

    pub fn reduce_sum(&mut self, x: NodeId) -> NodeId {
        self.push(Op::ReduceSum { x }, vec![])
    }

    pub fn reduce_mean(&mut self, x: NodeId) -> NodeId {
        self.push(Op::ReduceMean { x }, vec![])
    }

    fn dims2(&self, id: NodeId) -> Result<(usize, usize)> {
        match self.nodes[id.0].shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::invalid(format!(
                "{} must be rank-2, found shape {other:?}",
                self.node_label(id)
            ))),
        }
    }

    fn shape_err(&self, id: NodeId, expected: Vec<usize>, what: &str) -> Error {
        Error::ShapeMismatch {
            context: format!("{} ({what})", self.node_label(id)),
            expected,
            found: self.nodes[id.0].shape.clone(),
        }
    }

    // ---- execution --------------------------------------------------------

    /// Evaluate every node in order, binding `inputs` to placeholders by
    /// name. All intermediate values are retained for `backward`.
    pub fn forward(&mut self, inputs: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, id) in &self.placeholders {
            let t = inputs
                .get(name)
                .ok_or_else(|| Error::invalid(format!("missing input for placeholder '{name}'")))?;
            if t.shape() != self.nodes[id.0].shape.as_slice() {
                return Err(Error::ShapeMismatch {
                    context: format!("placeholder '{name}'"),
                    expected: self.nodes[id.0].shape.clone(),
                    found: t.shape().to_vec(),
                });
            }
            self.values[id.0] = Some(t.clone());
        }
        for idx in 0..self.nodes.len() {
            let out = match &self.nodes[idx].op {
                Op::Placeholder { name } => {
                    if self.values[idx].is_none() {
                        return Err(Error::invalid(format!("unbound placeholder '{name}'")));
                    }
                    continue;
                }
                Op::Constant => continue,
                Op::MatMul { a, b } => matmul(self.value(*a), self.value(*b))?,
                Op::Add { a, b } => add_forward(self.value(*a), self.value(*b)),
                Op::Mul { a, b } => mul_forward(self.value(*a), self.value(*b)),
                Op::Sigmoid { x } => self.value(*x).map(sigmoid),
                Op::Tanh { x } => self.value(*x).map(f64::tanh),
                Op::Relu { x } => self.value(*x).map(|v| if v > 0.0 { v } else { 0.0 }),
                Op::SoftmaxCrossEntropy { logits, labels } => {
                    softmax_ce_forward(self.value(*logits), labels)
                }
                Op::Slice { x, axis, start, len } => {
                    slice_forward(self.value(*x), *axis, *start, *len)
                }
                Op::Concat { parts, axis } => {
                    let tensors: Vec<&Tensor> = parts.iter().map(|&p| self.value(p)).collect();
                    concat_forward(&tensors, *axis)
                }
                Op::ReduceSum { x } => Tensor::scalar(self.value(*x).sum()),
                Op::ReduceMean { x } => {
                    let t = self.value(*x);
                    Tensor::scalar(t.sum() / t.len() as f64)
                }
            };
            self.values[idx] = Some(out);
        }
        Ok(())
    }

    /// Value of a node after `forward`.
    pub fn output(&self, id: NodeId) -> Result<&Tensor> {
        self.values[id.0]
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("{} has no value; run forward first", self.node_label(id))))
    }

    fn value(&self, id: NodeId) -> &Tensor {
        self.values[id.0]
            .as_ref()
            .expect("topological order guarantees inputs are evaluated")
    }

    /// Reverse-mode gradients of a scalar `output` with respect to every
    /// placeholder. Placeholders that do not influence the output get zero
    /// gradients rather than an error.
    pub fn backward(&self, output: NodeId) -> Result<BTreeMap<String, Tensor>> {
        let out_val = self.output(output)?;
        if !out_val.is_scalar() {
            return Err(Error::invalid(format!(
                "backward requires a scalar output, {} has shape {:?}",
                self.node_label(output),
                out_val.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[output.0] = Some({
            let mut seed = Tensor::zeros(&self.nodes[output.0].shape);
            seed.data_mut()[0] = 1.0;
            seed
        });

        for idx in (0..=output.0).rev() {
            let upstream = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[idx].op {
                Op::Placeholder { .. } | Op::Constant => {
                    grads[idx] = Some(upstream); // keep for collection below
                    continue;
                }
                Op::MatMul { a, b } => {
                    let da = matmul_nt(&upstream, self.value(*b))?;
                    let db = matmul_tn(self.value(*a), &upstream)?;
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Add { a, b } => {
                    let db = reduce_to_shape(&upstream, &self.nodes[b.0].shape);
                    accumulate(&mut grads, *a, upstream);
                    accumulate(&mut grads, *b, db);
                }
                Op::Mul { a, b } => {
                    let va = self.value(*a);
                    let vb = self.value(*b);
                    let da = reduce_to_shape(&mul_forward(&upstream, vb), &self.nodes[a.0].shape);
                    let db = reduce_to_shape(&mul_forward(&upstream, va), &self.nodes[b.0].shape);
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Sigmoid { x } => {
                    let y = self.value(idx_id(idx));
                    let dx = upstream
                        .zip_map(y, |u, s| u * s * (1.0 - s))
                        .expect("shape preserved");
                    accumulate(&mut grads, *x, dx);
                }
                Op::Tanh { x } => {
                    let y = self.value(idx_id(idx));
                    let dx = upstream
                        .zip_map(y, |u, t| u * (1.0 - t * t))
                        .expect("shape preserved");
                    accumulate(&mut grads, *x, dx);
                }
                Op::Relu { x } => {
                    let vx = self.value(*x);
                    let dx = upstream
                        .zip_map(vx, |u, v| if v > 0.0 { u } else { 0.0 })
                        .expect("shape preserved");
                    accumulate(&mut grads, *x, dx);
                }
                Op::SoftmaxCrossEntropy { logits, labels } => {
                    let dz = softmax_ce_backward(self.value(*logits), labels, &upstream);
                    accumulate(&mut grads, *logits, dz);
                }
                Op::Slice { x, axis, start, len } => {
                    let dx = slice_backward(&upstream, &self.nodes[x.0].shape, *axis, *start, *len);
                    accumulate(&mut grads, *x, dx);
                }
                Op::Concat { parts, axis } => {
                    let mut offset = 0usize;
                    for &p in parts {
                        let len = self.nodes[p.0].shape[*axis];
                        let dp = slice_forward(&upstream, *axis, offset, len);
                        accumulate(&mut grads, p, dp);
                        offset += len;
                    }
                }
                Op::ReduceSum { x } => {
                    let u = upstream.item().expect("scalar");
                    let shape = self.nodes[x.0].shape.clone();
                    accumulate(&mut grads, *x, Tensor::zeros(&shape).map(|_| u));
                }
                Op::ReduceMean { x } => {
                    let shape = self.nodes[x.0].shape.clone();
                    let n: usize = shape.iter().product();
                    let u = upstream.item().expect("scalar") / n as f64;
                    accumulate(&mut grads, *x, Tensor::zeros(&shape).map(|_| u));
                }
            }
        }

        let mut named = BTreeMap::new();
        for (name, id) in &self.placeholders {
            let g = grads[id.0]
                .take()
                .unwrap_or_else(|| Tensor::zeros(&self.nodes[id.0].shape));
            named.insert(name.clone(), g);
        }
        Ok(named)
    }
}

fn idx_id(idx: usize) -> NodeId {
    NodeId(idx)
}

fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
    match &mut grads[id.0] {
        Some(existing) => {
            let summed = existing.add(&g).expect("gradient shapes match");
            *existing = summed;
        }
        slot @ None => *slot = Some(g),
    }
}

fn sigmoid(v: f64) -> f64 {
    // Split on sign so exp never overflows.
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn add_forward(a: &Tensor, b: &Tensor) -> Tensor {
    if a.shape() == b.shape() {
        return a.add(b).expect("checked at build");
    }
    if b.is_scalar() {
        let c = b.data()[0];
        return a.map(|v| v + c);
    }
    // rank-1 bias broadcast over rows of rank-2 a
    let (rows, cols) = (a.shape()[0], a.shape()[1]);
    let mut out = a.clone();
    let bd = b.data();
    for r in 0..rows {
        for c in 0..cols {
            out.data_mut()[r * cols + c] += bd[c];
        }
    }
    out
}

fn mul_forward(a: &Tensor, b: &Tensor) -> Tensor {
    if a.shape() == b.shape() {
        return a.zip_map(b, |x, y| x * y).expect("checked at build");
    }
    if b.is_scalar() {
        let c = b.data()[0];
        return a.map(|v| v * c);
    }
    let c = a.data()[0];
    b.map(|v| v * c)
}

/// Sum `g` down to `shape` (inverse of the broadcasts allowed in add/mul).
fn reduce_to_shape(g: &Tensor, shape: &[usize]) -> Tensor {
    if g.shape() == shape {
        return g.clone();
    }
    let target_len: usize = shape.iter().product();
    if target_len == 1 {
        let mut out = Tensor::zeros(shape);
        out.data_mut()[0] = g.sum();
        return out;
    }
    // column-sum of rank-2 g down to rank-1 bias
    let (rows, cols) = (g.shape()[0], g.shape()[1]);
    let mut out = Tensor::zeros(shape);
    for r in 0..rows {
        for c in 0..cols {
            out.data_mut()[c] += g.data()[r * cols + c];
        }
    }
    out
}

fn softmax_ce_forward(logits: &Tensor, labels: &[usize]) -> Tensor {
    let (batch, classes) = logits.dims2().expect("checked at build");
    let mut out = Tensor::zeros(&[batch]);
    for i in 0..batch {
        let row = &logits.data()[i * classes..(i + 1) * classes];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|&z| (z - m).exp()).sum::<f64>().ln();
        out.data_mut()[i] = lse - row[labels[i]];
    }
    out
}

fn softmax_ce_backward(logits: &Tensor, labels: &[usize], upstream: &Tensor) -> Tensor {
    let (batch, classes) = logits.dims2().expect("checked at build");
    let mut out = Tensor::zeros(&[batch, classes]);
    for i in 0..batch {
        let row = &logits.data()[i * classes..(i + 1) * classes];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = row.iter().map(|&z| (z - m).exp()).sum();
        let u = upstream.data()[i];
        for j in 0..classes {
            let p = (row[j] - m).exp() / denom;
            let y = if j == labels[i] { 1.0 } else { 0.0 };
            out.data_mut()[i * classes + j] = u * (p - y);
        }
    }
    out
}

fn slice_forward(x: &Tensor, axis: usize, start: usize, len: usize) -> Tensor {
    match x.rank() {
        1 => Tensor::from_vec(x.data()[start..start + len].to_vec()),
        2 => {
            let (rows, cols) = x.dims2().expect("rank 2");
            if axis == 0 {
                let mut out = Tensor::zeros(&[len, cols]);
                out.data_mut()
                    .copy_from_slice(&x.data()[start * cols..(start + len) * cols]);
                out
            } else {
                let mut out = Tensor::zeros(&[rows, len]);
                for r in 0..rows {
                    out.data_mut()[r * len..(r + 1) * len]
                        .copy_from_slice(&x.data()[r * cols + start..r * cols + start + len]);
                }
                out
            }
        }
        _ => unreachable!("slice restricted to rank 1 and 2 at build"),
    }
}

fn slice_backward(g: &Tensor, in_shape: &[usize], axis: usize, start: usize, len: usize) -> Tensor {
    let mut out = Tensor::zeros(in_shape);
    match in_shape.len() {
        1 => out.data_mut()[start..start + len].copy_from_slice(g.data()),
        2 => {
            let cols = in_shape[1];
            if axis == 0 {
                out.data_mut()[start * cols..(start + len) * cols].copy_from_slice(g.data());
            } else {
                let rows = in_shape[0];
                for r in 0..rows {
                    out.data_mut()[r * cols + start..r * cols + start + len]
                        .copy_from_slice(&g.data()[r * len..(r + 1) * len]);
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

fn concat_forward(parts: &[&Tensor], axis: usize) -> Tensor {
    match parts[0].rank() {
        1 => {
            let mut data = Vec::new();
            for p in parts {
                data.extend_from_slice(p.data());
            }
            Tensor::from_vec(data)
        }
        2 => {
            if axis == 0 {
                let cols = parts[0].shape()[1];
                let rows: usize = parts.iter().map(|p| p.shape()[0]).sum();
                let mut data = Vec::with_capacity(rows * cols);
                for p in parts {
                    data.extend_from_slice(p.data());
                }
                Tensor::new(vec![rows, cols], data).expect("shapes checked at build")
            } else {
                let rows = parts[0].shape()[0];
                let total: usize = parts.iter().map(|p| p.shape()[1]).sum();
                let mut out = Tensor::zeros(&[rows, total]);
                let mut offset = 0usize;
                for p in parts {
                    let w = p.shape()[1];
                    for r in 0..rows {
                        out.data_mut()[r * total + offset..r * total + offset + w]
                            .copy_from_slice(&p.data()[r * w..(r + 1) * w]);
                    }
                    offset += w;
                }
                out
            }
        }
        _ => unreachable!("concat restricted to rank 1 and 2 at build"),
    }
}

// ---- gradient checking ----------------------------------------------------

/// Central finite-difference step. Chosen to balance truncation against
/// rounding error at f64 precision.
pub const GRAD_CHECK_STEP: f64 = 1e-6;

/// Outcome of comparing `backward` against central finite differences.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Max relative error per placeholder, in declaration order.
    pub per_input: Vec<(String, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

/// Compare analytic gradients of `output` against central finite differences
/// for every placeholder element. Relative error uses a scale floor of 1e-3
/// so near-zero gradient pairs are compared at an absolute scale.
pub fn grad_check(
    graph: &TapeGraph,
    inputs: &BTreeMap<String, Tensor>,
    output: NodeId,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut work = graph.clone();
    work.forward(inputs)?;
    let analytic = work.backward(output)?;

    let eval = |bound: &BTreeMap<String, Tensor>| -> Result<f64> {
        let mut g = graph.clone();
        g.forward(bound)?;
        g.output(output)?.item()
    };

    let mut per_input = Vec::new();
    let mut max_rel = 0.0f64;
    for (name, tensor) in inputs {
        let grad = &analytic[name];
        let mut worst = 0.0f64;
        for i in 0..tensor.len() {
            let orig = tensor.data()[i];
            let mut plus = inputs.clone();
            plus.get_mut(name).unwrap().data_mut()[i] = orig + GRAD_CHECK_STEP;
            let f_plus = eval(&plus)?;
            let mut minus = inputs.clone();
            minus.get_mut(name).unwrap().data_mut()[i] = orig - GRAD_CHECK_STEP;
            let f_minus = eval(&minus)?;
            let numeric = (f_plus - f_minus) / (2.0 * GRAD_CHECK_STEP);
            let a = grad.data()[i];
            let scale = a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max((a - numeric).abs() / scale);
        }
        max_rel = max_rel.max(worst);
        per_input.push((name.clone(), worst));
    }
    Ok(GradCheckReport {
        per_input,
        max_rel_error: max_rel,
        tolerance,
    })
}
