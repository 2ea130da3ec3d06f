//! Forward operations, graph recording, and the reverse-mode backward pass.
//!
//! The op set is fixed: matmul, add, scale, elementwise mul, reshape, permute,
//! softmax, masked fill, mean, sum, square, sqrt, ln, concatenate, slice, and
//! cosine-normalize. Everything else in the workspace composes from these.
//! Each op records its parents when recording is enabled and any parent
//! requires a gradient; backward replays the recorded graph in reverse
//! topological order.

use std::cell::Cell;
use std::collections::HashSet;

use crate::error::{Result, TensorError};
use crate::tensor::{checked_numel, strides, Tensor};

/// Pre-softmax sentinel written into masked-out attention scores.
pub const MASK_SENTINEL: f64 = -1e9;

#[derive(Clone)]
pub(crate) enum Op {
    Leaf,
    MatMul(Tensor, Tensor),
    Add(Tensor, Tensor),
    Mul(Tensor, Tensor),
    Scale(Tensor, f64),
    Reshape(Tensor),
    Permute(Tensor, Vec<usize>),
    SoftmaxLastDim(Tensor),
    MaskedFill { scores: Tensor, mask: Vec<f64>, n: usize },
    Mean(Tensor),
    Sum(Tensor),
    Square(Tensor),
    Sqrt(Tensor),
    Ln(Tensor),
    Concat(Vec<Tensor>, usize),
    Slice { input: Tensor, axis: usize, start: usize },
    CosineNormalize(Tensor),
}

impl Op {
    fn parents(&self) -> Vec<Tensor> {
        match self {
            Op::Leaf => Vec::new(),
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Mul(a, b) => vec![a.clone(), b.clone()],
            Op::Scale(a, _)
            | Op::Reshape(a)
            | Op::Permute(a, _)
            | Op::SoftmaxLastDim(a)
            | Op::Mean(a)
            | Op::Sum(a)
            | Op::Square(a)
            | Op::Sqrt(a)
            | Op::Ln(a)
            | Op::CosineNormalize(a) => vec![a.clone()],
            Op::MaskedFill { scores, .. } => vec![scores.clone()],
            Op::Concat(parts, _) => parts.clone(),
            Op::Slice { input, .. } => vec![input.clone()],
        }
    }
}

// ── recording control ────────────────────────────────────────────────

thread_local! {
    static RECORDING: Cell<bool> = const { Cell::new(true) };
}

struct RecordingGuard(bool);

impl Drop for RecordingGuard {
    fn drop(&mut self) {
        RECORDING.with(|r| r.set(self.0));
    }
}

/// Run `f` with graph recording disabled; ops executed inside produce plain
/// leaves. Used for inference and for the re-evaluations inside finite
/// differencing.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let _guard = RecordingGuard(RECORDING.with(|r| r.replace(false)));
    f()
}

fn should_record(parents: &[&Tensor]) -> bool {
    RECORDING.with(|r| r.get()) && parents.iter().any(|t| t.requires_grad())
}

fn finish(data: Vec<f64>, shape: Vec<usize>, op: Op, parents: &[&Tensor]) -> Tensor {
    if should_record(parents) {
        Tensor::new_result(data, shape, op)
    } else {
        Tensor::new_result(data, shape, Op::Leaf)
    }
}

// ── forward ops ──────────────────────────────────────────────────────

impl Tensor {
    /// Matrix product of two rank-2 tensors, `[m,k] · [k,n] -> [m,n]`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (ls, rs) = (self.shape(), rhs.shape());
        if ls.len() != 2 || rs.len() != 2 || ls[1] != rs[0] {
            return Err(TensorError::ShapeMismatch { op: "matmul", lhs: ls, rhs: rs });
        }
        let (m, k, n) = (ls[0], ls[1], rs[1]);
        let out = self.with_data(|a| rhs.with_data(|b| matmul_raw(a, b, m, k, n)));
        Ok(finish(out, vec![m, n], Op::MatMul(self.clone(), rhs.clone()), &[self, rhs]))
    }

    /// Elementwise addition. `rhs` may also be rank-0 (added everywhere) or a
    /// strict trailing-dims shape of `self` (tiled over the leading dims);
    /// that is the only broadcasting in the op set, enough for biases and
    /// per-frame embeddings.
    pub fn add(&self, rhs: &Tensor) -> Result<Tensor> {
        let (ls, rs) = (self.shape(), rhs.shape());
        if !(rs == ls || rs.is_empty() || (rs.len() < ls.len() && ls[ls.len() - rs.len()..] == rs[..])) {
            return Err(TensorError::ShapeMismatch { op: "add", lhs: ls, rhs: rs });
        }
        let tail = rhs.numel();
        let out = self.with_data(|a| {
            rhs.with_data(|b| {
                if tail == 0 {
                    Vec::new()
                } else {
                    a.iter().enumerate().map(|(i, v)| v + b[i % tail]).collect()
                }
            })
        });
        Ok(finish(out, ls, Op::Add(self.clone(), rhs.clone()), &[self, rhs]))
    }

    /// Add a constant to every element.
    pub fn add_scalar(&self, c: f64) -> Tensor {
        self.add(&Tensor::scalar(c)).expect("scalar add cannot fail")
    }

    /// Elementwise product; shapes must match exactly.
    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor> {
        let (ls, rs) = (self.shape(), rhs.shape());
        if ls != rs {
            return Err(TensorError::ShapeMismatch { op: "mul", lhs: ls, rhs: rs });
        }
        let out = self.with_data(|a| rhs.with_data(|b| a.iter().zip(b).map(|(x, y)| x * y).collect()));
        Ok(finish(out, ls, Op::Mul(self.clone(), rhs.clone()), &[self, rhs]))
    }

    /// Multiply every element by a constant.
    pub fn scale(&self, s: f64) -> Tensor {
        let out = self.with_data(|a| a.iter().map(|x| x * s).collect());
        finish(out, self.shape(), Op::Scale(self.clone(), s), &[self])
    }

    /// Reinterpret the flat data under a new shape with the same element count.
    /// Never changes the multiset of values.
    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if checked_numel(shape) != self.numel() {
            return Err(TensorError::InvalidShape {
                op: "reshape",
                shape: shape.to_vec(),
                reason: format!("element count {} != {}", checked_numel(shape), self.numel()),
            });
        }
        Ok(finish(self.data(), shape.to_vec(), Op::Reshape(self.clone()), &[self]))
    }

    /// Reorder axes: output axis `k` takes input axis `axes[k]`. Data is
    /// materialized in the new order.
    pub fn permute(&self, axes: &[usize]) -> Result<Tensor> {
        let shape = self.shape();
        if !is_permutation(axes, shape.len()) {
            return Err(TensorError::InvalidShape {
                op: "permute",
                shape: axes.to_vec(),
                reason: format!("not a permutation of 0..{}", shape.len()),
            });
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| shape[a]).collect();
        let out = self.with_data(|a| permute_raw(a, &shape, axes, &out_shape));
        Ok(finish(out, out_shape, Op::Permute(self.clone(), axes.to_vec()), &[self]))
    }

    /// Numerically stabilized softmax over the last dimension: each slice is
    /// nonnegative and sums to 1.
    pub fn softmax_lastdim(&self) -> Result<Tensor> {
        let shape = self.shape();
        let n = match shape.last() {
            Some(&n) if n >= 1 => n,
            _ => {
                return Err(TensorError::InvalidShape {
                    op: "softmax_lastdim",
                    shape,
                    reason: "needs rank >= 1 with nonempty last dim".into(),
                })
            }
        };
        if !self.is_finite() {
            return Err(TensorError::NonFinite { op: "softmax_lastdim" });
        }
        let out = self.with_data(|a| {
            let mut out = vec![0.0; a.len()];
            for (row, orow) in a.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
                let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for (o, &x) in orow.iter_mut().zip(row) {
                    *o = (x - m).exp();
                    sum += *o;
                }
                for o in orow.iter_mut() {
                    *o /= sum;
                }
            }
            out
        });
        Ok(finish(out, shape, Op::SoftmaxLastDim(self.clone()), &[self]))
    }

    /// Replace scores at positions where `mask == 0` with a large negative
    /// sentinel so a following softmax gives them vanishing weight; positions
    /// with `mask == 1` pass through bit-identically. `mask` must be `[n, n]`
    /// matching the last two dims of `self`, with entries in {0, 1}.
    pub fn masked_neg_inf_fill(&self, mask: &Tensor) -> Result<Tensor> {
        let shape = self.shape();
        let ms = mask.shape();
        let ok = shape.len() >= 2
            && ms.len() == 2
            && ms[0] == ms[1]
            && ms[0] >= 1
            && shape[shape.len() - 2] == ms[0]
            && shape[shape.len() - 1] == ms[0];
        if !ok {
            return Err(TensorError::ShapeMismatch { op: "masked_neg_inf_fill", lhs: shape, rhs: ms });
        }
        let n = ms[0];
        let mdata = mask.data();
        if mdata.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(TensorError::Contract("masked_neg_inf_fill: mask entries must be 0 or 1".into()));
        }
        let block = n * n;
        let out = self.with_data(|a| {
            a.iter()
                .enumerate()
                .map(|(i, &v)| if mdata[i % block] == 1.0 { v } else { MASK_SENTINEL })
                .collect()
        });
        Ok(finish(
            out,
            shape,
            Op::MaskedFill { scores: self.clone(), mask: mdata, n },
            &[self],
        ))
    }

    /// Mean over all elements, producing a rank-0 tensor.
    pub fn mean(&self) -> Result<Tensor> {
        let count = self.numel();
        if count == 0 {
            return Err(TensorError::Contract("mean of an empty tensor".into()));
        }
        let s = self.with_data(|a| a.iter().sum::<f64>());
        Ok(finish(vec![s / count as f64], Vec::new(), Op::Mean(self.clone()), &[self]))
    }

    /// Sum over all elements, producing a rank-0 tensor.
    pub fn sum(&self) -> Tensor {
        let s = self.with_data(|a| a.iter().sum::<f64>());
        finish(vec![s], Vec::new(), Op::Sum(self.clone()), &[self])
    }

    /// Elementwise square.
    pub fn square(&self) -> Tensor {
        let out = self.with_data(|a| a.iter().map(|x| x * x).collect());
        finish(out, self.shape(), Op::Square(self.clone()), &[self])
    }

    /// Elementwise square root; inputs must be nonnegative.
    pub fn sqrt(&self) -> Result<Tensor> {
        if self.with_data(|a| a.iter().any(|&x| x < 0.0 || !x.is_finite())) {
            return Err(TensorError::NonFinite { op: "sqrt" });
        }
        let out = self.with_data(|a| a.iter().map(|x| x.sqrt()).collect());
        Ok(finish(out, self.shape(), Op::Sqrt(self.clone()), &[self]))
    }

    /// Elementwise natural log; inputs must be strictly positive.
    pub fn ln(&self) -> Result<Tensor> {
        if self.with_data(|a| a.iter().any(|&x| x <= 0.0 || !x.is_finite())) {
            return Err(TensorError::NonFinite { op: "ln" });
        }
        let out = self.with_data(|a| a.iter().map(|x| x.ln()).collect());
        Ok(finish(out, self.shape(), Op::Ln(self.clone()), &[self]))
    }

    /// Concatenate tensors along `axis`; all other dims must agree.
    pub fn concat(parts: &[Tensor], axis: usize) -> Result<Tensor> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::Contract("concat of zero tensors".into()))?;
        let base = first.shape();
        if axis >= base.len() {
            return Err(TensorError::InvalidShape {
                op: "concat",
                shape: base,
                reason: format!("axis {axis} out of range"),
            });
        }
        let mut axis_total = 0;
        for p in parts {
            let ps = p.shape();
            let compatible = ps.len() == base.len()
                && ps.iter().zip(&base).enumerate().all(|(i, (a, b))| i == axis || a == b);
            if !compatible {
                return Err(TensorError::ShapeMismatch { op: "concat", lhs: base, rhs: ps });
            }
            axis_total += ps[axis];
        }
        let mut out_shape = base.clone();
        out_shape[axis] = axis_total;
        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut out = vec![0.0; checked_numel(&out_shape)];
        let row_out = axis_total * inner;
        let mut offset = 0;
        for p in parts {
            let ax = p.shape()[axis];
            p.with_data(|d| {
                for o in 0..outer {
                    let src = &d[o * ax * inner..(o + 1) * ax * inner];
                    let dst_start = o * row_out + offset * inner;
                    out[dst_start..dst_start + ax * inner].copy_from_slice(src);
                }
            });
            offset += ax;
        }
        let refs: Vec<&Tensor> = parts.iter().collect();
        Ok(finish(out, out_shape, Op::Concat(parts.to_vec(), axis), &refs))
    }

    /// Contiguous sub-range of length `len` starting at `start` along `axis`.
    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        let shape = self.shape();
        if axis >= shape.len() || len == 0 || start + len > shape[axis] {
            return Err(TensorError::InvalidShape {
                op: "slice",
                shape,
                reason: format!("axis {axis}, range {start}..{}", start + len),
            });
        }
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let ax = shape[axis];
        let mut out_shape = shape.clone();
        out_shape[axis] = len;
        let mut out = vec![0.0; outer * len * inner];
        self.with_data(|d| {
            for o in 0..outer {
                let src = &d[(o * ax + start) * inner..(o * ax + start + len) * inner];
                out[o * len * inner..(o + 1) * len * inner].copy_from_slice(src);
            }
        });
        Ok(finish(out, out_shape, Op::Slice { input: self.clone(), axis, start }, &[self]))
    }

    /// Scale each last-dim slice to unit L2 norm. A slice with exactly zero
    /// norm maps to the zero vector (the orthogonal convention used by the
    /// contrastive loss), where the gradient is also zero.
    pub fn cosine_normalize_lastdim(&self) -> Result<Tensor> {
        let shape = self.shape();
        let n = match shape.last() {
            Some(&n) if n >= 1 => n,
            _ => {
                return Err(TensorError::InvalidShape {
                    op: "cosine_normalize_lastdim",
                    shape,
                    reason: "needs rank >= 1 with nonempty last dim".into(),
                })
            }
        };
        let out = self.with_data(|a| {
            let mut out = vec![0.0; a.len()];
            for (row, orow) in a.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
                let nrm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    for (o, &x) in orow.iter_mut().zip(row) {
                        *o = x / nrm;
                    }
                }
            }
            out
        });
        Ok(finish(out, shape, Op::CosineNormalize(self.clone()), &[self]))
    }
}

// ── backward ─────────────────────────────────────────────────────────

impl Tensor {
    /// Reverse-mode gradient propagation from a rank-0 loss. Afterwards every
    /// `requires_grad` tensor reachable from the loss holds
    /// `grad = d loss / d tensor`; tensors not reachable are untouched.
    pub fn backward(&self) -> Result<()> {
        {
            let n = self.node.borrow();
            if !n.shape.is_empty() {
                return Err(TensorError::Contract(format!(
                    "backward requires a rank-0 loss, got shape {:?}",
                    n.shape
                )));
            }
            if !n.requires_grad {
                return Err(TensorError::Contract(
                    "backward on a tensor with no recorded operations".into(),
                ));
            }
        }
        let order = topo_order(self);
        // Fresh gradient buffers for everything reachable in this pass.
        for t in &order {
            if t.requires_grad() {
                let len = t.numel();
                t.node.borrow_mut().grad = Some(vec![0.0; len]);
            }
        }
        self.node.borrow_mut().grad = Some(vec![1.0]);

        for t in order.iter().rev() {
            let (g, op) = {
                let n = t.node.borrow();
                match &n.grad {
                    Some(g) => (g.clone(), n.op.clone()),
                    None => continue,
                }
            };
            apply_backward(t, &g, &op);
        }
        Ok(())
    }
}

/// Post-order over the recorded graph: parents before children.
fn topo_order(root: &Tensor) -> Vec<Tensor> {
    let mut order = Vec::new();
    let mut visited = HashSet::new();
    let mut stack = vec![(root.clone(), false)];
    while let Some((t, expanded)) = stack.pop() {
        if expanded {
            order.push(t);
            continue;
        }
        if !visited.insert(t.id()) {
            continue;
        }
        stack.push((t.clone(), true));
        if t.requires_grad() {
            let parents = t.node.borrow().op.parents();
            for p in parents {
                stack.push((p, false));
            }
        }
    }
    order
}

fn accumulate(t: &Tensor, contrib: &[f64]) {
    if !t.requires_grad() {
        return;
    }
    let mut n = t.node.borrow_mut();
    let len = n.data.len();
    let g = n.grad.get_or_insert_with(|| vec![0.0; len]);
    for (gi, ci) in g.iter_mut().zip(contrib) {
        *gi += ci;
    }
}

fn apply_backward(node: &Tensor, g: &[f64], op: &Op) {
    match op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (m, k) = {
                let s = a.shape();
                (s[0], s[1])
            };
            let n = b.shape()[1];
            if a.requires_grad() {
                // dL/dA = G · Bᵀ
                let bt = b.with_data(|bd| transpose_raw(bd, k, n));
                let ga = matmul_raw(g, &bt, m, n, k);
                accumulate(a, &ga);
            }
            if b.requires_grad() {
                // dL/dB = Aᵀ · G
                let at = a.with_data(|ad| transpose_raw(ad, m, k));
                let gb = matmul_raw(&at, g, k, m, n);
                accumulate(b, &gb);
            }
        }
        Op::Add(a, b) => {
            accumulate(a, g);
            if b.requires_grad() {
                let tail = b.numel();
                if tail == g.len() {
                    accumulate(b, g);
                } else {
                    // broadcast add: fold the leading dims back down
                    let mut gb = vec![0.0; tail];
                    for (i, &v) in g.iter().enumerate() {
                        gb[i % tail] += v;
                    }
                    accumulate(b, &gb);
                }
            }
        }
        Op::Mul(a, b) => {
            if a.requires_grad() {
                let ga = b.with_data(|bd| g.iter().zip(bd).map(|(x, y)| x * y).collect::<Vec<_>>());
                accumulate(a, &ga);
            }
            if b.requires_grad() {
                let gb = a.with_data(|ad| g.iter().zip(ad).map(|(x, y)| x * y).collect::<Vec<_>>());
                accumulate(b, &gb);
            }
        }
        Op::Scale(a, s) => {
            let ga: Vec<f64> = g.iter().map(|x| x * s).collect();
            accumulate(a, &ga);
        }
        Op::Reshape(a) => accumulate(a, g),
        Op::Permute(a, axes) => {
            let out_shape = node.shape();
            let inv = invert_permutation(axes);
            let in_shape: Vec<usize> = inv.iter().map(|&i| out_shape[i]).collect();
            debug_assert_eq!(in_shape, a.shape());
            let ga = permute_raw(g, &out_shape, &inv, &in_shape);
            accumulate(a, &ga);
        }
        Op::SoftmaxLastDim(a) => {
            let shape = node.shape();
            let n = *shape.last().unwrap();
            let ga = node.with_data(|y| {
                let mut ga = vec![0.0; y.len()];
                for ((yrow, grow), garow) in
                    y.chunks_exact(n).zip(g.chunks_exact(n)).zip(ga.chunks_exact_mut(n))
                {
                    let dot: f64 = yrow.iter().zip(grow).map(|(yi, gi)| yi * gi).sum();
                    for ((gaij, &yi), &gi) in garow.iter_mut().zip(yrow).zip(grow) {
                        *gaij = yi * (gi - dot);
                    }
                }
                ga
            });
            accumulate(a, &ga);
        }
        Op::MaskedFill { scores, mask, n } => {
            let block = n * n;
            let ga: Vec<f64> = g
                .iter()
                .enumerate()
                .map(|(i, &v)| if mask[i % block] == 1.0 { v } else { 0.0 })
                .collect();
            accumulate(scores, &ga);
        }
        Op::Mean(a) => {
            let count = a.numel() as f64;
            let ga = vec![g[0] / count; a.numel()];
            accumulate(a, &ga);
        }
        Op::Sum(a) => {
            let ga = vec![g[0]; a.numel()];
            accumulate(a, &ga);
        }
        Op::Square(a) => {
            let ga = a.with_data(|ad| {
                g.iter().zip(ad).map(|(gi, x)| 2.0 * x * gi).collect::<Vec<_>>()
            });
            accumulate(a, &ga);
        }
        Op::Sqrt(a) => {
            let ga = node.with_data(|y| {
                g.iter().zip(y).map(|(gi, yi)| gi / (2.0 * yi)).collect::<Vec<_>>()
            });
            accumulate(a, &ga);
        }
        Op::Ln(a) => {
            let ga = a.with_data(|ad| g.iter().zip(ad).map(|(gi, x)| gi / x).collect::<Vec<_>>());
            accumulate(a, &ga);
        }
        Op::Concat(parts, axis) => {
            let out_shape = node.shape();
            let outer: usize = out_shape[..*axis].iter().product();
            let inner: usize = out_shape[*axis + 1..].iter().product();
            let row_out = out_shape[*axis] * inner;
            let mut offset = 0;
            for p in parts {
                let ax = p.shape()[*axis];
                if p.requires_grad() {
                    let mut gp = vec![0.0; p.numel()];
                    for o in 0..outer {
                        let src = &g[o * row_out + offset * inner..o * row_out + (offset + ax) * inner];
                        gp[o * ax * inner..(o + 1) * ax * inner].copy_from_slice(src);
                    }
                    accumulate(p, &gp);
                }
                offset += ax;
            }
        }
        Op::Slice { input, axis, start } => {
            let in_shape = input.shape();
            let out_shape = node.shape();
            let outer: usize = in_shape[..*axis].iter().product();
            let inner: usize = in_shape[*axis + 1..].iter().product();
            let (ax_in, ax_out) = (in_shape[*axis], out_shape[*axis]);
            let mut gi = vec![0.0; input.numel()];
            for o in 0..outer {
                let dst = (o * ax_in + start) * inner;
                gi[dst..dst + ax_out * inner]
                    .copy_from_slice(&g[o * ax_out * inner..(o + 1) * ax_out * inner]);
            }
            accumulate(input, &gi);
        }
        Op::CosineNormalize(a) => {
            let shape = node.shape();
            let n = *shape.last().unwrap();
            let ga = a.with_data(|ad| {
                node.with_data(|y| {
                    let mut ga = vec![0.0; ad.len()];
                    for (i, garow) in ga.chunks_exact_mut(n).enumerate() {
                        let xrow = &ad[i * n..(i + 1) * n];
                        let yrow = &y[i * n..(i + 1) * n];
                        let grow = &g[i * n..(i + 1) * n];
                        let nrm = xrow.iter().map(|x| x * x).sum::<f64>().sqrt();
                        if nrm > 0.0 {
                            let dot: f64 = grow.iter().zip(yrow).map(|(gi, yi)| gi * yi).sum();
                            for ((gaij, &gi), &yi) in garow.iter_mut().zip(grow).zip(yrow) {
                                *gaij = (gi - yi * dot) / nrm;
                            }
                        }
                    }
                    ga
                })
            });
            accumulate(a, &ga);
        }
    }
}

// ── raw kernels ──────────────────────────────────────────────────────

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose_raw(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

fn permute_raw(data: &[f64], in_shape: &[usize], axes: &[usize], out_shape: &[usize]) -> Vec<f64> {
    let in_strides = strides(in_shape);
    let out_strides = strides(out_shape);
    let mut out = vec![0.0; data.len()];
    let rank = in_shape.len();
    let mut coords = vec![0usize; rank];
    for (lin, &v) in data.iter().enumerate() {
        let mut rem = lin;
        for d in 0..rank {
            coords[d] = rem / in_strides[d];
            rem %= in_strides[d];
        }
        let mut olin = 0;
        for (k, &ax) in axes.iter().enumerate() {
            olin += coords[ax] * out_strides[k];
        }
        out[olin] = v;
    }
    out
}

fn is_permutation(axes: &[usize], rank: usize) -> bool {
    if axes.len() != rank {
        return false;
    }
    let mut seen = vec![false; rank];
    for &a in axes {
        if a >= rank || seen[a] {
            return false;
        }
        seen[a] = true;
    }
    true
}

pub(crate) fn invert_permutation(axes: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; axes.len()];
    for (k, &a) in axes.iter().enumerate() {
        inv[a] = k;
    }
    inv
}
