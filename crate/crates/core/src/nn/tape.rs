//! Define-by-run autograd tape.
//!
//! Ops execute eagerly; each records its inputs and whatever context backward
//! needs. `backward` walks the tape in reverse, accumulating gradients in a
//! fixed order so identical call sequences give identical bits.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

/// Conv/pool padding policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// No padding; output shrinks by the kernel extent.
    Valid,
    /// Output length ceil(L / stride); zeros split left/right (extra on the
    /// right when the total is odd).
    Same,
}

/// Resolved (pad_left, pad_right, l_out).
pub(crate) fn resolve_padding(l: usize, k: usize, stride: usize, padding: Padding) -> Result<(usize, usize, usize)> {
    match padding {
        Padding::Valid => {
            if l < k {
                return Err(Error::Shape(format!("input length {l} shorter than kernel {k}")));
            }
            Ok((0, 0, (l - k) / stride + 1))
        }
        Padding::Same => {
            let l_out = l.div_ceil(stride);
            let needed = ((l_out - 1) * stride + k).saturating_sub(l);
            Ok((needed / 2, needed - needed / 2, l_out))
        }
    }
}

enum Op<T: Scalar> {
    Leaf,
    Relu,
    Sigmoid,
    Tanh,
    Add,
    Mul,
    OneMinus,
    Reshape,
    Conv1d { stride: usize, pad_l: usize },
    DepthwiseConv1d { stride: usize, pad_l: usize },
    Matmul,
    Dense,
    BatchNormTrain { mean: Vec<T>, invstd: Vec<T> },
    BatchNormInfer { mean: Vec<T>, invstd: Vec<T> },
    MaxPool1d { argmax: Vec<usize> },
    GlobalAvgPool,
    ConcatChannels { channels: Vec<usize> },
    ConcatFeatures { widths: Vec<usize> },
    SliceCols { start: usize },
    SelectTime { t: usize },
    StackTime,
    Embedding { ids: Vec<usize> },
    Softmax,
    SoftmaxXent { labels: Vec<usize>, probs: Tensor<T> },
    WeightedSum { coeffs: Vec<T> },
}

struct Node<T: Scalar> {
    value: Tensor<T>,
    inputs: Vec<NodeId>,
    op: Op<T>,
    needs_grad: bool,
}

/// Gradients produced by one backward pass, indexed by node.
pub struct Grads<T: Scalar> {
    list: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Grads<T> {
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.list[id.0].as_ref()
    }

    pub fn take(&mut self, id: NodeId) -> Option<Tensor<T>> {
        self.list[id.0].take()
    }
}

pub struct Tape<T: Scalar> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, inputs: Vec<NodeId>, op: Op<T>) -> NodeId {
        let needs_grad = inputs.iter().any(|i| self.nodes[i.0].needs_grad);
        self.nodes.push(Node { value, inputs, op, needs_grad });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor<T>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node { value, inputs: vec![], op: Op::Leaf, needs_grad });
        NodeId(self.nodes.len() - 1)
    }

    // ---- elementwise ----

    pub fn relu(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x.0].value.clone();
        let mut out = v;
        for e in out.data_mut() {
            if *e < T::zero() {
                *e = T::zero();
            }
        }
        self.push(out, vec![x], Op::Relu)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let mut out = self.nodes[x.0].value.clone();
        for e in out.data_mut() {
            *e = (T::one() + (-*e).exp()).recip();
        }
        self.push(out, vec![x], Op::Sigmoid)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let mut out = self.nodes[x.0].value.clone();
        for e in out.data_mut() {
            *e = e.tanh();
        }
        self.push(out, vec![x], Op::Tanh)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.nodes[a.0].value.shape() != self.nodes[b.0].value.shape() {
            return Err(Error::Shape("add: operand shapes differ".into()));
        }
        let mut out = self.nodes[a.0].value.clone();
        for (o, &r) in out.data_mut().iter_mut().zip(self.nodes[b.0].value.data()) {
            *o += r;
        }
        Ok(self.push(out, vec![a, b], Op::Add))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.nodes[a.0].value.shape() != self.nodes[b.0].value.shape() {
            return Err(Error::Shape("mul: operand shapes differ".into()));
        }
        let mut out = self.nodes[a.0].value.clone();
        for (o, &r) in out.data_mut().iter_mut().zip(self.nodes[b.0].value.data()) {
            *o *= r;
        }
        Ok(self.push(out, vec![a, b], Op::Mul))
    }

    pub fn one_minus(&mut self, x: NodeId) -> NodeId {
        let mut out = self.nodes[x.0].value.clone();
        for e in out.data_mut() {
            *e = T::one() - *e;
        }
        self.push(out, vec![x], Op::OneMinus)
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> Result<NodeId> {
        let out = self.nodes[x.0].value.reshaped(shape)?;
        Ok(self.push(out, vec![x], Op::Reshape))
    }

    // ---- convolution ----

    /// Cross-correlation of `x` [B, C_in, L] with `w` [C_out, C_in, K] plus
    /// bias [C_out].
    pub fn conv1d(&mut self, x: NodeId, w: NodeId, b: NodeId, stride: usize, padding: Padding) -> Result<NodeId> {
        let (xs, ws, bs) = (
            self.nodes[x.0].value.shape().to_vec(),
            self.nodes[w.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        if xs.len() != 3 || ws.len() != 3 || bs.len() != 1 || xs[1] != ws[1] || bs[0] != ws[0] {
            return Err(Error::Shape(format!("conv1d: x {xs:?}, w {ws:?}, b {bs:?}")));
        }
        let (batch, c_in, l) = (xs[0], xs[1], xs[2]);
        let (c_out, _, k) = (ws[0], ws[1], ws[2]);
        let (pad_l, _, l_out) = resolve_padding(l, k, stride, padding)?;
        let mut out = Tensor::zeros(&[batch, c_out, l_out]);
        {
            let xv = self.nodes[x.0].value.data();
            let wv = self.nodes[w.0].value.data();
            let bv = self.nodes[b.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for co in 0..c_out {
                    let orow = &mut ov[(bi * c_out + co) * l_out..(bi * c_out + co + 1) * l_out];
                    orow.fill(bv[co]);
                    for ci in 0..c_in {
                        let xrow = &xv[(bi * c_in + ci) * l..(bi * c_in + ci + 1) * l];
                        let wrow = &wv[(co * c_in + ci) * k..(co * c_in + ci + 1) * k];
                        accumulate_corr(orow, xrow, wrow, stride, pad_l);
                    }
                }
            }
        }
        Ok(self.push(out, vec![x, w, b], Op::Conv1d { stride, pad_l }))
    }

    /// Per-channel convolution: `x` [B, C, L], `w` [C, K], bias [C].
    pub fn depthwise_conv1d(&mut self, x: NodeId, w: NodeId, b: NodeId, stride: usize, padding: Padding) -> Result<NodeId> {
        let (xs, ws, bs) = (
            self.nodes[x.0].value.shape().to_vec(),
            self.nodes[w.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        if xs.len() != 3 || ws.len() != 2 || bs.len() != 1 || xs[1] != ws[0] || bs[0] != ws[0] {
            return Err(Error::Shape(format!("depthwise_conv1d: x {xs:?}, w {ws:?}, b {bs:?}")));
        }
        let (batch, c, l) = (xs[0], xs[1], xs[2]);
        let k = ws[1];
        let (pad_l, _, l_out) = resolve_padding(l, k, stride, padding)?;
        let mut out = Tensor::zeros(&[batch, c, l_out]);
        {
            let xv = self.nodes[x.0].value.data();
            let wv = self.nodes[w.0].value.data();
            let bv = self.nodes[b.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let orow = &mut ov[(bi * c + ci) * l_out..(bi * c + ci + 1) * l_out];
                    orow.fill(bv[ci]);
                    let xrow = &xv[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    let wrow = &wv[ci * k..(ci + 1) * k];
                    accumulate_corr(orow, xrow, wrow, stride, pad_l);
                }
            }
        }
        Ok(self.push(out, vec![x, w, b], Op::DepthwiseConv1d { stride, pad_l }))
    }

    // ---- dense ----

    /// `x` [R, D_in] times `w` [D_out, D_in] transposed: out [R, D_out].
    pub fn matmul(&mut self, x: NodeId, w: NodeId) -> Result<NodeId> {
        let (xs, ws) = (self.nodes[x.0].value.shape().to_vec(), self.nodes[w.0].value.shape().to_vec());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] {
            return Err(Error::Shape(format!("matmul: x {xs:?}, w {ws:?}")));
        }
        let (rows, d_in, d_out) = (xs[0], xs[1], ws[0]);
        let mut out = Tensor::zeros(&[rows, d_out]);
        {
            let xv = self.nodes[x.0].value.data();
            let wv = self.nodes[w.0].value.data();
            let ov = out.data_mut();
            for r in 0..rows {
                let xrow = &xv[r * d_in..(r + 1) * d_in];
                let orow = &mut ov[r * d_out..(r + 1) * d_out];
                for (j, o) in orow.iter_mut().enumerate() {
                    let wrow = &wv[j * d_in..(j + 1) * d_in];
                    *o = dot(xrow, wrow);
                }
            }
        }
        Ok(self.push(out, vec![x, w], Op::Matmul))
    }

    /// Affine layer: matmul plus bias [D_out].
    pub fn dense(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId> {
        let (xs, ws, bs) = (
            self.nodes[x.0].value.shape().to_vec(),
            self.nodes[w.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[1] || bs != vec![ws[0]] {
            return Err(Error::Shape(format!("dense: x {xs:?}, w {ws:?}, b {bs:?}")));
        }
        let (rows, d_in, d_out) = (xs[0], xs[1], ws[0]);
        let mut out = Tensor::zeros(&[rows, d_out]);
        {
            let xv = self.nodes[x.0].value.data();
            let wv = self.nodes[w.0].value.data();
            let bv = self.nodes[b.0].value.data();
            let ov = out.data_mut();
            for r in 0..rows {
                let xrow = &xv[r * d_in..(r + 1) * d_in];
                let orow = &mut ov[r * d_out..(r + 1) * d_out];
                for (j, o) in orow.iter_mut().enumerate() {
                    *o = bv[j] + dot(xrow, &wv[j * d_in..(j + 1) * d_in]);
                }
            }
        }
        Ok(self.push(out, vec![x, w, b], Op::Dense))
    }

    // ---- normalization ----

    /// Batch norm in training mode on [B, C, L]: normalize per channel over
    /// (B, L) with biased variance. Returns the node plus the batch mean/var
    /// for the caller's running-stat update.
    pub fn batchnorm_train(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, eps: T) -> Result<(NodeId, Vec<T>, Vec<T>)> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("batchnorm expects [B,C,L], got {xs:?}")));
        }
        let (batch, c, l) = (xs[0], xs[1], xs[2]);
        if batch < 2 {
            return Err(Error::Shape("batchnorm training needs batch >= 2".into()));
        }
        if self.nodes[gamma.0].value.shape() != [c] || self.nodes[beta.0].value.shape() != [c] {
            return Err(Error::Shape("batchnorm: gamma/beta must be [C]".into()));
        }
        let m = T::of_usize(batch * l);
        let mut mean = vec![T::zero(); c];
        let mut var = vec![T::zero(); c];
        {
            let xv = self.nodes[x.0].value.data();
            for bi in 0..batch {
                for ci in 0..c {
                    let row = &xv[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    mean[ci] += row.iter().copied().sum::<T>();
                }
            }
            for v in &mut mean {
                *v /= m;
            }
            for bi in 0..batch {
                for ci in 0..c {
                    let row = &xv[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    var[ci] += row.iter().map(|&e| (e - mean[ci]) * (e - mean[ci])).sum::<T>();
                }
            }
            for v in &mut var {
                *v /= m;
            }
        }
        let invstd: Vec<T> = var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
        let mut out = Tensor::zeros(&[batch, c, l]);
        {
            let xv = self.nodes[x.0].value.data();
            let gv = self.nodes[gamma.0].value.data();
            let bv = self.nodes[beta.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    let (g, b_, mu, is) = (gv[ci], bv[ci], mean[ci], invstd[ci]);
                    for i in 0..l {
                        ov[base + i] = g * (xv[base + i] - mu) * is + b_;
                    }
                }
            }
        }
        let node = self.push(
            out,
            vec![x, gamma, beta],
            Op::BatchNormTrain { mean: mean.clone(), invstd },
        );
        Ok((node, mean, var))
    }

    /// Batch norm in inference mode: a per-channel affine map using the given
    /// running statistics.
    pub fn batchnorm_infer(&mut self, x: NodeId, gamma: NodeId, beta: NodeId, running_mean: &[T], running_var: &[T], eps: T) -> Result<NodeId> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("batchnorm expects [B,C,L], got {xs:?}")));
        }
        let (batch, c, l) = (xs[0], xs[1], xs[2]);
        if running_mean.len() != c || running_var.len() != c {
            return Err(Error::Shape("batchnorm: running stats must be [C]".into()));
        }
        let invstd: Vec<T> = running_var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
        let mut out = Tensor::zeros(&[batch, c, l]);
        {
            let xv = self.nodes[x.0].value.data();
            let gv = self.nodes[gamma.0].value.data();
            let bv = self.nodes[beta.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    let (g, b_, mu, is) = (gv[ci], bv[ci], running_mean[ci], invstd[ci]);
                    for i in 0..l {
                        ov[base + i] = g * (xv[base + i] - mu) * is + b_;
                    }
                }
            }
        }
        Ok(self.push(
            out,
            vec![x, gamma, beta],
            Op::BatchNormInfer { mean: running_mean.to_vec(), invstd },
        ))
    }

    // ---- pooling ----

    pub fn maxpool1d(&mut self, x: NodeId, k: usize, stride: usize, padding: Padding) -> Result<NodeId> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("maxpool expects [B,C,L], got {xs:?}")));
        }
        let (batch, c, l) = (xs[0], xs[1], xs[2]);
        let (pad_l, _, l_out) = resolve_padding(l, k, stride, padding)?;
        let mut out = Tensor::zeros(&[batch, c, l_out]);
        let mut argmax = vec![0usize; batch * c * l_out];
        {
            let xv = self.nodes[x.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    for o in 0..l_out {
                        let w_start = (o * stride) as isize - pad_l as isize;
                        let mut best = T::neg_infinity();
                        let mut best_i = 0usize;
                        for kk in 0..k {
                            let i = w_start + kk as isize;
                            if i >= 0 && (i as usize) < l {
                                let v = xv[base + i as usize];
                                if v > best {
                                    best = v;
                                    best_i = base + i as usize;
                                }
                            }
                        }
                        ov[(bi * c + ci) * l_out + o] = best;
                        argmax[(bi * c + ci) * l_out + o] = best_i;
                    }
                }
            }
        }
        Ok(self.push(out, vec![x], Op::MaxPool1d { argmax }))
    }

    /// Mean over the length axis: [B, C, L] -> [B, C].
    pub fn global_avg_pool(&mut self, x: NodeId) -> Result<NodeId> {
        let xs = self.nodes[x.0].value.shape().to_vec();
        if xs.len() != 3 {
            return Err(Error::Shape(format!("global_avg_pool expects [B,C,L], got {xs:?}")));
        }
        let (batch, c, l) = (xs[0], xs[1], xs[2]);
        let inv = T::of_usize(l).recip();
        let mut out = Tensor::zeros(&[batch, c]);
        {
            let xv = self.nodes[x.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let row = &xv[(bi * c + ci) * l..(bi * c + ci + 1) * l];
                    ov[bi * c + ci] = row.iter().copied().sum::<T>() * inv;
                }
            }
        }
        Ok(self.push(out, vec![x], Op::GlobalAvgPool))
    }

    // ---- structure ----

    /// Concatenate [B, C_i, L] blocks along the channel axis.
    pub fn concat_channels(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        if xs.is_empty() {
            return Err(Error::Shape("concat of zero tensors".into()));
        }
        let first = self.nodes[xs[0].0].value.shape().to_vec();
        if first.len() != 3 {
            return Err(Error::Shape("concat_channels expects [B,C,L] inputs".into()));
        }
        let (batch, l) = (first[0], first[2]);
        let mut channels = Vec::with_capacity(xs.len());
        for &x in xs {
            let s = self.nodes[x.0].value.shape();
            if s.len() != 3 || s[0] != batch || s[2] != l {
                return Err(Error::Shape("concat_channels: mismatched B or L".into()));
            }
            channels.push(s[1]);
        }
        let c_total: usize = channels.iter().sum();
        let mut out = Tensor::zeros(&[batch, c_total, l]);
        {
            let ov = out.data_mut();
            for bi in 0..batch {
                let mut c_off = 0usize;
                for (&x, &ci) in xs.iter().zip(&channels) {
                    let src = self.nodes[x.0].value.data();
                    let n = ci * l;
                    ov[(bi * c_total + c_off) * l..(bi * c_total + c_off) * l + n]
                        .copy_from_slice(&src[bi * n..(bi + 1) * n]);
                    c_off += ci;
                }
            }
        }
        Ok(self.push(out, xs.to_vec(), Op::ConcatChannels { channels }))
    }

    /// Concatenate [B, H_i] blocks along the feature axis.
    pub fn concat_features(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        if xs.is_empty() {
            return Err(Error::Shape("concat of zero tensors".into()));
        }
        let batch = self.nodes[xs[0].0].value.shape()[0];
        let mut widths = Vec::with_capacity(xs.len());
        for &x in xs {
            let s = self.nodes[x.0].value.shape();
            if s.len() != 2 || s[0] != batch {
                return Err(Error::Shape("concat_features: mismatched batch".into()));
            }
            widths.push(s[1]);
        }
        let h_total: usize = widths.iter().sum();
        let mut out = Tensor::zeros(&[batch, h_total]);
        {
            let ov = out.data_mut();
            for bi in 0..batch {
                let mut off = 0usize;
                for (&x, &w) in xs.iter().zip(&widths) {
                    let src = self.nodes[x.0].value.data();
                    ov[bi * h_total + off..bi * h_total + off + w]
                        .copy_from_slice(&src[bi * w..(bi + 1) * w]);
                    off += w;
                }
            }
        }
        Ok(self.push(out, xs.to_vec(), Op::ConcatFeatures { widths }))
    }

    /// Columns [start, start+len) of a [R, D] tensor.
    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 2 || start + len > s[1] {
            return Err(Error::Shape(format!("slice_cols {start}+{len} out of {s:?}")));
        }
        let (rows, d) = (s[0], s[1]);
        let mut out = Tensor::zeros(&[rows, len]);
        {
            let xv = self.nodes[x.0].value.data();
            let ov = out.data_mut();
            for r in 0..rows {
                ov[r * len..(r + 1) * len].copy_from_slice(&xv[r * d + start..r * d + start + len]);
            }
        }
        Ok(self.push(out, vec![x], Op::SliceCols { start }))
    }

    /// Timestep `t` of [B, T, D] -> [B, D].
    pub fn select_time(&mut self, x: NodeId, t: usize) -> Result<NodeId> {
        let s = self.nodes[x.0].value.shape().to_vec();
        if s.len() != 3 || t >= s[1] {
            return Err(Error::Shape(format!("select_time {t} out of {s:?}")));
        }
        let (batch, steps, d) = (s[0], s[1], s[2]);
        let mut out = Tensor::zeros(&[batch, d]);
        {
            let xv = self.nodes[x.0].value.data();
            let ov = out.data_mut();
            for bi in 0..batch {
                ov[bi * d..(bi + 1) * d]
                    .copy_from_slice(&xv[(bi * steps + t) * d..(bi * steps + t) * d + d]);
            }
        }
        Ok(self.push(out, vec![x], Op::SelectTime { t }))
    }

    /// Stack T tensors of [B, H] into [B, T, H], in argument order.
    pub fn stack_time(&mut self, xs: &[NodeId]) -> Result<NodeId> {
        if xs.is_empty() {
            return Err(Error::Shape("stack of zero tensors".into()));
        }
        let s0 = self.nodes[xs[0].0].value.shape().to_vec();
        if s0.len() != 2 {
            return Err(Error::Shape("stack_time expects [B,H] inputs".into()));
        }
        let (batch, h) = (s0[0], s0[1]);
        for &x in xs {
            if self.nodes[x.0].value.shape() != [batch, h] {
                return Err(Error::Shape("stack_time: mismatched shapes".into()));
            }
        }
        let steps = xs.len();
        let mut out = Tensor::zeros(&[batch, steps, h]);
        {
            let ov = out.data_mut();
            for (t, &x) in xs.iter().enumerate() {
                let src = self.nodes[x.0].value.data();
                for bi in 0..batch {
                    ov[(bi * steps + t) * h..(bi * steps + t) * h + h]
                        .copy_from_slice(&src[bi * h..(bi + 1) * h]);
                }
            }
        }
        Ok(self.push(out, xs.to_vec(), Op::StackTime))
    }

    /// Row lookup: table [V, E] gathered at `ids` -> [len(ids), E].
    pub fn embedding(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let s = self.nodes[table.0].value.shape().to_vec();
        if s.len() != 2 {
            return Err(Error::Shape("embedding table must be [V,E]".into()));
        }
        let (v, e) = (s[0], s[1]);
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(Error::Domain(format!("embedding id {bad} out of vocab {v}")));
        }
        let mut out = Tensor::zeros(&[ids.len(), e]);
        {
            let tv = self.nodes[table.0].value.data();
            let ov = out.data_mut();
            for (r, &id) in ids.iter().enumerate() {
                ov[r * e..(r + 1) * e].copy_from_slice(&tv[id * e..(id + 1) * e]);
            }
        }
        Ok(self.push(out, vec![table], Op::Embedding { ids: ids.to_vec() }))
    }

    // ---- heads ----

    /// Row-wise softmax over the last axis.
    pub fn softmax(&mut self, x: NodeId) -> Result<NodeId> {
        let s = self.nodes[x.0].value.shape().to_vec();
        let c = *s.last().ok_or_else(|| Error::Shape("softmax on rank-0".into()))?;
        let rows = self.nodes[x.0].value.numel() / c;
        let mut out = self.nodes[x.0].value.clone();
        {
            let ov = out.data_mut();
            for r in 0..rows {
                softmax_row(&mut ov[r * c..(r + 1) * c]);
            }
        }
        Ok(self.push(out, vec![x], Op::Softmax))
    }

    /// Mean cross-entropy of logits [R, C] against integer labels, with the
    /// usual max-subtraction stabilization. Gradient of the logits is
    /// (softmax - onehot) / R.
    pub fn softmax_xent(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let s = self.nodes[logits.0].value.shape().to_vec();
        if s.len() != 2 || s[0] != labels.len() {
            return Err(Error::Shape(format!(
                "softmax_xent: logits {s:?} vs {} labels",
                labels.len()
            )));
        }
        let (rows, c) = (s[0], s[1]);
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(Error::Domain(format!("label {bad} out of range 0..{c}")));
        }
        let mut probs = self.nodes[logits.0].value.clone();
        let mut loss = T::zero();
        {
            let pv = probs.data_mut();
            for (r, &label) in labels.iter().enumerate() {
                let row = &mut pv[r * c..(r + 1) * c];
                let mx = row.iter().copied().fold(T::neg_infinity(), T::max);
                let mut denom = T::zero();
                for e in row.iter_mut() {
                    *e = (*e - mx).exp();
                    denom += *e;
                }
                for e in row.iter_mut() {
                    *e /= denom;
                }
                loss -= row[label].max(T::min_positive_value()).ln();
            }
        }
        loss /= T::of_usize(rows);
        Ok(self.push(
            Tensor::scalar(loss),
            vec![logits],
            Op::SoftmaxXent { labels: labels.to_vec(), probs },
        ))
    }

    /// Fixed-coefficient contraction to a scalar: sum_i c_i x_i. Used to give
    /// finite-difference checks a scalar objective.
    pub fn weighted_sum(&mut self, x: NodeId, coeffs: &[T]) -> Result<NodeId> {
        if coeffs.len() != self.nodes[x.0].value.numel() {
            return Err(Error::Shape("weighted_sum: coefficient count mismatch".into()));
        }
        let v = dot(self.nodes[x.0].value.data(), coeffs);
        Ok(self.push(Tensor::scalar(v), vec![x], Op::WeightedSum { coeffs: coeffs.to_vec() }))
    }

    // ---- backward ----

    /// Reverse-mode sweep from a scalar node.
    pub fn backward(&self, loss: NodeId) -> Result<Grads<T>> {
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(Error::Shape("backward seed must be a scalar node".into()));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::from_vec(
            self.nodes[loss.0].value.shape(),
            vec![T::one()],
        )?);
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].needs_grad && !matches!(self.nodes[idx].op, Op::Leaf) {
                continue;
            }
            let Some(gout) = grads[idx].take() else { continue };
            // Leaves keep their accumulated gradient.
            if matches!(self.nodes[idx].op, Op::Leaf) {
                grads[idx] = Some(gout);
                continue;
            }
            let input_grads = self.op_backward(idx, &gout);
            for (inp, g) in self.nodes[idx].inputs.iter().zip(input_grads) {
                let Some(g) = g else { continue };
                if !self.nodes[inp.0].needs_grad {
                    continue;
                }
                match &mut grads[inp.0] {
                    Some(acc) => {
                        for (a, &b) in acc.data_mut().iter_mut().zip(g.data()) {
                            *a += b;
                        }
                    }
                    slot => *slot = Some(g),
                }
            }
        }
        Ok(Grads { list: grads })
    }

    fn op_backward(&self, idx: usize, gout: &Tensor<T>) -> Vec<Option<Tensor<T>>> {
        let node = &self.nodes[idx];
        let inval = |i: usize| &self.nodes[node.inputs[i].0].value;
        match &node.op {
            Op::Leaf => vec![],
            Op::Relu => {
                let mut g = gout.clone();
                for (gv, &xv) in g.data_mut().iter_mut().zip(inval(0).data()) {
                    if xv <= T::zero() {
                        *gv = T::zero();
                    }
                }
                vec![Some(g)]
            }
            Op::Sigmoid => {
                let mut g = gout.clone();
                for (gv, &y) in g.data_mut().iter_mut().zip(node.value.data()) {
                    *gv *= y * (T::one() - y);
                }
                vec![Some(g)]
            }
            Op::Tanh => {
                let mut g = gout.clone();
                for (gv, &y) in g.data_mut().iter_mut().zip(node.value.data()) {
                    *gv *= T::one() - y * y;
                }
                vec![Some(g)]
            }
            Op::Add => vec![Some(gout.clone()), Some(gout.clone())],
            Op::Mul => {
                let mut ga = gout.clone();
                for (gv, &b) in ga.data_mut().iter_mut().zip(inval(1).data()) {
                    *gv *= b;
                }
                let mut gb = gout.clone();
                for (gv, &a) in gb.data_mut().iter_mut().zip(inval(0).data()) {
                    *gv *= a;
                }
                vec![Some(ga), Some(gb)]
            }
            Op::OneMinus => {
                let mut g = gout.clone();
                for gv in g.data_mut() {
                    *gv = -*gv;
                }
                vec![Some(g)]
            }
            Op::Reshape => {
                let g = Tensor::from_vec(inval(0).shape(), gout.data().to_vec()).expect("reshape grad");
                vec![Some(g)]
            }
            Op::Conv1d { stride, pad_l } => self.conv1d_backward(idx, gout, *stride, *pad_l),
            Op::DepthwiseConv1d { stride, pad_l } => {
                self.depthwise_backward(idx, gout, *stride, *pad_l)
            }
            Op::Matmul => {
                let (gx, gw) = matmul_backward(inval(0), inval(1), gout);
                vec![Some(gx), Some(gw)]
            }
            Op::Dense => {
                let (gx, gw) = matmul_backward(inval(0), inval(1), gout);
                let d_out = inval(1).shape()[0];
                let rows = inval(0).shape()[0];
                let mut gb = Tensor::zeros(&[d_out]);
                {
                    let gv = gout.data();
                    let gbv = gb.data_mut();
                    for r in 0..rows {
                        for j in 0..d_out {
                            gbv[j] += gv[r * d_out + j];
                        }
                    }
                }
                vec![Some(gx), Some(gw), Some(gb)]
            }
            Op::BatchNormTrain { mean, invstd, .. } => {
                self.batchnorm_train_backward(idx, gout, mean, invstd)
            }
            Op::BatchNormInfer { mean, invstd } => {
                self.batchnorm_infer_backward(idx, gout, mean, invstd)
            }
            Op::MaxPool1d { argmax } => {
                let mut gx = Tensor::zeros(inval(0).shape());
                {
                    let gxv = gx.data_mut();
                    for (o, &src) in argmax.iter().enumerate() {
                        gxv[src] += gout.data()[o];
                    }
                }
                vec![Some(gx)]
            }
            Op::GlobalAvgPool => {
                let xs = inval(0).shape();
                let (batch, c, l) = (xs[0], xs[1], xs[2]);
                let inv = T::of_usize(l).recip();
                let mut gx = Tensor::zeros(xs);
                {
                    let gxv = gx.data_mut();
                    for bi in 0..batch {
                        for ci in 0..c {
                            let g = gout.data()[bi * c + ci] * inv;
                            for e in &mut gxv[(bi * c + ci) * l..(bi * c + ci + 1) * l] {
                                *e = g;
                            }
                        }
                    }
                }
                vec![Some(gx)]
            }
            Op::ConcatChannels { channels } => {
                let batch = node.value.shape()[0];
                let l = node.value.shape()[2];
                let c_total: usize = channels.iter().sum();
                let mut outs = Vec::with_capacity(channels.len());
                let mut c_off = 0usize;
                for &ci in channels {
                    let mut g = Tensor::zeros(&[batch, ci, l]);
                    {
                        let gv = g.data_mut();
                        for bi in 0..batch {
                            let n = ci * l;
                            gv[bi * n..(bi + 1) * n].copy_from_slice(
                                &gout.data()[(bi * c_total + c_off) * l..(bi * c_total + c_off) * l + n],
                            );
                        }
                    }
                    outs.push(Some(g));
                    c_off += ci;
                }
                outs
            }
            Op::ConcatFeatures { widths } => {
                let batch = node.value.shape()[0];
                let h_total: usize = widths.iter().sum();
                let mut outs = Vec::with_capacity(widths.len());
                let mut off = 0usize;
                for &w in widths {
                    let mut g = Tensor::zeros(&[batch, w]);
                    {
                        let gv = g.data_mut();
                        for bi in 0..batch {
                            gv[bi * w..(bi + 1) * w].copy_from_slice(
                                &gout.data()[bi * h_total + off..bi * h_total + off + w],
                            );
                        }
                    }
                    outs.push(Some(g));
                    off += w;
                }
                outs
            }
            Op::SliceCols { start } => {
                let xs = inval(0).shape();
                let (rows, d) = (xs[0], xs[1]);
                let len = node.value.shape()[1];
                let mut gx = Tensor::zeros(xs);
                {
                    let gv = gx.data_mut();
                    for r in 0..rows {
                        gv[r * d + start..r * d + start + len]
                            .copy_from_slice(&gout.data()[r * len..(r + 1) * len]);
                    }
                }
                vec![Some(gx)]
            }
            Op::SelectTime { t } => {
                let xs = inval(0).shape();
                let (batch, steps, d) = (xs[0], xs[1], xs[2]);
                let mut gx = Tensor::zeros(xs);
                {
                    let gv = gx.data_mut();
                    for bi in 0..batch {
                        gv[(bi * steps + t) * d..(bi * steps + t) * d + d]
                            .copy_from_slice(&gout.data()[bi * d..(bi + 1) * d]);
                    }
                }
                vec![Some(gx)]
            }
            Op::StackTime => {
                let steps = node.inputs.len();
                let batch = node.value.shape()[0];
                let h = node.value.shape()[2];
                (0..steps)
                    .map(|t| {
                        let mut g = Tensor::zeros(&[batch, h]);
                        {
                            let gv = g.data_mut();
                            for bi in 0..batch {
                                gv[bi * h..(bi + 1) * h].copy_from_slice(
                                    &gout.data()[(bi * steps + t) * h..(bi * steps + t) * h + h],
                                );
                            }
                        }
                        Some(g)
                    })
                    .collect()
            }
            Op::Embedding { ids } => {
                let mut gt = Tensor::zeros(inval(0).shape());
                let e = inval(0).shape()[1];
                {
                    let gv = gt.data_mut();
                    for (r, &id) in ids.iter().enumerate() {
                        for j in 0..e {
                            gv[id * e + j] += gout.data()[r * e + j];
                        }
                    }
                }
                vec![Some(gt)]
            }
            Op::Softmax => {
                let c = *node.value.shape().last().unwrap();
                let rows = node.value.numel() / c;
                let mut gx = gout.clone();
                {
                    let gv = gx.data_mut();
                    let yv = node.value.data();
                    for r in 0..rows {
                        let y = &yv[r * c..(r + 1) * c];
                        let g = &mut gv[r * c..(r + 1) * c];
                        let s: T = g.iter().zip(y).map(|(&a, &b)| a * b).sum();
                        for (gi, &yi) in g.iter_mut().zip(y) {
                            *gi = yi * (*gi - s);
                        }
                    }
                }
                vec![Some(gx)]
            }
            Op::SoftmaxXent { labels, probs } => {
                let scale = gout.item() / T::of_usize(labels.len());
                let mut gx = probs.clone();
                {
                    let gv = gx.data_mut();
                    let c = probs.shape()[1];
                    for (r, &label) in labels.iter().enumerate() {
                        gv[r * c + label] -= T::one();
                        for e in &mut gv[r * c..(r + 1) * c] {
                            *e *= scale;
                        }
                    }
                }
                vec![Some(gx)]
            }
            Op::WeightedSum { coeffs } => {
                let g0 = gout.item();
                let mut g = Tensor::zeros(inval(0).shape());
                for (e, &c) in g.data_mut().iter_mut().zip(coeffs) {
                    *e = g0 * c;
                }
                vec![Some(g)]
            }
        }
    }

    fn conv1d_backward(&self, idx: usize, gout: &Tensor<T>, stride: usize, pad_l: usize) -> Vec<Option<Tensor<T>>> {
        let node = &self.nodes[idx];
        let x = &self.nodes[node.inputs[0].0].value;
        let w = &self.nodes[node.inputs[1].0].value;
        let (batch, c_in, l) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (c_out, _, k) = (w.shape()[0], w.shape()[1], w.shape()[2]);
        let l_out = node.value.shape()[2];
        let mut gx = Tensor::zeros(x.shape());
        let mut gw = Tensor::zeros(w.shape());
        let mut gb = Tensor::zeros(&[c_out]);
        {
            let (xv, wv, gv) = (x.data(), w.data(), gout.data());
            let gxv = gx.data_mut();
            let gwv = gw.data_mut();
            let gbv = gb.data_mut();
            for bi in 0..batch {
                for co in 0..c_out {
                    let grow = &gv[(bi * c_out + co) * l_out..(bi * c_out + co + 1) * l_out];
                    gbv[co] += grow.iter().copied().sum::<T>();
                    for ci in 0..c_in {
                        let xrow = &xv[(bi * c_in + ci) * l..(bi * c_in + ci) * l + l];
                        let wrow = &wv[(co * c_in + ci) * k..(co * c_in + ci) * k + k];
                        let gxrow = &mut gxv[(bi * c_in + ci) * l..(bi * c_in + ci) * l + l];
                        let gwrow = &mut gwv[(co * c_in + ci) * k..(co * c_in + ci) * k + k];
                        corr_backward(grow, xrow, wrow, gxrow, gwrow, stride, pad_l);
                    }
                }
            }
        }
        vec![Some(gx), Some(gw), Some(gb)]
    }

    fn depthwise_backward(&self, idx: usize, gout: &Tensor<T>, stride: usize, pad_l: usize) -> Vec<Option<Tensor<T>>> {
        let node = &self.nodes[idx];
        let x = &self.nodes[node.inputs[0].0].value;
        let w = &self.nodes[node.inputs[1].0].value;
        let (batch, c, l) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let k = w.shape()[1];
        let l_out = node.value.shape()[2];
        let mut gx = Tensor::zeros(x.shape());
        let mut gw = Tensor::zeros(w.shape());
        let mut gb = Tensor::zeros(&[c]);
        {
            let (xv, wv, gv) = (x.data(), w.data(), gout.data());
            let gxv = gx.data_mut();
            let gwv = gw.data_mut();
            let gbv = gb.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let grow = &gv[(bi * c + ci) * l_out..(bi * c + ci + 1) * l_out];
                    gbv[ci] += grow.iter().copied().sum::<T>();
                    let xrow = &xv[(bi * c + ci) * l..(bi * c + ci) * l + l];
                    let wrow = &wv[ci * k..(ci + 1) * k];
                    let gxrow = &mut gxv[(bi * c + ci) * l..(bi * c + ci) * l + l];
                    let gwrow = &mut gwv[ci * k..(ci + 1) * k];
                    corr_backward(grow, xrow, wrow, gxrow, gwrow, stride, pad_l);
                }
            }
        }
        vec![Some(gx), Some(gw), Some(gb)]
    }

    fn batchnorm_train_backward(&self, idx: usize, gout: &Tensor<T>, mean: &[T], invstd: &[T]) -> Vec<Option<Tensor<T>>> {
        let node = &self.nodes[idx];
        let x = &self.nodes[node.inputs[0].0].value;
        let gamma = &self.nodes[node.inputs[1].0].value;
        let (batch, c, l) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let m = T::of_usize(batch * l);
        let mut gx = Tensor::zeros(x.shape());
        let mut gg = Tensor::zeros(&[c]);
        let mut gb = Tensor::zeros(&[c]);
        let (xv, gv) = (x.data(), gout.data());
        // Channel sums first, then the closed-form input gradient.
        let mut sum_g = vec![T::zero(); c];
        let mut sum_gx = vec![T::zero(); c];
        for bi in 0..batch {
            for ci in 0..c {
                let base = (bi * c + ci) * l;
                let (mu, is) = (mean[ci], invstd[ci]);
                for i in 0..l {
                    let xhat = (xv[base + i] - mu) * is;
                    sum_g[ci] += gv[base + i];
                    sum_gx[ci] += gv[base + i] * xhat;
                }
            }
        }
        {
            let gxv = gx.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    let (mu, is, ga) = (mean[ci], invstd[ci], gamma.data()[ci]);
                    let (sg, sgx) = (sum_g[ci] / m, sum_gx[ci] / m);
                    for i in 0..l {
                        let xhat = (xv[base + i] - mu) * is;
                        gxv[base + i] = ga * is * (gv[base + i] - sg - xhat * sgx);
                    }
                }
            }
        }
        gg.data_mut().copy_from_slice(&sum_gx);
        gb.data_mut().copy_from_slice(&sum_g);
        vec![Some(gx), Some(gg), Some(gb)]
    }

    fn batchnorm_infer_backward(&self, idx: usize, gout: &Tensor<T>, mean: &[T], invstd: &[T]) -> Vec<Option<Tensor<T>>> {
        let node = &self.nodes[idx];
        let x = &self.nodes[node.inputs[0].0].value;
        let gamma = &self.nodes[node.inputs[1].0].value;
        let (batch, c, l) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let mut gx = Tensor::zeros(x.shape());
        let mut gg = Tensor::zeros(&[c]);
        let mut gb = Tensor::zeros(&[c]);
        {
            let (xv, gv) = (x.data(), gout.data());
            let gxv = gx.data_mut();
            let ggv = gg.data_mut();
            let gbv = gb.data_mut();
            for bi in 0..batch {
                for ci in 0..c {
                    let base = (bi * c + ci) * l;
                    let (mu, is, ga) = (mean[ci], invstd[ci], gamma.data()[ci]);
                    for i in 0..l {
                        let xhat = (xv[base + i] - mu) * is;
                        gxv[base + i] = gv[base + i] * ga * is;
                        ggv[ci] += gv[base + i] * xhat;
                        gbv[ci] += gv[base + i];
                    }
                }
            }
        }
        vec![Some(gx), Some(gg), Some(gb)]
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// out[o] += sum_k w[k] x[o*stride + k - pad_l], skipping out-of-range taps.
fn accumulate_corr<T: Scalar>(out: &mut [T], x: &[T], w: &[T], stride: usize, pad_l: usize) {
    let l = x.len();
    let l_out = out.len();
    for (k, &wv) in w.iter().enumerate() {
        let off = k as isize - pad_l as isize;
        // Output positions whose tap lands inside the input.
        let o_start = if off >= 0 { 0 } else { ((-off) as usize).div_ceil(stride) };
        let o_end = {
            let max_i = l as isize - 1 - off;
            if max_i < 0 {
                0
            } else {
                l_out.min((max_i as usize) / stride + 1)
            }
        };
        if o_start >= o_end {
            continue;
        }
        if stride == 1 {
            let xi = (o_start as isize + off) as usize;
            let xs = &x[xi..xi + (o_end - o_start)];
            let os = &mut out[o_start..o_end];
            for (o, &xv) in os.iter_mut().zip(xs) {
                *o += wv * xv;
            }
        } else {
            for o in o_start..o_end {
                out[o] += wv * x[(o * stride).isize_checked(off)];
            }
        }
    }
}

// Small helper trait to keep the strided index arithmetic in one place.
trait IsizeChecked {
    fn isize_checked(self, off: isize) -> usize;
}
impl IsizeChecked for usize {
    #[inline]
    fn isize_checked(self, off: isize) -> usize {
        (self as isize + off) as usize
    }
}

/// Shared input/weight gradient kernel for (depthwise) correlation.
fn corr_backward<T: Scalar>(grow: &[T], xrow: &[T], wrow: &[T], gxrow: &mut [T], gwrow: &mut [T], stride: usize, pad_l: usize) {
    let l = xrow.len();
    let l_out = grow.len();
    for k in 0..wrow.len() {
        let off = k as isize - pad_l as isize;
        let o_start = if off >= 0 { 0 } else { ((-off) as usize).div_ceil(stride) };
        let o_end = {
            let max_i = l as isize - 1 - off;
            if max_i < 0 {
                0
            } else {
                l_out.min((max_i as usize) / stride + 1)
            }
        };
        if o_start >= o_end {
            continue;
        }
        let wv = wrow[k];
        if stride == 1 {
            let xi = (o_start as isize + off) as usize;
            let n = o_end - o_start;
            let gs = &grow[o_start..o_end];
            // dW: correlation of upstream grad with input.
            gwrow[k] += dot(gs, &xrow[xi..xi + n]);
            // dX: scatter of upstream grad through the tap.
            let gxs = &mut gxrow[xi..xi + n];
            for (gx, &g) in gxs.iter_mut().zip(gs) {
                *gx += wv * g;
            }
        } else {
            let mut acc = T::zero();
            for o in o_start..o_end {
                let i = (o * stride).isize_checked(off);
                acc += grow[o] * xrow[i];
                gxrow[i] += wv * grow[o];
            }
            gwrow[k] += acc;
        }
    }
}

/// Gradients of out = x w^T for x [R,Din], w [Dout,Din].
fn matmul_backward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, gout: &Tensor<T>) -> (Tensor<T>, Tensor<T>) {
    let (rows, d_in) = (x.shape()[0], x.shape()[1]);
    let d_out = w.shape()[0];
    let mut gx = Tensor::zeros(x.shape());
    let mut gw = Tensor::zeros(w.shape());
    {
        let (xv, wv, gv) = (x.data(), w.data(), gout.data());
        let gxv = gx.data_mut();
        let gwv = gw.data_mut();
        for r in 0..rows {
            let grow = &gv[r * d_out..(r + 1) * d_out];
            let xrow = &xv[r * d_in..(r + 1) * d_in];
            let gxrow = &mut gxv[r * d_in..(r + 1) * d_in];
            for (j, &g) in grow.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                let wrow = &wv[j * d_in..(j + 1) * d_in];
                let gwrow = &mut gwv[j * d_in..(j + 1) * d_in];
                for i in 0..d_in {
                    gxrow[i] += g * wrow[i];
                    gwrow[i] += g * xrow[i];
                }
            }
        }
    }
    (gx, gw)
}

fn softmax_row<T: Scalar>(row: &mut [T]) {
    let mx = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut denom = T::zero();
    for e in row.iter_mut() {
        *e = (*e - mx).exp();
        denom += *e;
    }
    for e in row.iter_mut() {
        *e /= denom;
    }
}
