//! Inference-cost accounting.
//!
//! Convention (declared once, used everywhere): one multiply-accumulate is
//! 2 FLOPs; a bias add is 1 FLOP per output element; inference batch norm is
//! 2 FLOPs per element; an activation is 1 FLOP per element; softmax is 3 per
//! element; max pooling charges its k-1 comparisons per output element; a GRU
//! cell charges its three gate affine maps at 2(DH + H^2) + 3H each plus 5H
//! for the reset product and state blend. Embedding lookups and
//! concatenations move data but compute nothing.

use crate::error::{Error, Result};
use crate::nn::tape::{resolve_padding, Padding};
use std::fmt;

/// Shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorShape {
    /// [C, L] feature map.
    ChannelsLength { c: usize, l: usize },
    /// Flat feature vector.
    Features { d: usize },
    /// [T, D] sequence.
    Sequence { t: usize, d: usize },
    /// Integer token sequence (pre-embedding).
    Tokens { t: usize },
}

impl fmt::Display for TensorShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorShape::ChannelsLength { c, l } => write!(f, "{c}x{l}"),
            TensorShape::Features { d } => write!(f, "{d}"),
            TensorShape::Sequence { t, d } => write!(f, "{t}x{d}"),
            TensorShape::Tokens { t } => write!(f, "{t} ids"),
        }
    }
}

/// One layer of a cost model.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv1d { c_out: usize, k: usize, stride: usize, padding: Padding },
    DepthwiseConv1d { k: usize, stride: usize, padding: Padding },
    PointwiseConv1d { c_out: usize },
    Dense { out: usize },
    BatchNorm,
    Relu,
    MaxPool1d { k: usize, stride: usize, padding: Padding },
    GlobalAvgPool,
    Embedding { vocab: usize, dim: usize },
    Gru { hidden: usize },
    BidirectionalGru { hidden: usize },
    Softmax,
    Concat,
}

/// Sequential graph node; parallel branches concatenate along channels.
#[derive(Debug, Clone)]
pub enum SpecNode {
    Layer { name: String, kind: LayerSpec },
    Parallel { name: String, branches: Vec<Vec<SpecNode>> },
}

impl SpecNode {
    pub fn layer(name: &str, kind: LayerSpec) -> Self {
        SpecNode::Layer { name: name.into(), kind }
    }
}

/// Cost model of a whole network.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub nodes: Vec<SpecNode>,
}

#[derive(Debug, Clone)]
pub struct FlopsRow {
    pub name: String,
    pub output_shape: String,
    pub flops: u64,
}

#[derive(Debug, Clone)]
pub struct FlopsReport {
    pub rows: Vec<FlopsRow>,
    pub total: u64,
}

impl fmt::Display for FlopsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<28} {:>12} {:>14}", "layer", "output", "FLOPs")?;
        for row in &self.rows {
            writeln!(f, "{:<28} {:>12} {:>14}", row.name, row.output_shape, row.flops)?;
        }
        write!(f, "{:<28} {:>12} {:>14}", "total", "", self.total)
    }
}

/// Per-invocation cost of one GRU cell with input D and hidden H.
pub fn gru_cell_flops(d: usize, h: usize) -> u64 {
    (3 * (2 * (d * h + h * h) + 3 * h) + 5 * h) as u64
}

fn layer_cost(kind: &LayerSpec, input: TensorShape) -> Result<(TensorShape, u64)> {
    use LayerSpec::*;
    use TensorShape::*;
    let bad = |what: &str| Error::Shape(format!("{what} cannot take input {input}"));
    match (kind, input) {
        (Conv1d { c_out, k, stride, padding }, ChannelsLength { c, l }) => {
            let (_, _, l_out) = resolve_padding(l, *k, *stride, *padding)?;
            let flops = (l_out * c_out * (2 * c * k + 1)) as u64;
            Ok((ChannelsLength { c: *c_out, l: l_out }, flops))
        }
        (DepthwiseConv1d { k, stride, padding }, ChannelsLength { c, l }) => {
            let (_, _, l_out) = resolve_padding(l, *k, *stride, *padding)?;
            let flops = (l_out * c * (2 * k + 1)) as u64;
            Ok((ChannelsLength { c, l: l_out }, flops))
        }
        (PointwiseConv1d { c_out }, ChannelsLength { c, l }) => {
            let flops = (l * c_out * (2 * c + 1)) as u64;
            Ok((ChannelsLength { c: *c_out, l }, flops))
        }
        (Dense { out }, Features { d }) => Ok((Features { d: *out }, (2 * d * out + out) as u64)),
        (Dense { out }, Sequence { t, d }) => {
            Ok((Sequence { t, d: *out }, (t * (2 * d * out + out)) as u64))
        }
        (BatchNorm, ChannelsLength { c, l }) => Ok((input, (2 * c * l) as u64)),
        (Relu, ChannelsLength { c, l }) => Ok((input, (c * l) as u64)),
        (Relu, Features { d }) => Ok((input, d as u64)),
        (Relu, Sequence { t, d }) => Ok((input, (t * d) as u64)),
        (MaxPool1d { k, stride, padding }, ChannelsLength { c, l }) => {
            let (_, _, l_out) = resolve_padding(l, *k, *stride, *padding)?;
            Ok((ChannelsLength { c, l: l_out }, ((k - 1) * c * l_out) as u64))
        }
        (GlobalAvgPool, ChannelsLength { c, l }) => Ok((Features { d: c }, (c * l) as u64)),
        (Embedding { vocab: _, dim }, Tokens { t }) => Ok((Sequence { t, d: *dim }, 0)),
        (Gru { hidden }, Sequence { t, d }) => {
            Ok((Sequence { t, d: *hidden }, t as u64 * gru_cell_flops(d, *hidden)))
        }
        (BidirectionalGru { hidden }, Sequence { t, d }) => Ok((
            Sequence { t, d: 2 * hidden },
            2 * t as u64 * gru_cell_flops(d, *hidden),
        )),
        (Softmax, Features { d }) => Ok((input, (3 * d) as u64)),
        (Softmax, Sequence { t, d }) => Ok((input, (3 * t * d) as u64)),
        (Concat, _) => Ok((input, 0)),
        (k, _) => Err(bad(&format!("{k:?}"))),
    }
}

fn walk(nodes: &[SpecNode], mut shape: TensorShape, rows: &mut Vec<FlopsRow>) -> Result<TensorShape> {
    for node in nodes {
        match node {
            SpecNode::Layer { name, kind } => {
                let (out, flops) = layer_cost(kind, shape)?;
                rows.push(FlopsRow { name: name.clone(), output_shape: out.to_string(), flops });
                shape = out;
            }
            SpecNode::Parallel { name, branches } => {
                let mut c_total = 0usize;
                let mut l_common: Option<usize> = None;
                for branch in branches {
                    let out = walk(branch, shape, rows)?;
                    let TensorShape::ChannelsLength { c, l } = out else {
                        return Err(Error::Shape(format!("{name}: branches must end as [C,L]")));
                    };
                    if *l_common.get_or_insert(l) != l {
                        return Err(Error::Shape(format!("{name}: branch lengths disagree")));
                    }
                    c_total += c;
                }
                let out = TensorShape::ChannelsLength { c: c_total, l: l_common.unwrap_or(0) };
                rows.push(FlopsRow {
                    name: format!("{name}.concat"),
                    output_shape: out.to_string(),
                    flops: 0,
                });
                shape = out;
            }
        }
    }
    Ok(shape)
}

/// Resolve every layer's output shape from `input_shape` and total the cost.
pub fn count_flops(model: &ModelSpec, input_shape: TensorShape) -> Result<FlopsReport> {
    let mut rows = Vec::new();
    walk(&model.nodes, input_shape, &mut rows)?;
    let total = rows.iter().map(|r| r.flops).sum();
    Ok(FlopsReport { rows, total })
}
