//! Lightweight per-subcarrier modulation classifier.
//!
//! Backbone: input [2 x S] -> D-CNN(c1, K=7, stride 2) -> BN -> maxpool(2)
//! -> Inception(c2) -> BN -> D-CNN(c3, K=5, stride 2) -> BN -> Inception(c4)
//! -> BN -> global average pool -> dense(c4 -> 5) -> softmax. Every
//! convolution is followed by a ReLU. Default widths are 96/192/192/256,
//! sized so the network dominates the cost of the sequence classifier that
//! rides on its outputs.

use crate::error::{Error, Result};
use crate::models::common::{argmax, bind_params, iq_to_channels, probabilities_f64, take_entries, Param};
use crate::nn::flops::{LayerSpec, ModelSpec, SpecNode, TensorShape};
use crate::nn::init::glorot_uniform;
use crate::nn::tape::{NodeId, Padding, Tape};
use crate::nn::tensor::Tensor;
use crate::qam::ModScheme;
use crate::rng;
use crate::scalar::Scalar;
use num_complex::Complex;
use std::cell::Cell;
use std::path::Path;

pub const LWNN_CLASSES: usize = 5;
/// Default channel widths (dcnn1, inception1, dcnn2, inception2).
pub const LWNN_DEFAULT_WIDTHS: [usize; 4] = [96, 192, 192, 256];
/// Default depthwise kernel widths of the two D-CNN blocks.
pub const LWNN_DEFAULT_KERNELS: [usize; 2] = [7, 5];
const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
struct ConvIdx {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct BnIdx {
    gamma: usize,
    beta: usize,
    running: usize,
}

#[derive(Debug, Clone)]
struct RunningStats<T: Scalar> {
    mean: Vec<T>,
    var: Vec<T>,
}

#[derive(Debug, Clone, Copy)]
struct InceptionIdx {
    b1: ConvIdx,
    b2a: ConvIdx,
    b2b: ConvIdx,
    b3a: ConvIdx,
    b3b: ConvIdx,
    b4: ConvIdx,
}

/// Assembled classifier with its trainable parameters and batch-norm state.
#[derive(Debug, Clone)]
pub struct LwnnModel<T: Scalar> {
    pub input_len: usize,
    pub widths: [usize; 4],
    pub kernels: [usize; 2],
    params: Vec<Param<T>>,
    running: Vec<RunningStats<T>>,
    dcnn1: (ConvIdx, ConvIdx),
    bn1: BnIdx,
    inc1: InceptionIdx,
    bn2: BnIdx,
    dcnn2: (ConvIdx, ConvIdx),
    bn3: BnIdx,
    inc2: InceptionIdx,
    bn4: BnIdx,
    head: ConvIdx,
    invocations: Cell<u64>,
}

struct Builder<T: Scalar> {
    params: Vec<Param<T>>,
    running: Vec<RunningStats<T>>,
    rng: rng::ChaCha8Rng,
}

impl<T: Scalar> Builder<T> {
    fn push(&mut self, name: &str, value: Tensor<T>) -> usize {
        self.params.push(Param { name: name.into(), value });
        self.params.len() - 1
    }

    fn conv(&mut self, name: &str, c_out: usize, c_in: usize, k: usize) -> ConvIdx {
        let w = glorot_uniform(&mut self.rng, &[c_out, c_in, k], c_in * k, c_out * k);
        let wi = self.push(&format!("{name}.w"), w);
        let bi = self.push(&format!("{name}.b"), Tensor::zeros(&[c_out]));
        ConvIdx { w: wi, b: bi }
    }

    fn depthwise(&mut self, name: &str, c: usize, k: usize) -> ConvIdx {
        let w = glorot_uniform(&mut self.rng, &[c, k], k, k);
        let wi = self.push(&format!("{name}.w"), w);
        let bi = self.push(&format!("{name}.b"), Tensor::zeros(&[c]));
        ConvIdx { w: wi, b: bi }
    }

    fn batchnorm(&mut self, name: &str, c: usize) -> BnIdx {
        let gamma = self.push(&format!("{name}.gamma"), Tensor::from_vec(&[c], vec![T::one(); c]).unwrap());
        let beta = self.push(&format!("{name}.beta"), Tensor::zeros(&[c]));
        self.running.push(RunningStats { mean: vec![T::zero(); c], var: vec![T::one(); c] });
        BnIdx { gamma, beta, running: self.running.len() - 1 }
    }

    fn inception(&mut self, name: &str, c_in: usize, c_out: usize) -> InceptionIdx {
        let q = c_out / 4;
        InceptionIdx {
            b1: self.conv(&format!("{name}.b1"), q, c_in, 1),
            b2a: self.conv(&format!("{name}.b2a"), q, c_in, 1),
            b2b: self.conv(&format!("{name}.b2b"), q, q, 3),
            b3a: self.conv(&format!("{name}.b3a"), q, c_in, 1),
            b3b: self.conv(&format!("{name}.b3b"), q, q, 5),
            b4: self.conv(&format!("{name}.b4"), q, c_in, 1),
        }
    }
}

/// Build the classifier for per-subcarrier sequences of length `input_len`,
/// seeding all weights from `seed`.
pub fn build_lwnn<T: Scalar>(input_len: usize, seed: u64) -> Result<LwnnModel<T>> {
    build_lwnn_with_widths(input_len, LWNN_DEFAULT_WIDTHS, seed)
}

pub fn build_lwnn_with_widths<T: Scalar>(input_len: usize, widths: [usize; 4], seed: u64) -> Result<LwnnModel<T>> {
    build_lwnn_custom(input_len, widths, LWNN_DEFAULT_KERNELS, seed)
}

/// Full-control build used by experiments; `kernels` are the two D-CNN
/// depthwise widths.
pub fn build_lwnn_custom<T: Scalar>(
    input_len: usize,
    widths: [usize; 4],
    kernels: [usize; 2],
    seed: u64,
) -> Result<LwnnModel<T>> {
    if input_len < 64 {
        return Err(Error::Config(format!(
            "input length {input_len} too small for the stride chain (need >= 64)"
        )));
    }
    let [c1, c2, c3, c4] = widths;
    if c2 % 4 != 0 || c4 % 4 != 0 {
        return Err(Error::Config("inception widths must be divisible by 4".into()));
    }
    if c3 != c2 {
        return Err(Error::Config("second D-CNN is channel-preserving: c3 must equal c2".into()));
    }
    let mut b = Builder { params: Vec::new(), running: Vec::new(), rng: rng::seeded(seed) };
    let dcnn1 = (b.depthwise("dcnn1.dw", 2, kernels[0]), b.conv("dcnn1.pw", c1, 2, 1));
    let bn1 = b.batchnorm("bn1", c1);
    let inc1 = b.inception("inc1", c1, c2);
    let bn2 = b.batchnorm("bn2", c2);
    let dcnn2 = (b.depthwise("dcnn2.dw", c2, kernels[1]), b.conv("dcnn2.pw", c3, c2, 1));
    let bn3 = b.batchnorm("bn3", c3);
    let inc2 = b.inception("inc2", c3, c4);
    let bn4 = b.batchnorm("bn4", c4);
    let head = b.conv("head", LWNN_CLASSES, c4, 1); // dense stored as [5, c4, 1]
    Ok(LwnnModel {
        input_len,
        widths,
        kernels,
        params: b.params,
        running: b.running,
        dcnn1,
        bn1,
        inc1,
        bn2,
        dcnn2,
        bn3,
        inc2,
        bn4,
        head,
        invocations: Cell::new(0),
    })
}

/// Mode of a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[doc(hidden)]
pub struct LwnnForward {
    pub logits: NodeId,
    pub param_nodes: Vec<NodeId>,
}

impl<T: Scalar> LwnnModel<T> {
    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn param_shapes(&self) -> Vec<&[usize]> {
        self.params.iter().map(|p| p.value.shape()).collect()
    }

    fn dcnn_block(
        &self,
        tape: &mut Tape<T>,
        ids: &[NodeId],
        x: NodeId,
        block: (ConvIdx, ConvIdx),
        k_stride: (usize, usize),
    ) -> Result<NodeId> {
        let dw = tape.depthwise_conv1d(x, ids[block.0.w], ids[block.0.b], k_stride.1, Padding::Same)?;
        let a = tape.relu(dw);
        let pw = tape.conv1d(a, ids[block.1.w], ids[block.1.b], 1, Padding::Same)?;
        Ok(tape.relu(pw))
    }

    fn inception_block(&self, tape: &mut Tape<T>, ids: &[NodeId], x: NodeId, inc: InceptionIdx) -> Result<NodeId> {
        let conv_relu = |tape: &mut Tape<T>, x: NodeId, c: ConvIdx, stride: usize| -> Result<NodeId> {
            let y = tape.conv1d(x, ids[c.w], ids[c.b], stride, Padding::Same)?;
            Ok(tape.relu(y))
        };
        let b1 = conv_relu(tape, x, inc.b1, 1)?;
        let b2 = {
            let a = conv_relu(tape, x, inc.b2a, 1)?;
            conv_relu(tape, a, inc.b2b, 1)?
        };
        let b3 = {
            let a = conv_relu(tape, x, inc.b3a, 1)?;
            conv_relu(tape, a, inc.b3b, 1)?
        };
        let b4 = {
            let p = tape.maxpool1d(x, 3, 1, Padding::Same)?;
            conv_relu(tape, p, inc.b4, 1)?
        };
        tape.concat_channels(&[b1, b2, b3, b4])
    }

    fn bn(&mut self, tape: &mut Tape<T>, ids: &[NodeId], x: NodeId, bn: BnIdx, mode: Mode) -> Result<NodeId> {
        match mode {
            Mode::Train => {
                let (y, mean, var) =
                    tape.batchnorm_train(x, ids[bn.gamma], ids[bn.beta], T::of_f64(BN_EPS))?;
                let stats = &mut self.running[bn.running];
                let momentum = T::of_f64(BN_MOMENTUM);
                let keep = T::one() - momentum;
                for (r, m) in stats.mean.iter_mut().zip(&mean) {
                    *r = momentum * *r + keep * *m;
                }
                for (r, v) in stats.var.iter_mut().zip(&var) {
                    *r = momentum * *r + keep * *v;
                }
                Ok(y)
            }
            Mode::Infer => {
                let stats = &self.running[bn.running];
                let (mean, var) = (stats.mean.clone(), stats.var.clone());
                tape.batchnorm_infer(x, ids[bn.gamma], ids[bn.beta], &mean, &var, T::of_f64(BN_EPS))
            }
        }
    }

    /// Run the backbone on `x` [B, 2, S] up to the logits [B, 5].
    #[doc(hidden)]
    pub fn forward(&mut self, tape: &mut Tape<T>, x: NodeId, mode: Mode) -> Result<LwnnForward> {
        let shape = tape.value(x).shape().to_vec();
        if shape.len() != 3 || shape[1] != 2 || shape[2] != self.input_len {
            return Err(Error::Shape(format!(
                "lwnn expects [B, 2, {}], got {shape:?}",
                self.input_len
            )));
        }
        let ids = bind_params(tape, &self.params, mode == Mode::Train);
        let (dcnn1, bn1, inc1, bn2, dcnn2, bn3, inc2, bn4, head) = (
            self.dcnn1, self.bn1, self.inc1, self.bn2, self.dcnn2, self.bn3, self.inc2, self.bn4,
            self.head,
        );
        let mut h = self.dcnn_block(tape, &ids, x, dcnn1, (7, 2))?;
        h = self.bn(tape, &ids, h, bn1, mode)?;
        h = tape.maxpool1d(h, 2, 2, Padding::Valid)?;
        h = self.inception_block(tape, &ids, h, inc1)?;
        h = self.bn(tape, &ids, h, bn2, mode)?;
        h = self.dcnn_block(tape, &ids, h, dcnn2, (5, 2))?;
        h = self.bn(tape, &ids, h, bn3, mode)?;
        h = self.inception_block(tape, &ids, h, inc2)?;
        h = self.bn(tape, &ids, h, bn4, mode)?;
        let pooled = tape.global_avg_pool(h)?; // [B, c4]
        // Head weights are stored conv-style [5, c4, 1]; use them as a dense map.
        let w2 = tape.reshape(ids[head.w], &[LWNN_CLASSES, self.widths[3]])?;
        let logits = tape.dense(pooled, w2, ids[head.b])?;
        Ok(LwnnForward { logits, param_nodes: ids })
    }

    /// Class probabilities for a batch [B, 2, S] in inference mode.
    pub fn infer_batch_channels(&self, inputs: &Tensor<T>) -> Result<Vec<(ModScheme, [f64; LWNN_CLASSES])>> {
        let batch = inputs.shape()[0];
        let mut tape = Tape::new();
        let x = tape.leaf(inputs.clone(), false);
        // Infer mode never mutates running stats.
        let mut me = self.clone_for_infer();
        let fwd = me.forward(&mut tape, x, Mode::Infer)?;
        let logits = tape.value(fwd.logits);
        let mut out = Vec::with_capacity(batch);
        for r in 0..batch {
            let row = &logits.data()[r * LWNN_CLASSES..(r + 1) * LWNN_CLASSES];
            let probs = probabilities_f64(row);
            let mut arr = [0.0f64; LWNN_CLASSES];
            arr.copy_from_slice(&probs);
            let cls = ModScheme::from_class_index(argmax(&arr)).unwrap();
            out.push((cls, arr));
        }
        self.invocations.set(self.invocations.get() + batch as u64);
        Ok(out)
    }

    // Infer paths need &self; the forward plumbing wants &mut for the train
    // branch. A shallow clone keeps the public API read-only (parameters are
    // small relative to a forward pass).
    fn clone_for_infer(&self) -> Self {
        self.clone()
    }

    /// Number of per-subcarrier classifications performed so far.
    pub fn invocation_count(&self) -> u64 {
        self.invocations.get()
    }

    pub fn reset_invocation_count(&self) {
        self.invocations.set(0);
    }

    /// Cost model matching this build.
    pub fn spec(&self) -> ModelSpec {
        let [c1, c2, c3, c4] = self.widths;
        let inception = |name: &str, c_out: usize| -> SpecNode {
            let q = c_out / 4;
            SpecNode::Parallel {
                name: name.into(),
                branches: vec![
                    vec![
                        SpecNode::layer(&format!("{name}.b1"), LayerSpec::PointwiseConv1d { c_out: q }),
                        SpecNode::layer(&format!("{name}.b1.relu"), LayerSpec::Relu),
                    ],
                    vec![
                        SpecNode::layer(&format!("{name}.b2a"), LayerSpec::PointwiseConv1d { c_out: q }),
                        SpecNode::layer(&format!("{name}.b2a.relu"), LayerSpec::Relu),
                        SpecNode::layer(
                            &format!("{name}.b2b"),
                            LayerSpec::Conv1d { c_out: q, k: 3, stride: 1, padding: Padding::Same },
                        ),
                        SpecNode::layer(&format!("{name}.b2b.relu"), LayerSpec::Relu),
                    ],
                    vec![
                        SpecNode::layer(&format!("{name}.b3a"), LayerSpec::PointwiseConv1d { c_out: q }),
                        SpecNode::layer(&format!("{name}.b3a.relu"), LayerSpec::Relu),
                        SpecNode::layer(
                            &format!("{name}.b3b"),
                            LayerSpec::Conv1d { c_out: q, k: 5, stride: 1, padding: Padding::Same },
                        ),
                        SpecNode::layer(&format!("{name}.b3b.relu"), LayerSpec::Relu),
                    ],
                    vec![
                        SpecNode::layer(
                            &format!("{name}.pool"),
                            LayerSpec::MaxPool1d { k: 3, stride: 1, padding: Padding::Same },
                        ),
                        SpecNode::layer(&format!("{name}.b4"), LayerSpec::PointwiseConv1d { c_out: q }),
                        SpecNode::layer(&format!("{name}.b4.relu"), LayerSpec::Relu),
                    ],
                ],
            }
        };
        let _ = c3;
        ModelSpec {
            nodes: vec![
                SpecNode::layer("dcnn1.dw", LayerSpec::DepthwiseConv1d { k: self.kernels[0], stride: 2, padding: Padding::Same }),
                SpecNode::layer("dcnn1.dw.relu", LayerSpec::Relu),
                SpecNode::layer("dcnn1.pw", LayerSpec::PointwiseConv1d { c_out: c1 }),
                SpecNode::layer("dcnn1.pw.relu", LayerSpec::Relu),
                SpecNode::layer("bn1", LayerSpec::BatchNorm),
                SpecNode::layer("pool1", LayerSpec::MaxPool1d { k: 2, stride: 2, padding: Padding::Valid }),
                inception("inc1", c2),
                SpecNode::layer("bn2", LayerSpec::BatchNorm),
                SpecNode::layer("dcnn2.dw", LayerSpec::DepthwiseConv1d { k: self.kernels[1], stride: 2, padding: Padding::Same }),
                SpecNode::layer("dcnn2.dw.relu", LayerSpec::Relu),
                SpecNode::layer("dcnn2.pw", LayerSpec::PointwiseConv1d { c_out: c2 }),
                SpecNode::layer("dcnn2.pw.relu", LayerSpec::Relu),
                SpecNode::layer("bn3", LayerSpec::BatchNorm),
                inception("inc2", c4),
                SpecNode::layer("bn4", LayerSpec::BatchNorm),
                SpecNode::layer("gap", LayerSpec::GlobalAvgPool),
                SpecNode::layer("head", LayerSpec::Dense { out: LWNN_CLASSES }),
                SpecNode::layer("softmax", LayerSpec::Softmax),
            ],
        }
    }

    /// Input shape for [`crate::nn::count_flops`].
    pub fn input_shape(&self) -> TensorShape {
        TensorShape::ChannelsLength { c: 2, l: self.input_len }
    }

    /// Checkpoint entries: trainable parameters, then batch-norm running
    /// buffers, then build metadata.
    pub fn named_entries(&self) -> Vec<(String, Tensor<T>)> {
        let mut out: Vec<(String, Tensor<T>)> =
            self.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect();
        for (i, stats) in self.running.iter().enumerate() {
            out.push((
                format!("running{}.mean", i + 1),
                Tensor::from_vec(&[stats.mean.len()], stats.mean.clone()).unwrap(),
            ));
            out.push((
                format!("running{}.var", i + 1),
                Tensor::from_vec(&[stats.var.len()], stats.var.clone()).unwrap(),
            ));
        }
        let meta = vec![
            T::of_usize(self.input_len),
            T::of_usize(self.widths[0]),
            T::of_usize(self.widths[1]),
            T::of_usize(self.widths[2]),
            T::of_usize(self.widths[3]),
            T::of_usize(self.kernels[0]),
            T::of_usize(self.kernels[1]),
        ];
        out.push(("meta.build".into(), Tensor::from_vec(&[7], meta).unwrap()));
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::nn::checkpoint::save_checkpoint(&self.named_entries(), path)
    }

    pub fn checkpoint_bytes(&self) -> Result<Vec<u8>> {
        crate::nn::checkpoint::checkpoint_bytes(&self.named_entries())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = crate::nn::checkpoint::load_checkpoint::<T>(path)?;
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<(String, Tensor<T>)>) -> Result<Self> {
        let meta = entries
            .last()
            .filter(|(name, t)| name == "meta.build" && t.numel() == 7)
            .ok_or_else(|| Error::Format("missing meta.build entry".into()))?;
        let vals: Vec<usize> = meta.1.data().iter().map(|v| v.as_f64() as usize).collect();
        let (input_len, widths, kernels) =
            (vals[0], [vals[1], vals[2], vals[3], vals[4]], [vals[5], vals[6]]);
        let mut model = build_lwnn_custom::<T>(input_len, widths, kernels, 0)?;
        let expected: Vec<(String, Vec<usize>)> = model
            .named_entries()
            .iter()
            .map(|(n, t)| (n.clone(), t.shape().to_vec()))
            .collect();
        let tensors = take_entries(entries, &expected)?;
        let n_params = model.params.len();
        for (i, t) in tensors.iter().take(n_params).enumerate() {
            model.params[i].value = t.clone();
        }
        for (i, stats) in model.running.iter_mut().enumerate() {
            stats.mean = tensors[n_params + 2 * i].data().to_vec();
            stats.var = tensors[n_params + 2 * i + 1].data().to_vec();
        }
        Ok(model)
    }
}

/// Classify one subcarrier's equalized symbol sequence.
///
/// The sequence is normalized to unit RMS, stacked into I/Q channels, and run
/// in inference mode. Ties in the probability vector resolve to the lower
/// class index.
pub fn classify_subcarrier<T: Scalar>(
    model: &LwnnModel<T>,
    iq: &[Complex<T>],
) -> Result<(ModScheme, [f64; LWNN_CLASSES])> {
    if iq.len() != model.input_len {
        return Err(Error::Shape(format!(
            "sequence length {} != model input {}",
            iq.len(),
            model.input_len
        )));
    }
    let x = Tensor::from_vec(&[1, 2, model.input_len], iq_to_channels(iq))?;
    Ok(model.infer_batch_channels(&x)?.pop().unwrap())
}

/// Batched version of [`classify_subcarrier`]; one row per sequence.
pub fn classify_subcarriers<T: Scalar>(
    model: &LwnnModel<T>,
    sequences: &[&[Complex<T>]],
) -> Result<Vec<(ModScheme, [f64; LWNN_CLASSES])>> {
    if sequences.is_empty() {
        return Ok(Vec::new());
    }
    let mut data = Vec::with_capacity(sequences.len() * 2 * model.input_len);
    for iq in sequences {
        if iq.len() != model.input_len {
            return Err(Error::Shape(format!(
                "sequence length {} != model input {}",
                iq.len(),
                model.input_len
            )));
        }
        data.extend(iq_to_channels(iq));
    }
    let x = Tensor::from_vec(&[sequences.len(), 2, model.input_len], data)?;
    model.infer_batch_channels(&x)
}
