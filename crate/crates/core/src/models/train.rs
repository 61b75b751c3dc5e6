//! Seeded training loops for both models.
//!
//! Batching is deterministic: the shuffle for epoch `e` comes from the
//! derived stream (seed, e), partial trailing batches are dropped (batch
//! statistics need at least two samples), and every reduction runs in index
//! order, so identical configs produce byte-identical checkpoints.

use crate::error::{Error, Result};
use crate::models::common::argmax;
use crate::models::lwnn::{LwnnModel, Mode, LWNN_CLASSES};
use crate::models::rnnbc::{RnnBcModel, RNNBC_CLASSES};
use crate::nn::adam::{adam_step, AdamState};
use crate::nn::tape::Tape;
use crate::nn::tensor::Tensor;
use crate::qam::ModScheme;
use crate::rng;
use crate::scalar::Scalar;

/// Optimizer and schedule settings.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a validation-accuracy improvement.
    pub patience: Option<usize>,
}

impl TrainConfig {
    /// Per-subcarrier classifier defaults: Adam 1e-3, batch 64.
    pub fn lwnn_defaults(epochs: usize, seed: u64) -> Self {
        Self { lr: 1e-3, batch_size: 64, epochs, seed, patience: None }
    }

    /// Sequence classifier defaults: Adam 1e-5, batch 32.
    pub fn rnnbc_defaults(epochs: usize, seed: u64) -> Self {
        Self { lr: 1e-5, batch_size: 32, epochs, seed, patience: None }
    }

    fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochStats>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,train_acc,val_acc\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                e.epoch, e.train_loss, e.val_loss, e.train_acc, e.val_acc
            ));
        }
        s
    }
}

/// Labeled per-subcarrier sequences, already normalized and stacked into
/// I/Q channel rows of length 2*input_len.
#[derive(Debug, Clone, Default)]
pub struct IqSampleSet<T: Scalar> {
    pub input_len: usize,
    pub inputs: Vec<Vec<T>>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> IqSampleSet<T> {
    pub fn new(input_len: usize) -> Self {
        Self { input_len, inputs: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, channels: Vec<T>, label: usize) {
        debug_assert_eq!(channels.len(), 2 * self.input_len);
        self.inputs.push(channels);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("empty dataset".into()));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= LWNN_CLASSES) {
            return Err(Error::Domain(format!("label {bad} out of range 0..{LWNN_CLASSES}")));
        }
        Ok(())
    }

    fn batch_tensor(&self, idx: &[usize]) -> Tensor<T> {
        let mut data = Vec::with_capacity(idx.len() * 2 * self.input_len);
        for &i in idx {
            data.extend_from_slice(&self.inputs[i]);
        }
        Tensor::from_vec(&[idx.len(), 2, self.input_len], data).expect("batch shape")
    }
}

/// Length-64 scheme sequences from bit loading; even positions are model
/// inputs, odd positions the labels.
#[derive(Debug, Clone, Default)]
pub struct SequenceSet {
    pub sequences: Vec<Vec<ModScheme>>,
}

impl SequenceSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("empty dataset".into()));
        }
        for (i, s) in self.sequences.iter().enumerate() {
            if s.len() != 64 {
                return Err(Error::Shape(format!("sequence {i} has length {}, expected 64", s.len())));
            }
            if s.iter().any(|m| m.class_index().is_none()) {
                return Err(Error::Domain(format!("sequence {i} contains a Null scheme")));
            }
        }
        Ok(())
    }

    fn split(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let seq = &self.sequences[i];
        let evens = seq.iter().step_by(2).map(|s| s.class_index().unwrap()).collect();
        let odds = seq.iter().skip(1).step_by(2).map(|s| s.class_index().unwrap()).collect();
        (evens, odds)
    }
}

fn finite_or_abort(loss: f64, epoch: usize, step: usize) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFiniteLoss { epoch, step, detail: format!("loss = {loss}") })
    }
}

fn batch_accuracy<T: Scalar>(logits: &Tensor<T>, labels: &[usize], classes: usize) -> (usize, usize) {
    let mut correct = 0;
    for (r, &label) in labels.iter().enumerate() {
        if argmax(&logits.data()[r * classes..(r + 1) * classes]) == label {
            correct += 1;
        }
    }
    (correct, labels.len())
}

/// Evaluate loss and accuracy of the classifier on a sample set.
pub fn eval_lwnn<T: Scalar>(model: &LwnnModel<T>, set: &IqSampleSet<T>, batch_size: usize) -> Result<(f64, f64)> {
    set.validate()?;
    let mut model = model.clone();
    let idx: Vec<usize> = (0..set.len()).collect();
    let (mut loss_sum, mut correct, mut total) = (0.0f64, 0usize, 0usize);
    for chunk in idx.chunks(batch_size.max(2)) {
        let x = set.batch_tensor(chunk);
        let labels: Vec<usize> = chunk.iter().map(|&i| set.labels[i]).collect();
        let mut tape = Tape::new();
        let xid = tape.leaf(x, false);
        let fwd = model.forward(&mut tape, xid, Mode::Infer)?;
        let loss = tape.softmax_xent(fwd.logits, &labels)?;
        loss_sum += tape.value(loss).item().as_f64() * labels.len() as f64;
        let (c, t) = batch_accuracy(tape.value(fwd.logits), &labels, LWNN_CLASSES);
        correct += c;
        total += t;
    }
    Ok((loss_sum / total as f64, correct as f64 / total as f64))
}

/// Train the per-subcarrier classifier; returns per-epoch history. The model
/// is left at the best-validation-accuracy checkpoint.
pub fn train_lwnn<T: Scalar>(
    model: &mut LwnnModel<T>,
    train: &IqSampleSet<T>,
    val: &IqSampleSet<T>,
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    train.validate()?;
    val.validate()?;
    if train.input_len != model.input_len || val.input_len != model.input_len {
        return Err(Error::Shape("dataset input length does not match model".into()));
    }
    let shapes = model.param_shapes().into_iter().map(|s| s.to_vec()).collect::<Vec<_>>();
    let shape_refs: Vec<&[usize]> = shapes.iter().map(|s| s.as_slice()).collect();
    let mut adam = AdamState::new(T::of_f64(cfg.lr), &shape_refs);
    let mut history = History::default();
    let mut best: Option<(f64, LwnnModel<T>)> = None;
    let mut stale = 0usize;

    for epoch in 0..cfg.epochs {
        let mut order_rng = rng::derived(cfg.seed, epoch as u64);
        let order = rng::shuffled_indices(&mut order_rng, train.len());
        let (mut loss_sum, mut correct, mut seen) = (0.0f64, 0usize, 0usize);
        for (step, chunk) in order.chunks_exact(cfg.batch_size).enumerate() {
            let x = train.batch_tensor(chunk);
            let labels: Vec<usize> = chunk.iter().map(|&i| train.labels[i]).collect();
            let mut tape = Tape::new();
            let xid = tape.leaf(x, false);
            let fwd = model.forward(&mut tape, xid, Mode::Train)?;
            let loss = tape.softmax_xent(fwd.logits, &labels)?;
            let loss_v = finite_or_abort(tape.value(loss).item().as_f64(), epoch, step)?;
            loss_sum += loss_v * labels.len() as f64;
            let (c, t) = batch_accuracy(tape.value(fwd.logits), &labels, LWNN_CLASSES);
            correct += c;
            seen += t;
            let mut grads = tape.backward(loss)?;
            let grad_list: Vec<Tensor<T>> = fwd
                .param_nodes
                .iter()
                .enumerate()
                .map(|(i, &id)| grads.take(id).unwrap_or_else(|| Tensor::zeros(&shapes[i])))
                .collect();
            let mut values: Vec<Tensor<T>> =
                model.params().iter().map(|p| p.value.clone()).collect();
            adam_step(&mut values, &grad_list, &mut adam)?;
            for (p, v) in model.params_mut().iter_mut().zip(values) {
                p.value = v;
            }
        }
        if seen == 0 {
            return Err(Error::Config(format!(
                "training set smaller than one batch of {}",
                cfg.batch_size
            )));
        }
        let (val_loss, val_acc) = eval_lwnn(model, val, cfg.batch_size.max(64))?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_loss,
            val_acc,
        });
        if best.as_ref().map_or(true, |(acc, _)| val_acc > *acc) {
            best = Some((val_acc, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    if let Some((_, snapshot)) = best {
        *model = snapshot;
    }
    Ok(history)
}

fn rnnbc_batch(set: &SequenceSet, chunk: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut ids = Vec::with_capacity(chunk.len() * 32);
    let mut labels = Vec::with_capacity(chunk.len() * 32);
    for &i in chunk {
        let (evens, odds) = set.split(i);
        ids.extend(evens);
        labels.extend(odds);
    }
    (ids, labels)
}

/// Evaluate per-timestep loss and odd-subcarrier accuracy.
pub fn eval_rnnbc<T: Scalar>(model: &RnnBcModel<T>, set: &SequenceSet, batch_size: usize) -> Result<(f64, f64)> {
    set.validate()?;
    let idx: Vec<usize> = (0..set.len()).collect();
    let (mut loss_sum, mut correct, mut total) = (0.0f64, 0usize, 0usize);
    for chunk in idx.chunks(batch_size.max(1)) {
        let (ids, labels) = rnnbc_batch(set, chunk);
        let mut tape = Tape::new();
        let fwd = model.forward(&mut tape, &ids, chunk.len(), 32, false)?;
        let loss = tape.softmax_xent(fwd.logits, &labels)?;
        loss_sum += tape.value(loss).item().as_f64() * labels.len() as f64;
        let (c, t) = batch_accuracy(tape.value(fwd.logits), &labels, RNNBC_CLASSES);
        correct += c;
        total += t;
    }
    Ok((loss_sum / total as f64, correct as f64 / total as f64))
}

/// Train the sequence classifier on length-64 allocations.
pub fn train_rnnbc<T: Scalar>(
    model: &mut RnnBcModel<T>,
    train: &SequenceSet,
    val: &SequenceSet,
    cfg: &TrainConfig,
) -> Result<History> {
    cfg.validate()?;
    train.validate()?;
    val.validate()?;
    let shapes = model.param_shapes().into_iter().map(|s| s.to_vec()).collect::<Vec<_>>();
    let shape_refs: Vec<&[usize]> = shapes.iter().map(|s| s.as_slice()).collect();
    let mut adam = AdamState::new(T::of_f64(cfg.lr), &shape_refs);
    let mut history = History::default();
    let mut best: Option<(f64, RnnBcModel<T>)> = None;
    let mut stale = 0usize;

    for epoch in 0..cfg.epochs {
        let mut order_rng = rng::derived(cfg.seed, epoch as u64);
        let order = rng::shuffled_indices(&mut order_rng, train.len());
        let (mut loss_sum, mut correct, mut seen) = (0.0f64, 0usize, 0usize);
        for (step, chunk) in order.chunks_exact(cfg.batch_size).enumerate() {
            let (ids, labels) = rnnbc_batch(train, chunk);
            let mut tape = Tape::new();
            let fwd = model.forward(&mut tape, &ids, chunk.len(), 32, true)?;
            let loss = tape.softmax_xent(fwd.logits, &labels)?;
            let loss_v = finite_or_abort(tape.value(loss).item().as_f64(), epoch, step)?;
            loss_sum += loss_v * labels.len() as f64;
            let (c, t) = batch_accuracy(tape.value(fwd.logits), &labels, RNNBC_CLASSES);
            correct += c;
            seen += t;
            let mut grads = tape.backward(loss)?;
            let grad_list: Vec<Tensor<T>> = fwd
                .param_nodes
                .iter()
                .enumerate()
                .map(|(i, &id)| grads.take(id).unwrap_or_else(|| Tensor::zeros(&shapes[i])))
                .collect();
            let mut values: Vec<Tensor<T>> =
                model.params().iter().map(|p| p.value.clone()).collect();
            adam_step(&mut values, &grad_list, &mut adam)?;
            for (p, v) in model.params_mut().iter_mut().zip(values) {
                p.value = v;
            }
        }
        if seen == 0 {
            return Err(Error::Config(format!(
                "training set smaller than one batch of {}",
                cfg.batch_size
            )));
        }
        let (val_loss, val_acc) = eval_rnnbc(model, val, 64)?;
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            val_loss,
            val_acc,
        });
        if best.as_ref().map_or(true, |(acc, _)| val_acc > *acc) {
            best = Some((val_acc, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if cfg.patience.is_some_and(|p| stale >= p) {
                break;
            }
        }
    }
    if let Some((_, snapshot)) = best {
        *model = snapshot;
    }
    Ok(history)
}
