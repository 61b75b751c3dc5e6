//! Parameter bookkeeping shared by both models.

use crate::error::{Error, Result};
use crate::nn::tape::{NodeId, Tape};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;
use num_complex::Complex;

/// Named trainable tensor.
#[derive(Debug, Clone)]
pub struct Param<T: Scalar> {
    pub name: String,
    pub value: Tensor<T>,
}

/// Register every parameter as a tape leaf, in declaration order.
pub(crate) fn bind_params<T: Scalar>(tape: &mut Tape<T>, params: &[Param<T>], trainable: bool) -> Vec<NodeId> {
    params.iter().map(|p| tape.leaf(p.value.clone(), trainable)).collect()
}

/// Match checkpoint entries against an expected (name, shape) layout.
pub(crate) fn take_entries<T: Scalar>(
    entries: Vec<(String, Tensor<T>)>,
    expected: &[(String, Vec<usize>)],
) -> Result<Vec<Tensor<T>>> {
    if entries.len() != expected.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} entries, model expects {}",
            entries.len(),
            expected.len()
        )));
    }
    let mut out = Vec::with_capacity(expected.len());
    for ((got_name, tensor), (want_name, want_shape)) in entries.into_iter().zip(expected) {
        if &got_name != want_name {
            return Err(Error::Format(format!(
                "checkpoint entry '{got_name}' where '{want_name}' expected"
            )));
        }
        if tensor.shape() != want_shape.as_slice() {
            return Err(Error::Format(format!(
                "checkpoint entry '{got_name}' has shape {:?}, expected {:?}",
                tensor.shape(),
                want_shape
            )));
        }
        out.push(tensor);
    }
    Ok(out)
}

/// Stack an I/Q sequence into classifier input channels (I row then Q row),
/// normalized to unit RMS. All-zero inputs pass through unscaled.
pub fn iq_to_channels<T: Scalar>(iq: &[Complex<T>]) -> Vec<T> {
    let s = iq.len();
    let power: f64 = iq.iter().map(|v| v.norm_sqr().as_f64()).sum::<f64>() / s.max(1) as f64;
    let scale = if power > 0.0 { T::of_f64(power.sqrt().recip()) } else { T::one() };
    let mut out = Vec::with_capacity(2 * s);
    out.extend(iq.iter().map(|v| v.re * scale));
    out.extend(iq.iter().map(|v| v.im * scale));
    out
}

/// Stable argmax with ties toward the lower index.
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0usize;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

/// Softmax of a logit row computed at f64 so the probabilities sum to one at
/// analysis precision.
pub fn probabilities_f64<T: Scalar>(logits: &[T]) -> Vec<f64> {
    let vals: Vec<f64> = logits.iter().map(|v| v.as_f64()).collect();
    let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = vals.iter().map(|v| (v - mx).exp()).collect();
    let denom: f64 = exps.iter().sum();
    exps.iter().map(|e| e / denom).collect()
}
