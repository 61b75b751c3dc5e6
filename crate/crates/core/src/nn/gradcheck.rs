//! Central finite-difference gradient verification.
//!
//! Rebuilds the graph at perturbed inputs, so it is independent of the
//! backward implementation it checks. Meant to run at f64.

use crate::error::Result;
use crate::nn::tape::{NodeId, Tape};
use crate::nn::tensor::Tensor;

/// Worst observed relative error and where it occurred.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_input: usize,
    pub worst_element: usize,
    pub checked: usize,
}

/// Compare analytic gradients of a scalar-valued graph against central
/// differences with step `h` for every element of every input.
///
/// Relative error uses a 1e-3 floor so elements with near-zero gradients are
/// judged on an absolute scale that finite differences can actually resolve.
pub fn check_gradients<F>(build: F, inputs: &[Tensor<f64>], h: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[NodeId]) -> Result<NodeId>,
{
    let eval = |tensors: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| tape.leaf(t.clone(), true)).collect();
        let out = build(&mut tape, &ids)?;
        Ok(tape.value(out).item())
    };

    // Analytic pass.
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let out = build(&mut tape, &ids)?;
    let mut grads = tape.backward(out)?;
    let analytic: Vec<Tensor<f64>> = ids
        .iter()
        .map(|&id| grads.take(id).unwrap_or_else(|| Tensor::zeros(tape.value(id).shape())))
        .collect();

    let mut report = GradCheckReport { max_rel_err: 0.0, worst_input: 0, worst_element: 0, checked: 0 };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (ti, tensor) in inputs.iter().enumerate() {
        for ei in 0..tensor.numel() {
            let orig = tensor.data()[ei];
            work[ti].data_mut()[ei] = orig + h;
            let f_plus = eval(&work)?;
            work[ti].data_mut()[ei] = orig - h;
            let f_minus = eval(&work)?;
            work[ti].data_mut()[ei] = orig;
            let numeric = (f_plus - f_minus) / (2.0 * h);
            let a = analytic[ti].data()[ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            report.checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_input = ti;
                report.worst_element = ei;
            }
        }
    }
    Ok(report)
}
