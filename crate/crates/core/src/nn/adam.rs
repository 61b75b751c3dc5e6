//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    /// Step counter, incremented once per `adam_step` call.
    pub t: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state with the standard (0.9, 0.999, 1e-8) moments for the given
    /// parameter shapes.
    pub fn new(lr: T, shapes: &[&[usize]]) -> Self {
        Self {
            lr,
            beta1: T::of_f64(0.9),
            beta2: T::of_f64(0.999),
            eps: T::of_f64(1e-8),
            t: 0,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
        }
    }
}

/// One bias-corrected update: p -= lr * m_hat / (sqrt(v_hat) + eps).
pub fn adam_step<T: Scalar>(params: &mut [Tensor<T>], grads: &[Tensor<T>], state: &mut AdamState<T>) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for ((p, g), (m, v)) in params.iter().zip(grads).zip(state.m.iter().zip(&state.v)) {
        if p.shape() != g.shape() || p.shape() != m.shape() || p.shape() != v.shape() {
            return Err(Error::Shape(format!(
                "adam: param {:?} vs grad {:?} vs moments {:?}",
                p.shape(),
                g.shape(),
                m.shape()
            )));
        }
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let corr1 = T::one() - b1.powi(state.t as i32);
    let corr2 = T::one() - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let pv = params[i].data_mut();
        let gv = grads[i].data();
        let mv = state.m[i].data_mut();
        let vv = state.v[i].data_mut();
        for j in 0..pv.len() {
            let g = gv[j];
            mv[j] = b1 * mv[j] + (T::one() - b1) * g;
            vv[j] = b2 * vv[j] + (T::one() - b2) * g * g;
            let m_hat = mv[j] / corr1;
            let v_hat = vv[j] / corr2;
            pv[j] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_matches_hand_update() {
        // g=1, lr=1e-3: m_hat = v_hat = 1, delta = -1e-3 / (1 + 1e-8).
        let mut params = vec![Tensor::from_vec(&[1], vec![0.5f64]).unwrap()];
        let grads = vec![Tensor::from_vec(&[1], vec![1.0f64]).unwrap()];
        let mut state = AdamState::new(1e-3, &[&[1]]);
        adam_step(&mut params, &grads, &mut state).unwrap();
        let delta = params[0].data()[0] - 0.5;
        assert!((delta + 9.99999990e-4).abs() < 1e-12, "delta {delta}");
        assert_eq!(state.t, 1);
    }

    #[test]
    fn zero_grad_with_zero_moments_is_noop() {
        let mut params = vec![Tensor::from_vec(&[2], vec![1.0f64, -2.0]).unwrap()];
        let grads = vec![Tensor::zeros(&[2])];
        let mut state = AdamState::new(1e-3, &[&[2]]);
        for _ in 0..5 {
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        assert_eq!(params[0].data(), &[1.0, -2.0]);
    }

    #[test]
    fn identical_lanes_stay_identical() {
        let mut params = vec![Tensor::from_vec(&[2], vec![0.3f32, 0.3]).unwrap()];
        let mut state = AdamState::new(1e-2, &[&[2]]);
        for step in 0..50 {
            let g = (step as f32 * 0.37).sin();
            let grads = vec![Tensor::from_vec(&[2], vec![g, g]).unwrap()];
            adam_step(&mut params, &grads, &mut state).unwrap();
            assert_eq!(params[0].data()[0].to_bits(), params[0].data()[1].to_bits());
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut params = vec![Tensor::<f32>::zeros(&[2])];
        let grads = vec![Tensor::<f32>::zeros(&[3])];
        let mut state = AdamState::new(1e-3, &[&[2]]);
        assert!(adam_step(&mut params, &grads, &mut state).is_err());
    }
}
