//! Seeded weight initialization.

use crate::nn::tensor::Tensor;
use crate::rng::{self, ChaCha8Rng};
use crate::scalar::Scalar;
use rand::Rng;

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform<T: Scalar>(rng: &mut ChaCha8Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| T::of_f64(rng.gen_range(-limit..limit))).collect();
    Tensor::from_vec(shape, data).expect("glorot shape")
}

/// Square orthogonal matrix [n, n] via modified Gram-Schmidt on a Gaussian
/// draw.
pub fn orthogonal_square<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Tensor<T> {
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng::standard_normal(rng)).collect())
        .collect();
    for i in 0..n {
        for j in 0..i {
            let proj: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            for k in 0..n {
                rows[i][k] -= proj * rows[j][k];
            }
        }
        let norm: f64 = rows[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        // A fresh Gaussian draw is almost surely full-rank; guard anyway.
        let inv = if norm > 1e-12 { norm.recip() } else { 1.0 };
        for v in &mut rows[i] {
            *v *= inv;
        }
    }
    let data = rows.into_iter().flatten().map(T::of_f64).collect();
    Tensor::from_vec(&[n, n], data).expect("orthogonal shape")
}

/// Stack of `gates` orthogonal [n, n] blocks: [gates * n, n]. Used for GRU
/// recurrent weights.
pub fn orthogonal_stacked<T: Scalar>(rng: &mut ChaCha8Rng, gates: usize, n: usize) -> Tensor<T> {
    let mut data = Vec::with_capacity(gates * n * n);
    for _ in 0..gates {
        data.extend_from_slice(orthogonal_square::<T>(rng, n).data());
    }
    Tensor::from_vec(&[gates * n, n], data).expect("stacked shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glorot_within_limit() {
        let mut r = rng::seeded(1);
        let t: Tensor<f64> = glorot_uniform(&mut r, &[10, 20], 20, 10);
        let limit = (6.0f64 / 30.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= limit));
    }

    #[test]
    fn orthogonal_has_orthonormal_rows() {
        let mut r = rng::seeded(2);
        let n = 16;
        let t: Tensor<f64> = orthogonal_square(&mut r, n);
        for i in 0..n {
            for j in 0..n {
                let d: f64 = (0..n).map(|k| t.data()[i * n + k] * t.data()[j * n + k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-10, "({i},{j}): {d}");
            }
        }
    }
}
