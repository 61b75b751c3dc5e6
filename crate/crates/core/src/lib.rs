//! OFDM automatic modulation classification toolkit.
//!
//! This crate simulates bit-loaded OFDM transmission over impaired channels
//! (Rayleigh multipath, AWGN, carrier frequency offset), assigns per-subcarrier
//! QAM orders from channel quality, and classifies those orders with two
//! cooperating neural networks: a lightweight CNN applied per subcarrier and a
//! bidirectional-GRU sequence model that infers the remaining subcarriers from
//! the CNN's results, roughly halving inference cost.
//!
//! The numeric core is generic over the scalar type (`f32` / `f64`) via
//! [`scalar::Scalar`]; concrete aliases live at the crate root.

pub mod bitload;
pub mod channel;
pub mod error;
pub mod eval;
pub mod models;
pub mod nn;
pub mod ofdm;
pub mod qam;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

use num_complex::Complex;

/// Default training/inference scalar type.
pub type Real = f32;
/// Complex sample at default precision.
pub type C32 = Complex<f32>;
/// Complex sample at analysis precision.
pub type C64 = Complex<f64>;
/// Tensor at default training precision.
pub type Tensor32 = nn::Tensor<f32>;
/// Tensor at gradient-check precision.
pub type Tensor64 = nn::Tensor<f64>;
