//! Minimal deterministic tensor/autograd engine.
//!
//! Eager define-by-run tape with reverse-mode accumulation: every operation
//! runs immediately and records what backward needs. No fusion, no graph
//! compiler; kernels are plain loops the optimizer can vectorize. All
//! reductions run in a fixed order, so results are bit-reproducible for a
//! given seed and call sequence.

pub mod adam;
pub mod checkpoint;
pub mod flops;
pub mod gradcheck;
pub mod gru;
pub mod init;
pub mod tape;
pub mod tensor;

pub use adam::{adam_step, AdamState};
pub use flops::{count_flops, FlopsReport, LayerSpec, ModelSpec, SpecNode, TensorShape};
pub use tape::{NodeId, Padding, Tape};
pub use tensor::Tensor;
