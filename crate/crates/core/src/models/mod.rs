//! Model assemblies: the per-subcarrier CNN classifier, the even-to-odd
//! sequence classifier, and their training loops.

pub mod common;
pub mod lwnn;
pub mod rnnbc;
pub mod train;

pub use common::{iq_to_channels, Param};
pub use lwnn::{
    build_lwnn, build_lwnn_custom, build_lwnn_with_widths, classify_subcarrier,
    classify_subcarriers, LwnnModel, LWNN_CLASSES, LWNN_DEFAULT_KERNELS, LWNN_DEFAULT_WIDTHS,
};
pub use rnnbc::{build_rnnbc, predict_odd, RnnBcModel};
pub use train::{
    eval_lwnn, eval_rnnbc, train_lwnn, train_rnnbc, History, IqSampleSet, SequenceSet, TrainConfig,
};
