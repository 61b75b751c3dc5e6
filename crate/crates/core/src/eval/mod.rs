//! Dataset generation, combined classification, metrics, and complexity
//! reporting.

pub mod classify;
pub mod complexity;
pub mod dataset;
pub mod metrics;

pub use classify::{combined_classify, CombinedResult, EvenClassifier, OddPredictor};
pub use complexity::{
    complexity_csv, complexity_table, flops_reduction_report, reference_table, ComplexityRow,
    ReductionReport, REFERENCE_MODELS, RNNBC_REFERENCE_COST,
};
pub use dataset::{
    capture_to_samples, for_each_capture, generate_allocation, generate_capture, generate_dataset,
    load_captures, load_sequences, read_manifest, verify_dataset, Capture, DatasetConfig,
    DatasetManifest, SplitTag,
};
pub use metrics::{confusion_by_snr, pcc, pcc_by_snr, pcc_by_snr_csv, snr_bin, ConfusionMatrix};
