//! Inference-cost comparisons for the two-stage scheme.

use crate::error::Result;
use crate::models::lwnn::LwnnModel;
use crate::models::rnnbc::RnnBcModel;
use crate::nn::flops::count_flops;
use crate::scalar::Scalar;
use std::fmt;

/// Published parameter counts of reference classifiers.
pub const REFERENCE_MODELS: [(&str, u64); 3] =
    [("VGG", 257_000), ("ResNet", 236_000), ("CNN-AMC", 575_000)];

/// Reference per-inference cost charged to the sequence classifier in the
/// parameter-count comparison.
pub const RNNBC_REFERENCE_COST: u64 = 75_520;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub name: String,
    pub params: u64,
    /// Cost of classifying all N subcarriers with the model alone.
    pub alone: u64,
    /// Cost with the model on N/2 subcarriers plus one sequence-model pass.
    pub combined: u64,
}

/// Parameter-count complexity table: alone = N x params,
/// combined = (N/2) x params + rnnbc_cost.
pub fn complexity_table(models: &[(&str, u64)], rnnbc_cost: u64, n: u64) -> Vec<ComplexityRow> {
    models
        .iter()
        .map(|&(name, params)| ComplexityRow {
            name: name.to_string(),
            params,
            alone: n * params,
            combined: (n / 2) * params + rnnbc_cost,
        })
        .collect()
}

/// The built-in reference comparison at N = 64.
pub fn reference_table() -> Vec<ComplexityRow> {
    complexity_table(&REFERENCE_MODELS, RNNBC_REFERENCE_COST, 64)
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut s = String::from("model,params,alone,combined\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.name, r.params, r.alone, r.combined));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub n: u64,
    pub lwnn_flops: u64,
    pub rnnbc_flops: u64,
    pub alone: u64,
    pub combined: u64,
    pub ratio: f64,
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "per-subcarrier network: {} FLOPs/inference", self.lwnn_flops)?;
        writeln!(f, "sequence network:       {} FLOPs/inference", self.rnnbc_flops)?;
        writeln!(f, "alone    ({} runs): {} FLOPs", self.n, self.alone)?;
        writeln!(
            f,
            "combined ({} runs + 1): {} FLOPs",
            self.n / 2,
            self.combined
        )?;
        write!(f, "combined/alone ratio: {:.4}", self.ratio)
    }
}

/// Measure both networks with the FLOPs counter and compare N runs of the
/// per-subcarrier model against N/2 runs plus one sequence pass.
pub fn flops_reduction_report<T: Scalar>(
    lwnn: &LwnnModel<T>,
    rnnbc: &RnnBcModel<T>,
    n: u64,
) -> Result<ReductionReport> {
    let lwnn_flops = count_flops(&lwnn.spec(), lwnn.input_shape())?.total;
    let rnnbc_flops = count_flops(&rnnbc.spec(), rnnbc.input_shape(n as usize / 2))?.total;
    let alone = n * lwnn_flops;
    let combined = (n / 2) * lwnn_flops + rnnbc_flops;
    Ok(ReductionReport {
        n,
        lwnn_flops,
        rnnbc_flops,
        alone,
        combined,
        ratio: combined as f64 / alone as f64,
    })
}
