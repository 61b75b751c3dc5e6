//! The two-stage combined classifier: one network on the even subcarriers,
//! the sequence model inferring the odd ones.

use crate::error::{Error, Result};
use crate::eval::dataset::Capture;
use crate::models::lwnn::{classify_subcarriers, LwnnModel};
use crate::models::rnnbc::{predict_odd, RnnBcModel};
use crate::qam::ModScheme;
use num_complex::Complex;

/// Anything that can label a batch of per-subcarrier sequences.
pub trait EvenClassifier {
    fn classify_batch(&self, sequences: &[&[Complex<f32>]]) -> Result<Vec<ModScheme>>;
}

impl EvenClassifier for LwnnModel<f32> {
    fn classify_batch(&self, sequences: &[&[Complex<f32>]]) -> Result<Vec<ModScheme>> {
        Ok(classify_subcarriers(self, sequences)?.into_iter().map(|(s, _)| s).collect())
    }
}

/// Anything that can predict the odd-subcarrier schemes from the even ones.
pub trait OddPredictor {
    fn predict(&self, evens: &[ModScheme]) -> Result<Vec<ModScheme>>;
}

impl OddPredictor for RnnBcModel<f32> {
    fn predict(&self, evens: &[ModScheme]) -> Result<Vec<ModScheme>> {
        predict_odd(self, evens)
    }
}

/// Outcome of one combined pass over a capture.
#[derive(Debug, Clone)]
pub struct CombinedResult {
    /// Scheme per subcarrier, all N covered exactly once.
    pub schemes: Vec<ModScheme>,
    /// Per-subcarrier classifications performed (always N/2).
    pub even_invocations: usize,
    /// Sequence-model passes performed (always 1).
    pub odd_invocations: usize,
}

/// Classify the even subcarriers with `even`, infer the odd ones with `odd`,
/// and interleave.
pub fn combined_classify<E: EvenClassifier, O: OddPredictor>(
    even: &E,
    odd: &O,
    capture: &Capture,
) -> Result<CombinedResult> {
    let n = capture.n_subcarriers;
    if n % 2 != 0 {
        return Err(Error::Shape(format!("subcarrier count {n} must be even")));
    }
    let even_seqs: Vec<&[Complex<f32>]> = (0..n / 2).map(|t| capture.subcarrier(2 * t)).collect();
    let even_schemes = even.classify_batch(&even_seqs)?;
    if even_schemes.len() != n / 2 {
        return Err(Error::Shape("even classifier returned wrong count".into()));
    }
    let odd_schemes = odd.predict(&even_schemes)?;
    if odd_schemes.len() != n / 2 {
        return Err(Error::Shape("odd predictor returned wrong count".into()));
    }
    let mut schemes = vec![ModScheme::Null; n];
    for t in 0..n / 2 {
        schemes[2 * t] = even_schemes[t];
        schemes[2 * t + 1] = odd_schemes[t];
    }
    Ok(CombinedResult { schemes, even_invocations: n / 2, odd_invocations: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::dataset::{generate_capture, DatasetConfig};

    /// Truth-reading stand-ins for structural tests.
    struct OracleEven<'a>(&'a Capture);
    impl EvenClassifier for OracleEven<'_> {
        fn classify_batch(&self, sequences: &[&[Complex<f32>]]) -> Result<Vec<ModScheme>> {
            Ok((0..sequences.len()).map(|t| self.0.schemes[2 * t]).collect())
        }
    }

    struct OracleOdd<'a>(&'a Capture);
    impl OddPredictor for OracleOdd<'_> {
        fn predict(&self, evens: &[ModScheme]) -> Result<Vec<ModScheme>> {
            Ok((0..evens.len()).map(|t| self.0.schemes[2 * t + 1]).collect())
        }
    }

    #[test]
    fn oracle_standins_reproduce_truth_exactly() {
        let cfg = DatasetConfig::with_symbols(8);
        let cap = generate_capture(&cfg, 1, 0).unwrap();
        let out = combined_classify(&OracleEven(&cap), &OracleOdd(&cap), &cap).unwrap();
        assert_eq!(out.schemes, cap.schemes);
        assert_eq!(out.even_invocations, 32);
        assert_eq!(out.odd_invocations, 1);
    }

    #[test]
    fn interleaving_covers_every_subcarrier_once() {
        let cfg = DatasetConfig::with_symbols(8);
        let cap = generate_capture(&cfg, 2, 1).unwrap();
        let out = combined_classify(&OracleEven(&cap), &OracleOdd(&cap), &cap).unwrap();
        assert_eq!(out.schemes.len(), 64);
        assert!(out.schemes.iter().all(|s| *s != ModScheme::Null));
    }
}
