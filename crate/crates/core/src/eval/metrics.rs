//! Classification metrics: PCC and per-SNR-bin confusion matrices.

use crate::error::{Error, Result};
use crate::qam::{ModScheme, DATA_SCHEMES};

pub const N_CLASSES: usize = 5;

/// Named SNR bins: four reporting ranges plus an overflow bin for anything
/// outside them (the generator runs up to 25 dB).
pub const SNR_BIN_LABELS: [&str; 5] = ["5-8dB", "8-12dB", "12-16dB", "16-20dB", "overflow"];

/// Bin index for a subcarrier SNR.
pub fn snr_bin(snr_db: f64) -> usize {
    match snr_db {
        s if (5.0..8.0).contains(&s) => 0,
        s if (8.0..12.0).contains(&s) => 1,
        s if (12.0..16.0).contains(&s) => 2,
        s if (16.0..20.0).contains(&s) => 3,
        _ => 4,
    }
}

/// Probability of correct classification: fraction of matching positions.
pub fn pcc(pred: &[ModScheme], truth: &[ModScheme]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!("pcc: {} predictions vs {} truths", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::Shape("pcc of empty vectors".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Rows are truth, columns prediction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ModScheme, pred: ModScheme) -> Result<()> {
        let (t, p) = (
            truth.class_index().ok_or_else(|| Error::Domain("Null truth label".into()))?,
            pred.class_index().ok_or_else(|| Error::Domain("Null prediction".into()))?,
        );
        self.counts[t][p] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..N_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    pub fn pcc(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.correct() as f64 / total as f64
    }

    /// Rows scaled to sum to one (zero rows stay zero).
    pub fn row_normalized(&self) -> [[f64; N_CLASSES]; N_CLASSES] {
        let mut out = [[0.0; N_CLASSES]; N_CLASSES];
        for (i, row) in self.counts.iter().enumerate() {
            let sum: u64 = row.iter().sum();
            if sum > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = c as f64 / sum as f64;
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("truth\\pred");
        for scheme in DATA_SCHEMES {
            s.push_str(&format!(",{}", scheme.name()));
        }
        s.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            s.push_str(DATA_SCHEMES[i].name());
            for &c in row {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// One confusion matrix per SNR bin.
pub fn confusion_by_snr(
    preds: &[ModScheme],
    truths: &[ModScheme],
    snrs_db: &[f64],
) -> Result<[ConfusionMatrix; 5]> {
    if preds.len() != truths.len() || preds.len() != snrs_db.len() {
        return Err(Error::Shape("confusion_by_snr: input lengths differ".into()));
    }
    let mut bins: [ConfusionMatrix; 5] = Default::default();
    for ((&p, &t), &s) in preds.iter().zip(truths).zip(snrs_db) {
        bins[snr_bin(s)].record(t, p)?;
    }
    Ok(bins)
}

/// PCC per SNR bin: (label, pcc, sample count).
pub fn pcc_by_snr(
    preds: &[ModScheme],
    truths: &[ModScheme],
    snrs_db: &[f64],
) -> Result<Vec<(String, f64, u64)>> {
    let bins = confusion_by_snr(preds, truths, snrs_db)?;
    Ok(bins
        .iter()
        .zip(SNR_BIN_LABELS)
        .map(|(m, label)| (label.to_string(), m.pcc(), m.total()))
        .collect())
}

pub fn pcc_by_snr_csv(rows: &[(String, f64, u64)]) -> String {
    let mut s = String::from("snr_bin,pcc,samples\n");
    for (label, p, n) in rows {
        s.push_str(&format!("{label},{p:.6},{n}\n"));
    }
    s
}
