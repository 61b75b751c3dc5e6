//! Adaptive bit and power loading.
//!
//! A Hughes-Hartogs-style greedy under the SNR-gap model: the power to carry
//! `b` bits on a subcarrier with linear SNR `g` is `gap * (2^b - 1) / g`, and
//! bits are granted one at a time to whichever subcarrier currently charges
//! the least for its next bit. The resulting per-subcarrier orders follow the
//! channel's frequency response, which is exactly the adjacent-subcarrier
//! correlation the sequence classifier later exploits.

use crate::error::{Error, Result};
use crate::qam::ModScheme;

/// Bit/power assignment for one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Scheme per subcarrier. Subcarriers granted fewer than 2 bits map to
    /// `Null` in strict mode; dataset mode never produces `Null`.
    pub schemes: Vec<ModScheme>,
    /// Linear power spent per subcarrier.
    pub powers: Vec<f64>,
    /// Granted bit count per subcarrier.
    pub bits: Vec<usize>,
    /// Sum of bits carried by the final schemes.
    pub total_bits: usize,
}

/// How sub-QAM4 grants are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocMode {
    /// Respect the budget; subcarriers that end below 2 bits carry nothing
    /// (their partial grant is refunded).
    Strict,
    /// Clamp every subcarrier up to at least QAM4, adding the power that
    /// requires; the budget is advisory. Keeps the label space closed over
    /// the five classifier classes.
    Dataset,
}

/// Extra power to move a subcarrier from `bits - 1` to `bits` carried bits.
pub fn incremental_power(bits: usize, snr_linear: f64, gap: f64) -> Result<f64> {
    if !(1..=6).contains(&bits) {
        return Err(Error::Domain(format!("bits must be in 1..=6, got {bits}")));
    }
    if snr_linear <= 0.0 {
        return Err(Error::Domain(format!("snr must be positive, got {snr_linear}")));
    }
    if gap < 1.0 {
        return Err(Error::Domain(format!("gap must be >= 1, got {gap}")));
    }
    let p = |b: u32| gap * ((2f64.powi(b as i32)) - 1.0) / snr_linear;
    Ok(p(bits as u32) - p(bits as u32 - 1))
}

/// Greedy bit/power allocation over per-subcarrier linear SNRs.
///
/// Ties on incremental cost break toward the lowest subcarrier index.
pub fn greedy_allocate(
    snrs_linear: &[f64],
    power_budget: f64,
    gap: f64,
    max_bits: usize,
    mode: AllocMode,
) -> Result<Allocation> {
    if snrs_linear.is_empty() {
        return Err(Error::Shape("empty SNR vector".into()));
    }
    if snrs_linear.iter().any(|&s| s <= 0.0) {
        return Err(Error::Domain("all SNRs must be positive".into()));
    }
    if power_budget <= 0.0 {
        return Err(Error::Domain("power budget must be positive".into()));
    }
    let max_bits = max_bits.min(6);
    let n = snrs_linear.len();
    let mut bits = vec![0usize; n];
    let mut powers = vec![0.0f64; n];
    let mut remaining = power_budget;

    loop {
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            if bits[k] >= max_bits {
                continue;
            }
            let cost = incremental_power(bits[k] + 1, snrs_linear[k], gap)?;
            if best.map_or(true, |(_, c)| cost < c) {
                best = Some((k, cost));
            }
        }
        match best {
            Some((k, cost)) if cost <= remaining => {
                bits[k] += 1;
                powers[k] += cost;
                remaining -= cost;
            }
            _ => break,
        }
    }

    if mode == AllocMode::Dataset {
        for k in 0..n {
            while bits[k] < 2 {
                bits[k] += 1;
                powers[k] += incremental_power(bits[k], snrs_linear[k], gap)?;
            }
        }
    }

    let schemes: Vec<ModScheme> = bits
        .iter()
        .map(|&b| ModScheme::from_bits(b).unwrap_or(ModScheme::Null))
        .collect();
    let total_bits = schemes.iter().map(|s| s.bits_per_symbol()).sum();
    Ok(Allocation { schemes, powers, bits, total_bits })
}

/// SNR gap for an uncoded-QAM target symbol error rate:
/// gap = (1/3) (Qinv(ser/4))^2.
pub fn gap_for_ser(target_ser: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&target_ser) || target_ser <= 0.0 {
        return Err(Error::Domain(format!("target SER must be in (0, 0.5), got {target_ser}")));
    }
    let x = -inverse_normal_cdf(target_ser / 4.0);
    Ok(x * x / 3.0)
}

/// Inverse standard-normal CDF (Acklam's rational approximation,
/// relative error < 1.2e-9 across the domain).
fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}
