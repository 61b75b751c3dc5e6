//! OFDM frame arithmetic: synthesis, cyclic prefix, analysis.
//!
//! Synthesis is the unnormalized sum x_m(n) = sum_k X_m(k) e^{j2pi kn/N}; the
//! 1/N factor sits entirely on the analysis side so the pair is exactly
//! inverse. The cyclic prefix is a plain copy of the last `cp_len` body
//! samples.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Frame geometry for a capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Subcarrier count N (power of two).
    pub n_subcarriers: usize,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
    /// OFDM symbols per capture.
    pub n_symbols: usize,
    /// Nominal bandwidth in Hz (bookkeeping only; frame math is index-based).
    pub bandwidth_hz: f64,
}

impl OfdmConfig {
    pub fn new(n_subcarriers: usize, cp_len: usize, n_symbols: usize, bandwidth_hz: f64) -> Result<Self> {
        if !n_subcarriers.is_power_of_two() || n_subcarriers < 2 {
            return Err(Error::Config(format!(
                "n_subcarriers must be a power of two >= 2, got {n_subcarriers}"
            )));
        }
        if cp_len >= n_subcarriers {
            return Err(Error::Config(format!(
                "cp_len {cp_len} must be < n_subcarriers {n_subcarriers}"
            )));
        }
        if n_symbols == 0 {
            return Err(Error::Config("n_symbols must be positive".into()));
        }
        Ok(Self { n_subcarriers, cp_len, n_symbols, bandwidth_hz })
    }

    /// 64 subcarriers, 16-sample CP, 20 MHz: the system all defaults target.
    pub fn default_64(n_symbols: usize) -> Self {
        Self::new(64, 16, n_symbols, 20e6).expect("valid default")
    }

    /// Samples per OFDM symbol including CP.
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// Samples in a whole capture.
    pub fn capture_len(&self) -> usize {
        self.n_symbols * self.symbol_len()
    }
}

/// Frequency-domain frame: entry (m, k) is symbol m's load on subcarrier k.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqFrame<T: Scalar> {
    pub n_symbols: usize,
    pub n_subcarriers: usize,
    /// Row-major [n_symbols x n_subcarriers].
    pub data: Vec<Complex<T>>,
}

impl<T: Scalar> FreqFrame<T> {
    pub fn zeros(n_symbols: usize, n_subcarriers: usize) -> Self {
        Self {
            n_symbols,
            n_subcarriers,
            data: vec![Complex::new(T::zero(), T::zero()); n_symbols * n_subcarriers],
        }
    }

    pub fn symbol(&self, m: usize) -> &[Complex<T>] {
        &self.data[m * self.n_subcarriers..(m + 1) * self.n_subcarriers]
    }

    pub fn symbol_mut(&mut self, m: usize) -> &mut [Complex<T>] {
        &mut self.data[m * self.n_subcarriers..(m + 1) * self.n_subcarriers]
    }

    fn check(&self, cfg: &OfdmConfig) -> Result<()> {
        if self.n_symbols != cfg.n_symbols || self.n_subcarriers != cfg.n_subcarriers {
            return Err(Error::Shape(format!(
                "frame is {}x{}, config expects {}x{}",
                self.n_symbols, self.n_subcarriers, cfg.n_symbols, cfg.n_subcarriers
            )));
        }
        Ok(())
    }
}

/// Baseband time-domain sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal<T: Scalar> {
    pub samples: Vec<Complex<T>>,
}

impl<T: Scalar> TimeSignal<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean power per complex sample.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr().as_f64()).sum::<f64>() / self.len() as f64
    }
}

/// In-place radix-2 DIT transform. `sign` = +1 gives the unnormalized
/// synthesis kernel e^{+j2pi kn/N}, -1 the analysis kernel (caller scales).
fn fft_radix2<T: Scalar>(buf: &mut [Complex<T>], sign: f64) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let wlen = Complex::new(T::of_f64(ang.cos()), T::of_f64(ang.sin()));
        let mut i = 0;
        while i < n {
            let mut w = Complex::new(T::one(), T::zero());
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w = w * wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Synthesize the time-domain capture: per symbol, the unnormalized inverse
/// transform of its subcarrier loads with the last `cp_len` samples copied in
/// front as cyclic prefix. Symbols are concatenated in order.
pub fn ofdm_modulate<T: Scalar>(frame: &FreqFrame<T>, cfg: &OfdmConfig) -> Result<TimeSignal<T>> {
    frame.check(cfg)?;
    let n = cfg.n_subcarriers;
    let mut samples = Vec::with_capacity(cfg.capture_len());
    let mut body = vec![Complex::new(T::zero(), T::zero()); n];
    for m in 0..cfg.n_symbols {
        body.copy_from_slice(frame.symbol(m));
        fft_radix2(&mut body, 1.0);
        samples.extend_from_slice(&body[n - cfg.cp_len..]);
        samples.extend_from_slice(&body);
    }
    Ok(TimeSignal { samples })
}

/// Strip each symbol's cyclic prefix and apply the 1/N analysis transform,
/// recovering the frequency frame exactly for an unimpaired signal.
pub fn ofdm_demodulate<T: Scalar>(sig: &TimeSignal<T>, cfg: &OfdmConfig) -> Result<FreqFrame<T>> {
    if sig.len() != cfg.capture_len() {
        return Err(Error::Shape(format!(
            "signal length {} != {} symbols x {} samples",
            sig.len(),
            cfg.n_symbols,
            cfg.symbol_len()
        )));
    }
    let n = cfg.n_subcarriers;
    let inv_n = T::of_usize(n).recip();
    let mut frame = FreqFrame::zeros(cfg.n_symbols, n);
    let mut body = vec![Complex::new(T::zero(), T::zero()); n];
    for m in 0..cfg.n_symbols {
        let start = m * cfg.symbol_len() + cfg.cp_len;
        body.copy_from_slice(&sig.samples[start..start + n]);
        fft_radix2(&mut body, -1.0);
        for (dst, &src) in frame.symbol_mut(m).iter_mut().zip(body.iter()) {
            *dst = src * inv_n;
        }
    }
    Ok(frame)
}

/// Column `k` of the frame: the symbol sequence one subcarrier carries. This
/// is the raw complex input of the per-subcarrier classifier.
pub fn extract_subcarrier<T: Scalar>(frame: &FreqFrame<T>, k: usize) -> Result<Vec<Complex<T>>> {
    if k >= frame.n_subcarriers {
        return Err(Error::Shape(format!(
            "subcarrier {k} out of range 0..{}",
            frame.n_subcarriers
        )));
    }
    Ok((0..frame.n_symbols).map(|m| frame.symbol(m)[k]).collect())
}
