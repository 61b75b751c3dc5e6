//! Multipath fading channel, additive noise, CFO/timing impairments,
//! per-subcarrier SNR, and genie zero-forcing equalization.

use crate::error::{Error, Result};
use crate::ofdm::{FreqFrame, OfdmConfig, TimeSignal};
use crate::rng::{self, ChaCha8Rng};
use crate::scalar::Scalar;
use num_complex::Complex;
use rand::Rng;

/// One multipath draw: sparse taps plus the derived frequency response.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Tap delays in samples, ascending, delay 0 first.
    pub delays: Vec<usize>,
    /// Complex gain per tap, aligned with `delays`.
    pub gains: Vec<Complex<f64>>,
    /// H(k): N-point DFT of the zero-padded impulse response.
    pub freq_response: Vec<Complex<f64>>,
}

impl ChannelRealization {
    /// Build from explicit taps; gains are used as given (not renormalized).
    pub fn from_taps(delays: &[usize], gains: &[Complex<f64>], n_subcarriers: usize) -> Result<Self> {
        if delays.len() != gains.len() || delays.is_empty() {
            return Err(Error::Shape("delays and gains must be equal-length, non-empty".into()));
        }
        let freq_response = dft_of_taps(delays, gains, n_subcarriers);
        Ok(Self { delays: delays.to_vec(), gains: gains.to_vec(), freq_response })
    }

    /// Total tap energy (1.0 for sampled channels).
    pub fn tap_energy(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn max_delay(&self) -> usize {
        *self.delays.last().unwrap_or(&0)
    }
}

fn dft_of_taps(delays: &[usize], gains: &[Complex<f64>], n: usize) -> Vec<Complex<f64>> {
    (0..n)
        .map(|k| {
            delays
                .iter()
                .zip(gains)
                .map(|(&d, g)| {
                    let ang = -std::f64::consts::TAU * (k * d) as f64 / n as f64;
                    g * Complex::from_polar(1.0, ang)
                })
                .sum()
        })
        .collect()
}

/// Receiver-side impairments of one capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentConfig {
    /// Normalized CFO epsilon, cycles per N samples.
    pub cfo_normalized: f64,
    /// Timing offset phi in samples (applied as a delay).
    pub timing_offset: usize,
    /// Noise variance per complex time-domain sample.
    pub noise_psd: f64,
}

impl ImpairmentConfig {
    pub fn new(cfo_normalized: f64, timing_offset: usize, noise_psd: f64, cfg: &OfdmConfig) -> Result<Self> {
        if !(cfo_normalized.abs() < 0.5) {
            return Err(Error::Config(format!("|cfo| must be < 0.5, got {cfo_normalized}")));
        }
        if timing_offset >= cfg.cp_len {
            return Err(Error::Config(format!(
                "timing offset {timing_offset} must be < cp_len {}",
                cfg.cp_len
            )));
        }
        if noise_psd < 0.0 {
            return Err(Error::Config("noise_psd must be non-negative".into()));
        }
        Ok(Self { cfo_normalized, timing_offset, noise_psd })
    }

    pub fn clean() -> Self {
        Self { cfo_normalized: 0.0, timing_offset: 0, noise_psd: 0.0 }
    }
}

/// Unnormalized tap draw: delays (0 always included, all < cp_len, distinct)
/// and circular complex Gaussian gains with the exponential power profile
/// exp(-d / (cp_len/4)).
///
/// Split out from [`sample_channel`] so the Gaussian model itself is
/// observable; the public sampler normalizes total tap energy to one.
pub fn sample_taps_raw(
    rng: &mut ChaCha8Rng,
    cfg: &OfdmConfig,
) -> Result<(Vec<usize>, Vec<Complex<f64>>)> {
    if cfg.cp_len < 2 {
        return Err(Error::Config(format!(
            "cp_len {} leaves no room for multipath (need >= 2)",
            cfg.cp_len
        )));
    }
    let l_max = cfg.cp_len.min(10);
    let l = rng.gen_range(2..=l_max);
    // Partial Fisher-Yates over candidate delays 1..cp_len.
    let mut candidates: Vec<usize> = (1..cfg.cp_len).collect();
    for i in 0..(l - 1) {
        let j = rng.gen_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let mut delays: Vec<usize> = std::iter::once(0).chain(candidates[..l - 1].iter().copied()).collect();
    delays.sort_unstable();
    let tau = cfg.cp_len as f64 / 4.0;
    let gains: Vec<Complex<f64>> = delays
        .iter()
        .map(|&d| rng::complex_normal(rng, (-(d as f64) / tau).exp()))
        .collect();
    Ok((delays, gains))
}

/// Draw a Rayleigh multipath realization: 2..=10 taps, exponentially decaying
/// power profile, unit total energy.
pub fn sample_channel(rng: &mut ChaCha8Rng, cfg: &OfdmConfig) -> Result<ChannelRealization> {
    let (delays, mut gains) = sample_taps_raw(rng, cfg)?;
    let energy: f64 = gains.iter().map(|g| g.norm_sqr()).sum();
    let scale = energy.sqrt().recip();
    for g in &mut gains {
        *g *= scale;
    }
    ChannelRealization::from_taps(&delays, &gains, cfg.n_subcarriers)
}

/// Linear convolution with the channel taps, truncated to the input length.
pub fn apply_channel<T: Scalar>(sig: &TimeSignal<T>, ch: &ChannelRealization) -> TimeSignal<T> {
    let n = sig.len();
    let mut out = vec![Complex::new(T::zero(), T::zero()); n];
    for (&d, g) in ch.delays.iter().zip(&ch.gains) {
        let gt = Complex::new(T::of_f64(g.re), T::of_f64(g.im));
        for i in d..n {
            out[i] = out[i] + sig.samples[i - d] * gt;
        }
    }
    TimeSignal { samples: out }
}

/// Add circular complex Gaussian noise at a target SNR relative to the
/// measured input power.
pub fn add_awgn<T: Scalar>(
    sig: &TimeSignal<T>,
    target_snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSignal<T>> {
    let p = sig.mean_power();
    if p <= 0.0 {
        return Err(Error::Domain("add_awgn requires a nonzero-power signal".into()));
    }
    let var = p / 10f64.powf(target_snr_db / 10.0);
    Ok(add_noise_psd(sig, var, rng))
}

/// Add noise of explicit per-sample variance (the dataset path, where the
/// variance is solved from a target mean-subcarrier SNR).
pub fn add_noise_psd<T: Scalar>(
    sig: &TimeSignal<T>,
    noise_psd: f64,
    rng: &mut ChaCha8Rng,
) -> TimeSignal<T> {
    let samples = sig
        .samples
        .iter()
        .map(|&s| {
            let n = rng::complex_normal(rng, noise_psd);
            s + Complex::new(T::of_f64(n.re), T::of_f64(n.im))
        })
        .collect();
    TimeSignal { samples }
}

/// Apply timing offset and CFO: r(n) = s(n - phi) e^{j 2 pi eps n / N}, with
/// zeros shifted in at the head.
pub fn apply_cfo<T: Scalar>(
    sig: &TimeSignal<T>,
    imp: &ImpairmentConfig,
    cfg: &OfdmConfig,
) -> TimeSignal<T> {
    let n = sig.len();
    let phi = imp.timing_offset;
    let step = std::f64::consts::TAU * imp.cfo_normalized / cfg.n_subcarriers as f64;
    let samples = (0..n)
        .map(|i| {
            if i < phi {
                Complex::new(T::zero(), T::zero())
            } else {
                let w = Complex::from_polar(1.0, step * i as f64);
                sig.samples[i - phi] * Complex::new(T::of_f64(w.re), T::of_f64(w.im))
            }
        })
        .collect();
    TimeSignal { samples }
}

/// Per-subcarrier SNR in dB: signal_power |H(k)|^2 / noise_psd.
///
/// `signal_power` is the mean received signal power per time-domain sample
/// for a unit-energy channel; with this crate's transform scaling that equals
/// N times the per-bin symbol power, which makes the ratio the true post-FFT
/// per-bin SNR.
pub fn per_subcarrier_snr(
    ch: &ChannelRealization,
    imp: &ImpairmentConfig,
    signal_power: f64,
) -> Result<Vec<f64>> {
    if imp.noise_psd <= 0.0 {
        return Err(Error::Domain("per_subcarrier_snr requires noise_psd > 0".into()));
    }
    Ok(ch
        .freq_response
        .iter()
        .map(|h| 10.0 * (signal_power * h.norm_sqr() / imp.noise_psd).log10())
        .collect())
}

/// Noise variance per time-domain sample that puts the mean subcarrier SNR at
/// `target_mean_snr_db` for the given channel and signal power.
pub fn noise_psd_for_mean_snr(
    ch: &ChannelRealization,
    signal_power: f64,
    target_mean_snr_db: f64,
) -> f64 {
    let mean_h2: f64 = ch.freq_response.iter().map(|h| h.norm_sqr()).sum::<f64>()
        / ch.freq_response.len() as f64;
    signal_power * mean_h2 / 10f64.powf(target_mean_snr_db / 10.0)
}

/// Genie zero-forcing equalization: divide every bin by the true H(k).
pub fn equalize<T: Scalar>(frame: &FreqFrame<T>, ch: &ChannelRealization) -> Result<FreqFrame<T>> {
    if ch.freq_response.len() != frame.n_subcarriers {
        return Err(Error::Shape(format!(
            "channel has {} bins, frame {}",
            ch.freq_response.len(),
            frame.n_subcarriers
        )));
    }
    for (k, h) in ch.freq_response.iter().enumerate() {
        if h.norm() <= 1e-6 {
            return Err(Error::SingularChannel { bin: k, magnitude: h.norm() });
        }
    }
    let inv: Vec<Complex<T>> = ch
        .freq_response
        .iter()
        .map(|h| {
            let g = h.inv();
            Complex::new(T::of_f64(g.re), T::of_f64(g.im))
        })
        .collect();
    let mut out = FreqFrame::zeros(frame.n_symbols, frame.n_subcarriers);
    for m in 0..frame.n_symbols {
        let src = frame.symbol(m);
        for (k, dst) in out.symbol_mut(m).iter_mut().enumerate() {
            *dst = src[k] * inv[k];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{extract_subcarrier, ofdm_demodulate, ofdm_modulate};
    use crate::qam::{self, ModScheme, DATA_SCHEMES};

    fn flat_channel(n: usize) -> ChannelRealization {
        ChannelRealization::from_taps(&[0], &[Complex::new(1.0, 0.0)], n).unwrap()
    }

    fn random_frame(cfg: &OfdmConfig, seed: u64) -> FreqFrame<f64> {
        let mut r = rng::seeded(seed);
        let mut f = FreqFrame::zeros(cfg.n_symbols, cfg.n_subcarriers);
        for v in &mut f.data {
            *v = rng::complex_normal(&mut r, 1.0);
        }
        f
    }

    #[test]
    fn flat_channel_response_is_one() {
        let ch = flat_channel(64);
        for h in &ch.freq_response {
            assert!((h - Complex::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sampled_channels_normalized_and_within_cp() {
        let cfg = OfdmConfig::default_64(1);
        let mut r = rng::seeded(2);
        for _ in 0..200 {
            let ch = sample_channel(&mut r, &cfg).unwrap();
            assert!((ch.tap_energy() - 1.0).abs() < 1e-12);
            assert!(ch.max_delay() < cfg.cp_len);
            assert!((2..=10).contains(&ch.delays.len()));
            assert_eq!(ch.delays[0], 0);
            let mut sorted = ch.delays.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), ch.delays.len(), "duplicate delays");
            // Frequency response consistent with taps.
            let recomputed = dft_of_taps(&ch.delays, &ch.gains, 64);
            for (a, b) in recomputed.iter().zip(&ch.freq_response) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sample_channel_rejects_tiny_cp() {
        let cfg = OfdmConfig::new(64, 1, 1, 20e6).unwrap();
        let mut r = rng::seeded(1);
        assert!(matches!(sample_channel(&mut r, &cfg), Err(Error::Config(_))));
    }

    // Gaussianity of the tap model: standardize each raw gain by its profile
    // deviation and pool components over 10^4 draws.
    #[test]
    fn raw_tap_gains_pass_gaussian_moment_check() {
        let cfg = OfdmConfig::default_64(1);
        let tau = cfg.cp_len as f64 / 4.0;
        let mut r = rng::seeded(17);
        let mut xs: Vec<f64> = Vec::new();
        for _ in 0..10_000 {
            let (delays, gains) = sample_taps_raw(&mut r, &cfg).unwrap();
            for (&d, g) in delays.iter().zip(&gains) {
                let sigma = ((-(d as f64) / tau).exp() * 0.5).sqrt();
                xs.push(g.re / sigma);
                xs.push(g.im / sigma);
            }
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let skew = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n / var.powf(1.5);
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var) - 3.0;
        assert!(skew.abs() < 0.1, "skew {skew}");
        assert!(kurt.abs() < 0.2, "excess kurtosis {kurt}");
    }

    #[test]
    fn single_tap_identity_and_delay() {
        let cfg = OfdmConfig::default_64(2);
        let sig = ofdm_modulate(&random_frame(&cfg, 3), &cfg).unwrap();
        let id = apply_channel(&sig, &flat_channel(64));
        assert_eq!(id.samples, sig.samples);

        let d = 5usize;
        let delayed = apply_channel(
            &sig,
            &ChannelRealization::from_taps(&[d], &[Complex::new(1.0, 0.0)], 64).unwrap(),
        );
        for i in 0..sig.len() {
            let expect = if i < d { Complex::new(0.0, 0.0) } else { sig.samples[i - d] };
            assert!((delayed.samples[i] - expect).norm() < 1e-15);
        }
    }

    // Circular-convolution theorem on one CP-OFDM symbol: demodulated bin k
    // equals H(k) X(k) when the maximum delay stays inside the CP.
    #[test]
    fn cp_turns_multipath_into_per_bin_scaling() {
        let cfg = OfdmConfig::default_64(1);
        let f = random_frame(&cfg, 7);
        let mut r = rng::seeded(8);
        let ch = sample_channel(&mut r, &cfg).unwrap();
        let rx = apply_channel(&ofdm_modulate(&f, &cfg).unwrap(), &ch);
        let got = ofdm_demodulate(&rx, &cfg).unwrap();
        for k in 0..64 {
            let h = ch.freq_response[k];
            let expect = f.symbol(0)[k] * h;
            assert!((got.symbol(0)[k] - expect).norm() < 1e-9, "bin {k}");
        }
    }

    #[test]
    fn awgn_vanishes_at_200_db() {
        let cfg = OfdmConfig::default_64(2);
        let sig = ofdm_modulate(&random_frame(&cfg, 4), &cfg).unwrap();
        let mut r = rng::seeded(5);
        let noisy = add_awgn(&sig, 200.0, &mut r).unwrap();
        let num: f64 = sig
            .samples
            .iter()
            .zip(&noisy.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = sig.samples.iter().map(|a| a.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn awgn_snr_calibration_10db() {
        let n = 1_000_000usize;
        let sig = TimeSignal::<f64> { samples: vec![Complex::new(1.0, 0.0); n] };
        let mut r = rng::seeded(6);
        let noisy = add_awgn(&sig, 10.0, &mut r).unwrap();
        let noise_p: f64 =
            noisy.samples.iter().zip(&sig.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
                / n as f64;
        let measured = 10.0 * (1.0 / noise_p).log10();
        assert!((measured - 10.0).abs() < 0.1, "measured {measured} dB");
    }

    #[test]
    fn awgn_noise_is_zero_mean() {
        let n = 200_000usize;
        let sig = TimeSignal::<f64> { samples: vec![Complex::new(0.5, -0.5); n] };
        let mut r = rng::seeded(61);
        let noisy = add_awgn(&sig, 0.0, &mut r).unwrap();
        let mean: Complex<f64> =
            noisy.samples.iter().zip(&sig.samples).map(|(a, b)| a - b).sum::<Complex<f64>>()
                / n as f64;
        // Total noise variance is 0.5 (0 dB on power 0.5); 4 sigma / sqrt(n) bound per component.
        let bound = 4.0 * (0.5f64 / 2.0).sqrt() / (n as f64).sqrt();
        assert!(mean.re.abs() < bound && mean.im.abs() < bound, "mean {mean}");
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let sig = TimeSignal::<f64> { samples: vec![Complex::new(0.0, 0.0); 8] };
        let mut r = rng::seeded(1);
        assert!(add_awgn(&sig, 10.0, &mut r).is_err());
    }

    #[test]
    fn cfo_identity_and_known_rotation() {
        let cfg = OfdmConfig::default_64(2);
        let sig = ofdm_modulate(&random_frame(&cfg, 9), &cfg).unwrap();
        let id = apply_cfo(&sig, &ImpairmentConfig::clean(), &cfg);
        assert_eq!(id.samples, sig.samples);

        let imp = ImpairmentConfig::new(0.25, 0, 0.0, &cfg).unwrap();
        let out = apply_cfo(&sig, &imp, &cfg);
        // n = 64: multiplier e^{j 2 pi 0.25 64/64} = e^{j pi/2} = j.
        let expect = sig.samples[64] * Complex::new(0.0, 1.0);
        assert!((out.samples[64] - expect).norm() < 1e-12);
        // Unit-modulus rotation preserves magnitudes and total energy.
        let (mut e_in, mut e_out) = (0.0f64, 0.0f64);
        for (a, b) in sig.samples.iter().zip(&out.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
            e_in += a.norm_sqr();
            e_out += b.norm_sqr();
        }
        assert!((e_in - e_out).abs() / e_in < 1e-12);
    }

    #[test]
    fn snr_flat_channel_and_db_arithmetic() {
        let ch = flat_channel(64);
        let cfg = OfdmConfig::default_64(1);
        let imp = ImpairmentConfig::new(0.0, 0, 0.1, &cfg).unwrap();
        let snrs = per_subcarrier_snr(&ch, &imp, 1.0).unwrap();
        for s in &snrs {
            assert!((s - 10.0).abs() < 1e-12);
        }
        let imp10 = ImpairmentConfig::new(0.0, 0, 1.0, &cfg).unwrap();
        let snrs10 = per_subcarrier_snr(&ch, &imp10, 1.0).unwrap();
        for (a, b) in snrs.iter().zip(&snrs10) {
            assert!((a - b - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn snr_two_tap_closed_form() {
        let g = Complex::new(1.0 / 2f64.sqrt(), 0.0);
        let ch = ChannelRealization::from_taps(&[0, 1], &[g, g], 64).unwrap();
        for k in 0..64 {
            let expect = 2.0 * (std::f64::consts::PI * k as f64 / 64.0).cos().powi(2);
            assert!((ch.freq_response[k].norm_sqr() - expect).abs() < 1e-12, "bin {k}");
        }
        assert!(ch.freq_response[32].norm() < 1e-12);
    }

    #[test]
    fn snr_invariant_under_common_tap_phase() {
        let cfg = OfdmConfig::default_64(1);
        let mut r = rng::seeded(12);
        let ch = sample_channel(&mut r, &cfg).unwrap();
        let w = Complex::from_polar(1.0, 1.234);
        let rotated: Vec<Complex<f64>> = ch.gains.iter().map(|g| g * w).collect();
        let ch2 = ChannelRealization::from_taps(&ch.delays, &rotated, 64).unwrap();
        let imp = ImpairmentConfig::new(0.0, 0, 0.05, &cfg).unwrap();
        let a = per_subcarrier_snr(&ch, &imp, 1.0).unwrap();
        let b = per_subcarrier_snr(&ch2, &imp, 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn equalize_flat_is_identity_and_singular_names_bin() {
        let cfg = OfdmConfig::default_64(2);
        let f = random_frame(&cfg, 21);
        let eq = equalize(&f, &flat_channel(64)).unwrap();
        assert_eq!(eq, f);

        let g = Complex::new(1.0 / 2f64.sqrt(), 0.0);
        let ch = ChannelRealization::from_taps(&[0, 1], &[g, g], 64).unwrap();
        match equalize(&f, &ch) {
            Err(Error::SingularChannel { bin, .. }) => assert_eq!(bin, 32),
            other => panic!("expected singular channel, got {other:?}"),
        }
    }

    #[test]
    fn noiseless_chain_recovers_frame() {
        let cfg = OfdmConfig::default_64(4);
        for seed in 0..10u64 {
            let mut r = rng::seeded(1000 + seed);
            let ch = sample_channel(&mut r, &cfg).unwrap();
            if ch.freq_response.iter().any(|h| h.norm() <= 1e-3) {
                continue; // dataset SNR floor excludes these draws
            }
            let f = random_frame(&cfg, seed);
            let rx = apply_channel(&ofdm_modulate(&f, &cfg).unwrap(), &ch);
            let eq = equalize(&ofdm_demodulate(&rx, &cfg).unwrap(), &ch).unwrap();
            for (a, b) in f.data.iter().zip(&eq.data) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    // Monte Carlo: post-equalization error power per bin tracks
    // noise_psd / (N |H(k)|^2) under the 1/N analysis scaling.
    #[test]
    fn post_equalization_noise_matches_prediction() {
        let n_sym = 10_000usize;
        let cfg = OfdmConfig::new(64, 16, n_sym, 20e6).unwrap();
        let mut r = rng::seeded(33);
        let ch = loop {
            let c = sample_channel(&mut r, &cfg).unwrap();
            if c.freq_response.iter().all(|h| h.norm_sqr() > 0.05) {
                break c;
            }
        };
        let f = random_frame(&cfg, 55);
        let tx = ofdm_modulate(&f, &cfg).unwrap();
        let noise_psd = tx.mean_power() / 10f64.powf(2.0); // 20 dB below signal
        let rx = add_noise_psd(&apply_channel(&tx, &ch), noise_psd, &mut r);
        let eq = equalize(&ofdm_demodulate(&rx, &cfg).unwrap(), &ch).unwrap();
        for k in 0..64 {
            let err_p: f64 = (0..n_sym)
                .map(|m| (eq.symbol(m)[k] - f.symbol(m)[k]).norm_sqr())
                .sum::<f64>()
                / n_sym as f64;
            let expect = noise_psd / (64.0 * ch.freq_response[k].norm_sqr());
            assert!(
                (err_p - expect).abs() / expect < 0.2,
                "bin {k}: measured {err_p:.3e} vs {expect:.3e}"
            );
        }
    }

    // Full-chain symbol error rate is strictly better at 25 dB than 5 dB for
    // every scheme.
    #[test]
    fn ser_improves_with_snr_for_every_scheme() {
        let n_sym = 10_000usize;
        let cfg = OfdmConfig::new(64, 16, n_sym / 64, 20e6).unwrap();
        for scheme in DATA_SCHEMES {
            let mut ser = [0.0f64; 2];
            for (i, snr_db) in [5.0, 25.0].into_iter().enumerate() {
                let mut r = rng::seeded(100 + scheme.class_index().unwrap() as u64);
                let ch = loop {
                    let c = sample_channel(&mut r, &cfg).unwrap();
                    if c.freq_response.iter().all(|h| h.norm_sqr() > 0.05) {
                        break c;
                    }
                };
                let bps = scheme.bits_per_symbol();
                let bits: Vec<u8> =
                    (0..cfg.n_symbols * 64 * bps).map(|_| r.gen_range(0..2)).collect();
                let syms = qam::map_bits::<f64>(&bits, scheme).unwrap();
                let mut f = FreqFrame::zeros(cfg.n_symbols, 64);
                f.data.copy_from_slice(&syms);
                let tx = ofdm_modulate(&f, &cfg).unwrap();
                let rx = add_awgn(&apply_channel(&tx, &ch), snr_db, &mut r).unwrap();
                let eq = equalize(&ofdm_demodulate(&rx, &cfg).unwrap(), &ch).unwrap();
                let errors = eq
                    .data
                    .iter()
                    .zip(&f.data)
                    .filter(|(got, sent)| {
                        qam::nearest_label(**got, scheme) != qam::nearest_label(**sent, scheme)
                    })
                    .count();
                ser[i] = errors as f64 / f.data.len() as f64;
            }
            assert!(
                ser[1] < ser[0],
                "{}: SER(25 dB) {} !< SER(5 dB) {}",
                scheme.name(),
                ser[1],
                ser[0]
            );
        }
    }

    #[test]
    fn impairment_validation() {
        let cfg = OfdmConfig::default_64(1);
        assert!(ImpairmentConfig::new(0.5, 0, 0.0, &cfg).is_err());
        assert!(ImpairmentConfig::new(0.0, 16, 0.0, &cfg).is_err());
        assert!(ImpairmentConfig::new(0.0, 0, -1.0, &cfg).is_err());
        let imp = ImpairmentConfig::new(0.0, 0, 0.0, &cfg).unwrap();
        assert!(per_subcarrier_snr(&flat_channel(64), &imp, 1.0).is_err());
    }
}
