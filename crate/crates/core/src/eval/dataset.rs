//! Reproducible dataset generation and the on-disk archive format.
//!
//! Every capture is generated from an independent (seed, index) stream, so a
//! `(config, seed)` pair pins the archive bytes exactly, regardless of how
//! many worker threads produced it.
//!
//! Archive layout per split: `<split>.bin` holds the records back to back,
//! `<split>.manifest.json` the manifest. Capture records (lwnn-* splits) are
//! little-endian: u32 N, u32 S, f32 I/Q interleaved row-major [N x S x 2]
//! (subcarrier-major), u8 class labels [N], f32 SNRs [N]. Sequence records
//! (rnnbc-* splits) carry only the allocation: u32 N, u8 class labels [N].

use crate::bitload::{gap_for_ser, greedy_allocate, AllocMode, Allocation};
use crate::channel::{
    add_noise_psd, apply_cfo, apply_channel, equalize, noise_psd_for_mean_snr, per_subcarrier_snr,
    sample_channel, ChannelRealization, ImpairmentConfig,
};
use crate::error::{Error, Result};
use crate::models::train::IqSampleSet;
use crate::models::iq_to_channels;
use crate::ofdm::{extract_subcarrier, ofdm_demodulate, ofdm_modulate, FreqFrame, OfdmConfig};
use crate::qam::{map_bits, ModScheme};
use crate::rng;
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

/// Everything that determines a dataset's bytes besides (seed, count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    /// Symbols per subcarrier per capture (the classifier input length S).
    pub symbols_per_capture: usize,
    pub bandwidth_hz: f64,
    /// Per-capture target mean subcarrier SNR is drawn uniformly from this
    /// dB range.
    pub mean_snr_db: (f64, f64),
    /// Captures are redrawn until every subcarrier clears this floor.
    pub snr_floor_db: f64,
    /// Residual CFO drawn uniformly from this range per capture.
    pub cfo_range: (f64, f64),
    pub timing_offset: usize,
    /// Target symbol error rate behind the bit-loading SNR gap.
    pub target_ser: f64,
    /// Power budget per subcarrier (total budget = N x this).
    pub power_budget_per_subcarrier: f64,
    /// Scale transmitted symbols by the allocated per-subcarrier powers.
    pub apply_power_loading: bool,
    pub max_redraws: usize,
}

impl DatasetConfig {
    /// 64-subcarrier, 16-sample-CP system with `symbols` symbols per capture.
    pub fn with_symbols(symbols: usize) -> Self {
        Self {
            n_subcarriers: 64,
            cp_len: 16,
            symbols_per_capture: symbols,
            bandwidth_hz: 20e6,
            mean_snr_db: (5.0, 25.0),
            snr_floor_db: 5.0,
            cfo_range: (-0.01, 0.01),
            timing_offset: 0,
            target_ser: 1e-3,
            power_budget_per_subcarrier: 1.0,
            apply_power_loading: false,
            max_redraws: 100,
        }
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        OfdmConfig::new(self.n_subcarriers, self.cp_len, self.symbols_per_capture, self.bandwidth_hz)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self::with_symbols(1024)
    }
}

/// Which of the four archives a file belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    #[serde(rename = "lwnn-train")]
    LwnnTrain,
    #[serde(rename = "lwnn-test")]
    LwnnTest,
    #[serde(rename = "rnnbc-train")]
    RnnbcTrain,
    #[serde(rename = "rnnbc-test")]
    RnnbcTest,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::LwnnTrain => "lwnn-train",
            SplitTag::LwnnTest => "lwnn-test",
            SplitTag::RnnbcTrain => "rnnbc-train",
            SplitTag::RnnbcTest => "rnnbc-test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lwnn-train" => Ok(SplitTag::LwnnTrain),
            "lwnn-test" => Ok(SplitTag::LwnnTest),
            "rnnbc-train" => Ok(SplitTag::RnnbcTrain),
            "rnnbc-test" => Ok(SplitTag::RnnbcTest),
            other => Err(Error::Config(format!("unknown split '{other}'"))),
        }
    }

    /// Sequence-only splits store allocations without IQ data.
    pub fn is_sequence_split(self) -> bool {
        matches!(self, SplitTag::RnnbcTrain | SplitTag::RnnbcTest)
    }

    pub fn bin_name(self) -> String {
        format!("{}.bin", self.as_str())
    }

    pub fn manifest_name(self) -> String {
        format!("{}.manifest.json", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub split: SplitTag,
    pub count: u64,
    pub seed: u64,
    pub config_hash: String,
    pub config: DatasetConfig,
}

/// One generated capture held in memory.
#[derive(Debug, Clone)]
pub struct Capture {
    pub index: u64,
    /// Equalized per-subcarrier sequences, row-major [N x S].
    pub iq: Vec<Complex<f32>>,
    pub schemes: Vec<ModScheme>,
    /// Bit-loading input SNR per subcarrier (dB).
    pub snr_db: Vec<f32>,
    pub n_subcarriers: usize,
    pub symbols: usize,
}

impl Capture {
    pub fn subcarrier(&self, k: usize) -> &[Complex<f32>] {
        &self.iq[k * self.symbols..(k + 1) * self.symbols]
    }
}

struct ChannelDraw {
    channel: ChannelRealization,
    noise_psd: f64,
    snrs_db: Vec<f64>,
}

/// Draw channel and noise level, redrawing both until every subcarrier SNR
/// clears the floor.
fn draw_channel(cfg: &DatasetConfig, ofdm: &OfdmConfig, rng: &mut rng::ChaCha8Rng, index: u64) -> Result<ChannelDraw> {
    let signal_power = (cfg.n_subcarriers as f64) * cfg.power_budget_per_subcarrier;
    for _ in 0..cfg.max_redraws {
        let channel = sample_channel(rng, ofdm)?;
        let target = rng.gen_range(cfg.mean_snr_db.0..cfg.mean_snr_db.1);
        let noise_psd = noise_psd_for_mean_snr(&channel, signal_power, target);
        let imp = ImpairmentConfig { cfo_normalized: 0.0, timing_offset: 0, noise_psd };
        // Round to storage precision up front: the archived SNRs are the
        // authoritative bit-loading inputs, so allocation must see the same
        // values a reader would.
        let snrs_db: Vec<f64> = per_subcarrier_snr(&channel, &imp, signal_power)?
            .into_iter()
            .map(|s| s as f32 as f64)
            .collect();
        if snrs_db.iter().all(|&s| s >= cfg.snr_floor_db) {
            return Ok(ChannelDraw { channel, noise_psd, snrs_db });
        }
    }
    Err(Error::SnrRedrawExhausted { capture: index, attempts: cfg.max_redraws })
}

fn allocate(cfg: &DatasetConfig, snrs_db: &[f64]) -> Result<Allocation> {
    let gap = gap_for_ser(cfg.target_ser)?;
    let snrs_linear: Vec<f64> = snrs_db.iter().map(|s| 10f64.powf(s / 10.0)).collect();
    let budget = cfg.n_subcarriers as f64 * cfg.power_budget_per_subcarrier;
    greedy_allocate(&snrs_linear, budget, gap, 6, AllocMode::Dataset)
}

/// Allocation labels only (the sequence-split generator).
pub fn generate_allocation(cfg: &DatasetConfig, seed: u64, index: u64) -> Result<Vec<ModScheme>> {
    let ofdm = cfg.ofdm()?;
    let mut rng = rng::derived(seed, index);
    let draw = draw_channel(cfg, &ofdm, &mut rng, index)?;
    Ok(allocate(cfg, &draw.snrs_db)?.schemes)
}

/// Full transmit-impair-receive chain for one capture.
pub fn generate_capture(cfg: &DatasetConfig, seed: u64, index: u64) -> Result<Capture> {
    let ofdm = cfg.ofdm()?;
    let (n, s) = (cfg.n_subcarriers, cfg.symbols_per_capture);
    let mut rng = rng::derived(seed, index);
    let draw = draw_channel(cfg, &ofdm, &mut rng, index)?;
    let alloc = allocate(cfg, &draw.snrs_db)?;

    let cfo = if cfg.cfo_range.0 < cfg.cfo_range.1 {
        rng.gen_range(cfg.cfo_range.0..cfg.cfo_range.1)
    } else {
        cfg.cfo_range.0
    };
    let imp = ImpairmentConfig::new(cfo, cfg.timing_offset, draw.noise_psd, &ofdm)?;

    // Fill the frame column by column (subcarrier order fixes the RNG order).
    let mut frame = FreqFrame::<f64>::zeros(s, n);
    for k in 0..n {
        let scheme = alloc.schemes[k];
        let bits: Vec<u8> = (0..s * scheme.bits_per_symbol()).map(|_| rng.gen_range(0..2)).collect();
        let symbols = map_bits::<f64>(&bits, scheme)?;
        let scale = if cfg.apply_power_loading { alloc.powers[k].sqrt() } else { 1.0 };
        for (m, sym) in symbols.into_iter().enumerate() {
            frame.symbol_mut(m)[k] = sym * scale;
        }
    }

    let tx = ofdm_modulate(&frame, &ofdm)?;
    let faded = apply_channel(&tx, &draw.channel);
    let offset = apply_cfo(&faded, &imp, &ofdm);
    let noisy = add_noise_psd(&offset, draw.noise_psd, &mut rng);
    let eq = equalize(&ofdm_demodulate(&noisy, &ofdm)?, &draw.channel)?;

    let mut iq = Vec::with_capacity(n * s);
    for k in 0..n {
        for v in extract_subcarrier(&eq, k)? {
            iq.push(Complex::new(v.re as f32, v.im as f32));
        }
    }
    Ok(Capture {
        index,
        iq,
        schemes: alloc.schemes,
        snr_db: draw.snrs_db.iter().map(|&v| v as f32).collect(),
        n_subcarriers: n,
        symbols: s,
    })
}

// ---- record encoding ----

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn capture_record(cap: &Capture) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 + cap.iq.len() * 8 + cap.schemes.len() * 5);
    push_u32(&mut buf, cap.n_subcarriers as u32);
    push_u32(&mut buf, cap.symbols as u32);
    for v in &cap.iq {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    for s in &cap.schemes {
        buf.push(s.class_index().expect("dataset schemes are data-bearing") as u8);
    }
    for &v in &cap.snr_db {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn sequence_record(schemes: &[ModScheme]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(4 + schemes.len());
    push_u32(&mut buf, schemes.len() as u32);
    for s in schemes {
        buf.push(s.class_index().expect("dataset schemes are data-bearing") as u8);
    }
    buf
}

fn record_bytes(cfg: &DatasetConfig, seed: u64, index: u64, split: SplitTag) -> Result<Vec<u8>> {
    if split.is_sequence_split() {
        Ok(sequence_record(&generate_allocation(cfg, seed, index)?))
    } else {
        Ok(capture_record(&generate_capture(cfg, seed, index)?))
    }
}

/// Generate `count` records and write the archive plus manifest into
/// `out_dir`. `threads` bounds the worker threads; output bytes do not
/// depend on it.
pub fn generate_dataset(
    cfg: &DatasetConfig,
    count: u64,
    seed: u64,
    split: SplitTag,
    out_dir: &Path,
    threads: usize,
) -> Result<DatasetManifest> {
    if count == 0 {
        return Err(Error::Config("capture count must be positive".into()));
    }
    cfg.ofdm()?; // validate geometry up front
    std::fs::create_dir_all(out_dir)?;
    let bin_path = out_dir.join(split.bin_name());
    let mut writer = BufWriter::new(std::fs::File::create(&bin_path)?);
    let threads = threads.max(1);
    let window = (threads * 8).max(8) as u64;
    let mut start = 0u64;
    while start < count {
        let end = (start + window).min(count);
        let records = generate_window(cfg, seed, start, end, split, threads)?;
        for rec in records {
            writer.write_all(&rec)?;
        }
        start = end;
    }
    writer.flush()?;

    let manifest = DatasetManifest {
        format_version: 1,
        split,
        count,
        seed,
        config_hash: cfg.config_hash(),
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join(split.manifest_name()), json)?;
    Ok(manifest)
}

fn generate_window(
    cfg: &DatasetConfig,
    seed: u64,
    start: u64,
    end: u64,
    split: SplitTag,
    threads: usize,
) -> Result<Vec<Vec<u8>>> {
    let indices: Vec<u64> = (start..end).collect();
    if threads <= 1 || indices.len() <= 1 {
        return indices.iter().map(|&i| record_bytes(cfg, seed, i, split)).collect();
    }
    let chunk = indices.len().div_ceil(threads);
    let mut results: Vec<Result<Vec<Vec<u8>>>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = indices
            .chunks(chunk)
            .map(|ids| {
                scope.spawn(move || ids.iter().map(|&i| record_bytes(cfg, seed, i, split)).collect::<Result<Vec<_>>>())
            })
            .collect();
        for h in handles {
            results.push(h.join().expect("generator thread panicked"));
        }
    });
    let mut out = Vec::with_capacity(indices.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

// ---- readers ----

pub fn read_manifest(dir: &Path, split: SplitTag) -> Result<DatasetManifest> {
    let path = dir.join(split.manifest_name());
    let text = std::fs::read_to_string(&path)?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    if manifest.format_version != 1 {
        return Err(Error::Format(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    if manifest.config_hash != manifest.config.config_hash() {
        return Err(Error::Format("manifest hash does not match its config".into()));
    }
    Ok(manifest)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}

/// Stream captures out of an archive without holding them all in memory.
pub fn for_each_capture<F>(dir: &Path, split: SplitTag, mut f: F) -> Result<DatasetManifest>
where
    F: FnMut(Capture) -> Result<()>,
{
    if split.is_sequence_split() {
        return Err(Error::Config(format!("{} stores sequences, not captures", split.as_str())));
    }
    let manifest = read_manifest(dir, split)?;
    let mut r = BufReader::new(std::fs::File::open(dir.join(split.bin_name()))?);
    for index in 0..manifest.count {
        let n = read_u32(&mut r)? as usize;
        let s = read_u32(&mut r)? as usize;
        let mut iq = Vec::with_capacity(n * s);
        for _ in 0..n * s {
            let re = read_f32(&mut r)?;
            let im = read_f32(&mut r)?;
            iq.push(Complex::new(re, im));
        }
        let mut labels = vec![0u8; n];
        r.read_exact(&mut labels)?;
        let schemes: Vec<ModScheme> = labels
            .iter()
            .map(|&b| {
                ModScheme::from_class_index(b as usize)
                    .ok_or_else(|| Error::Format(format!("label byte {b} out of range")))
            })
            .collect::<Result<_>>()?;
        let mut snr_db = Vec::with_capacity(n);
        for _ in 0..n {
            snr_db.push(read_f32(&mut r)?);
        }
        f(Capture { index, iq, schemes, snr_db, n_subcarriers: n, symbols: s })?;
    }
    Ok(manifest)
}

pub fn load_captures(dir: &Path, split: SplitTag) -> Result<Vec<Capture>> {
    let mut out = Vec::new();
    for_each_capture(dir, split, |c| {
        out.push(c);
        Ok(())
    })?;
    Ok(out)
}

/// Load a sequence-split archive.
pub fn load_sequences(dir: &Path, split: SplitTag) -> Result<Vec<Vec<ModScheme>>> {
    if !split.is_sequence_split() {
        return Err(Error::Config(format!("{} stores captures, not sequences", split.as_str())));
    }
    let manifest = read_manifest(dir, split)?;
    let mut r = BufReader::new(std::fs::File::open(dir.join(split.bin_name()))?);
    let mut out = Vec::with_capacity(manifest.count as usize);
    for _ in 0..manifest.count {
        let n = read_u32(&mut r)? as usize;
        let mut labels = vec![0u8; n];
        r.read_exact(&mut labels)?;
        let seq: Vec<ModScheme> = labels
            .iter()
            .map(|&b| {
                ModScheme::from_class_index(b as usize)
                    .ok_or_else(|| Error::Format(format!("label byte {b} out of range")))
            })
            .collect::<Result<_>>()?;
        out.push(seq);
    }
    Ok(out)
}

/// Regenerate every record from the manifest's (config, seed) and compare
/// against the archive bytes.
pub fn verify_dataset(dir: &Path, split: SplitTag) -> Result<bool> {
    let manifest = read_manifest(dir, split)?;
    let mut file = BufReader::new(std::fs::File::open(dir.join(split.bin_name()))?);
    for index in 0..manifest.count {
        let expect = record_bytes(&manifest.config, manifest.seed, index, split)?;
        let mut got = vec![0u8; expect.len()];
        if file.read_exact(&mut got).is_err() {
            return Ok(false);
        }
        if got != expect {
            return Ok(false);
        }
    }
    let mut rest = Vec::new();
    file.read_to_end(&mut rest)?;
    Ok(rest.is_empty())
}

/// Expand selected subcarriers of a capture into training samples.
pub fn capture_to_samples(cap: &Capture, subcarriers: &[usize], set: &mut IqSampleSet<f32>) {
    for &k in subcarriers {
        set.push(iq_to_channels(cap.subcarrier(k)), cap.schemes[k].class_index().unwrap());
    }
}

/// Paths of the archive pair for a split.
pub fn dataset_paths(dir: &Path, split: SplitTag) -> (PathBuf, PathBuf) {
    (dir.join(split.bin_name()), dir.join(split.manifest_name()))
}
