//! QAM constellations and bit mapping.
//!
//! Five orders are supported: QAM4/16/64 on square grids, QAM8 as a 4x2
//! rectangle and QAM32 as the 6x6-minus-corners cross. All constellations are
//! scaled to unit average symbol energy.
//!
//! Bit labels are read MSB-first. For rectangular constellations the I-axis
//! bits come first, and each axis uses a reflected Gray code complemented so
//! that the all-ones pattern lands on the most negative level (and the
//! all-zeros pattern on a positive one). For the QAM32 cross, the two leading
//! bits Gray-select the quadrant and the remaining three Gray-walk a
//! Hamiltonian path through the eight points of a quadrant.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use std::sync::OnceLock;

/// Per-subcarrier modulation scheme. `Null` marks a subcarrier carrying no
/// data (bit-loading internals only; never appears in datasets).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModScheme {
    Qam4,
    Qam8,
    Qam16,
    Qam32,
    Qam64,
    Null,
}

/// The five data-bearing schemes in class-index order.
pub const DATA_SCHEMES: [ModScheme; 5] = [
    ModScheme::Qam4,
    ModScheme::Qam8,
    ModScheme::Qam16,
    ModScheme::Qam32,
    ModScheme::Qam64,
];

impl ModScheme {
    /// Bits carried per symbol (0 for `Null`).
    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModScheme::Qam4 => 2,
            ModScheme::Qam8 => 3,
            ModScheme::Qam16 => 4,
            ModScheme::Qam32 => 5,
            ModScheme::Qam64 => 6,
            ModScheme::Null => 0,
        }
    }

    /// Constellation size (0 for `Null`).
    pub fn order(self) -> usize {
        match self {
            ModScheme::Null => 0,
            s => 1 << s.bits_per_symbol(),
        }
    }

    /// Classifier label in 0..5, or `None` for `Null`.
    pub fn class_index(self) -> Option<usize> {
        DATA_SCHEMES.iter().position(|&s| s == self)
    }

    pub fn from_class_index(idx: usize) -> Option<ModScheme> {
        DATA_SCHEMES.get(idx).copied()
    }

    /// Scheme carrying exactly `bits` per symbol, if one exists.
    pub fn from_bits(bits: usize) -> Option<ModScheme> {
        match bits {
            2 => Some(ModScheme::Qam4),
            3 => Some(ModScheme::Qam8),
            4 => Some(ModScheme::Qam16),
            5 => Some(ModScheme::Qam32),
            6 => Some(ModScheme::Qam64),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModScheme::Qam4 => "QAM4",
            ModScheme::Qam8 => "QAM8",
            ModScheme::Qam16 => "QAM16",
            ModScheme::Qam32 => "QAM32",
            ModScheme::Qam64 => "QAM64",
            ModScheme::Null => "NULL",
        }
    }
}

/// Binary-reflected Gray code.
pub fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

/// Inverse of [`gray`].
pub fn gray_decode(g: usize) -> usize {
    let mut n = g;
    let mut mask = n >> 1;
    while mask != 0 {
        n ^= mask;
        mask >>= 1;
    }
    n
}

/// Level index (0 = most negative) for an axis bit pattern of `n_bits`.
///
/// The pattern assigned to index `i` is `gray(i)` with every bit complemented,
/// which is itself a valid reflected Gray sequence; it puts the all-ones
/// pattern at the most negative level and keeps 0..0 on the positive side.
fn axis_index(pattern: usize, n_bits: usize) -> usize {
    let mask = (1usize << n_bits) - 1;
    gray_decode(pattern ^ mask)
}

/// Amplitude level for index `i` out of `n_levels`: -(n-1), -(n-3), .., (n-1).
fn axis_level(i: usize, n_levels: usize) -> f64 {
    2.0 * i as f64 - (n_levels as f64 - 1.0)
}

/// First-quadrant walk for the QAM32 cross: grid-adjacent steps through the
/// eight (|I|,|Q|) cells of a quadrant, labelled along a 3-bit Gray sequence.
const CROSS32_PATH: [(f64, f64); 8] = [
    (1.0, 5.0),
    (1.0, 3.0),
    (1.0, 1.0),
    (3.0, 1.0),
    (5.0, 1.0),
    (5.0, 3.0),
    (3.0, 3.0),
    (3.0, 5.0),
];

fn build_points(scheme: ModScheme) -> Vec<Complex<f64>> {
    let order = scheme.order();
    let mut pts = vec![Complex::new(0.0, 0.0); order];
    match scheme {
        ModScheme::Qam4 | ModScheme::Qam16 | ModScheme::Qam64 => {
            let half = scheme.bits_per_symbol() / 2;
            let side = 1usize << half;
            for label in 0..order {
                let i_bits = label >> half;
                let q_bits = label & (side - 1);
                let re = axis_level(axis_index(i_bits, half), side);
                let im = axis_level(axis_index(q_bits, half), side);
                pts[label] = Complex::new(re, im);
            }
        }
        ModScheme::Qam8 => {
            // 4x2 rectangle: two I bits, one Q bit.
            for label in 0..order {
                let i_bits = label >> 1;
                let q_bit = label & 1;
                let re = axis_level(axis_index(i_bits, 2), 4);
                let im = axis_level(axis_index(q_bit, 1), 2);
                pts[label] = Complex::new(re, im);
            }
        }
        ModScheme::Qam32 => {
            // Quadrant bits (b4,b3) Gray-cycle (+,+) -> (-,+) -> (-,-) -> (+,-).
            for label in 0..order {
                let quad = label >> 3;
                let within = label & 7;
                let sign_q = if quad & 2 == 0 { 1.0 } else { -1.0 };
                let sign_i = if (quad & 1) ^ (quad >> 1) == 0 { 1.0 } else { -1.0 };
                let (ai, aq) = CROSS32_PATH[gray_decode(within)];
                pts[label] = Complex::new(sign_i * ai, sign_q * aq);
            }
        }
        ModScheme::Null => {}
    }
    // Unit average energy.
    let mean_e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
    let scale = mean_e.sqrt().recip();
    for p in &mut pts {
        *p *= scale;
    }
    pts
}

/// Unit-energy constellation points indexed by bit label.
pub fn constellation(scheme: ModScheme) -> &'static [Complex<f64>] {
    static TABLES: OnceLock<[Vec<Complex<f64>>; 5]> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        [
            build_points(ModScheme::Qam4),
            build_points(ModScheme::Qam8),
            build_points(ModScheme::Qam16),
            build_points(ModScheme::Qam32),
            build_points(ModScheme::Qam64),
        ]
    });
    let idx = scheme
        .class_index()
        .expect("Null scheme has no constellation");
    &tables[idx]
}

/// Minimum distance between any two points of the unit-energy constellation.
pub fn min_distance(scheme: ModScheme) -> f64 {
    let pts = constellation(scheme);
    let mut dmin = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            dmin = dmin.min((pts[i] - pts[j]).norm());
        }
    }
    dmin
}

/// Map a bit string onto constellation symbols.
///
/// `bits.len()` must be a multiple of the scheme's bits per symbol.
pub fn map_bits<T: Scalar>(bits: &[u8], scheme: ModScheme) -> Result<Vec<Complex<T>>> {
    let bps = scheme.bits_per_symbol();
    if bps == 0 {
        return Err(Error::Domain("Null scheme carries no data".into()));
    }
    if bits.len() % bps != 0 {
        return Err(Error::Shape(format!(
            "bit count {} not divisible by {} ({})",
            bits.len(),
            bps,
            scheme.name()
        )));
    }
    let pts = constellation(scheme);
    let symbols = bits
        .chunks(bps)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            let p = pts[label];
            Complex::new(T::of_f64(p.re), T::of_f64(p.im))
        })
        .collect();
    Ok(symbols)
}

/// Hard-decide each symbol to the nearest constellation point and emit its
/// bits. Distance ties break toward the lowest label.
pub fn demap_symbols<T: Scalar>(symbols: &[Complex<T>], scheme: ModScheme) -> Result<Vec<u8>> {
    let bps = scheme.bits_per_symbol();
    if bps == 0 {
        return Err(Error::Domain("Null scheme carries no data".into()));
    }
    let pts = constellation(scheme);
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for s in symbols {
        let sr = s.re.as_f64();
        let si = s.im.as_f64();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (label, p) in pts.iter().enumerate() {
            let d = (sr - p.re) * (sr - p.re) + (si - p.im) * (si - p.im);
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        for k in (0..bps).rev() {
            bits.push(((best >> k) & 1) as u8);
        }
    }
    Ok(bits)
}

/// Nearest-point class decision used by symbol-error measurements.
pub fn nearest_label<T: Scalar>(symbol: Complex<T>, scheme: ModScheme) -> usize {
    let pts = constellation(scheme);
    let sr = symbol.re.as_f64();
    let si = symbol.im.as_f64();
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (label, p) in pts.iter().enumerate() {
        let d = (sr - p.re) * (sr - p.re) + (si - p.im) * (si - p.im);
        if d < best_d {
            best_d = d;
            best = label;
        }
    }
    best
}
