//! Seeded randomness helpers.
//!
//! Everything random in this crate flows through an explicit [`ChaCha8Rng`]
//! so that a `(seed, index)` pair pins every byte an experiment produces.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Root generator for a run.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for item `index` under `seed`.
///
/// Used for per-capture generation: stream order is fixed by index, so
/// captures can be produced in any order (or in parallel) without changing
/// output bytes.
pub fn derived(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

/// Standard normal draw via Box-Muller.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Open interval avoids ln(0).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Circular complex Gaussian with total variance `var` (var/2 per component).
pub fn complex_normal(rng: &mut ChaCha8Rng, var: f64) -> num_complex::Complex<f64> {
    let s = (var * 0.5).sqrt();
    num_complex::Complex::new(s * standard_normal(rng), s * standard_normal(rng))
}

/// Fisher-Yates shuffle of indices 0..n with the given generator.
pub fn shuffled_indices(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
