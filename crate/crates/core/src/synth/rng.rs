use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Human-readable description stored next to generated datasets.
pub const GENERATOR_DESCRIPTION: &str = "ChaCha20 (rand_chacha 0.9) seeded with seed_from_u64(seed); \
stream 0 draws the planted weight, stream i+1 draws image i; \
uniform = (next_u64 >> 11) * 2^-53 in [0, 1); \
normal = Box-Muller cosine branch sqrt(-2 ln(1 - u1)) * cos(2 pi u2); \
shuffle = Fisher-Yates from the last index down, j = floor(u * (i + 1))";

/// A counter-based generator bound to one `(seed, stream)` pair.
///
/// Every image draws from its own stream, so images can be produced in any
/// order (or in parallel) with identical results.
pub struct StreamRng(ChaCha20Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
