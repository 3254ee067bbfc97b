//! Deterministic counter-based random number generation.
//!
//! Each `(seed, stream)` pair addresses an independent sequence; the
//! generator hashes `(key, counter)` with the SplitMix64 finalizer, so
//! there is no sequential state beyond the counter and streams can be
//! split freely without jump-ahead logic. Output is identical across
//! platforms.
//!
//! Gaussian variates use the Box–Muller transform in a fixed form:
//! every draw consumes exactly two uniforms `u1, u2` and returns
//! `sqrt(-2 ln(1 - u1)) * cos(2*pi*u2)` (no pair caching), which keeps
//! draw positions independent of call history.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xA24B_AED4_963E_E407;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based splittable PRNG.
#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed.wrapping_add(GOLDEN)) ^ mix64(stream.wrapping_mul(STREAM_SALT).wrapping_add(GOLDEN));
        Self { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate via the documented Box–Muller form.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
