//! Deterministic random number generation.
//!
//! Every stochastic step in the toolkit (displacement fields, augmentation
//! parameter draws, region sampling, dataset shuffles) pulls its randomness
//! from [`SplitMix64`], a tiny fixed-algorithm generator, so that a given
//! seed produces bit-identical results on every platform and in every build
//! configuration. Batch operations derive one child seed per work item with
//! [`SplitMix64::split`], which keeps per-item streams independent of batch
//! order and of how items are scheduled across threads.
//!
//! The generator is the SplitMix64 construction of Steele, Lea and Flood:
//! a 64-bit Weyl sequence (increment `0x9E3779B97F4A7C15`) whose output is
//! finalized with two xor-shift multiplications. It is not cryptographic;
//! it is chosen for speed, full 2^64 period and a precisely specified
//! algorithm that will never change underneath us.

/// Weyl-sequence increment: 2^64 / golden ratio, forced odd.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalization mix from the SplitMix64 reference implementation.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seedable, splittable deterministic generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Creates a generator from a seed. Equal seeds yield equal streams.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derives the seed of child stream `index` from a parent seed.
    ///
    /// Children of distinct indices start from well-separated states, so a
    /// batch can hand item `i` the generator `SplitMix64::new(split(seed, i))`
    /// and process items in any order (or in parallel) without the streams
    /// interfering.
    pub fn split(seed: u64, index: u64) -> u64 {
        mix64(seed ^ mix64(index.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA)))
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer draw from `[0, n)` via rejection of the biased tail.
    ///
    /// Panics if `n == 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires a nonempty range");
        // Reject values in the final partial block so every residue is
        // equally likely.
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Fair coin flip.
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
