//! Seeded pseudo-random number generation for reproducible runs.
//!
//! splitmix64 core with helpers for the distributions the simulator needs.
//! Not cryptographic; chosen for speed and portability so replays are
//! bit-identical across platforms.

/// Deterministic PRNG. Cloning captures the stream state.
#[derive(Debug, Clone)]
pub struct SimRng {
    state: u64,
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for a sub-component so that draws in
    /// one module do not perturb another module's sequence.
    pub fn fork(&self, tag: u64) -> Self {
        Self {
            state: mix64(self.state ^ GAMMA.wrapping_mul(tag.wrapping_add(1))),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform value in `[0, bound)`; returns 0 for bound 0.
    pub fn below(&mut self, bound: u64) -> u64 {
        if bound == 0 {
            return 0;
        }
        // Multiply-shift keeps the distribution close enough to uniform for
        // simulation purposes without a rejection loop.
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform value in `[lo, hi]` inclusive.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// True with probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }

    /// Triangular distribution on `[min, max]` with the given mode.
    pub fn triangular(&mut self, min: f64, mode: f64, max: f64) -> f64 {
        debug_assert!(min <= mode && mode <= max && min < max);
        let u = self.unit_f64();
        let cut = (mode - min) / (max - min);
        if u < cut {
            min + libm::sqrt(u * (max - min) * (mode - min))
        } else {
            max - libm::sqrt((1.0 - u) * (max - min) * (max - mode))
        }
    }

    /// Binomial(n, p) by direct Bernoulli counting; n is small here.
    pub fn binomial(&mut self, n: u32, p: f64) -> u32 {
        let mut hits = 0;
        for _ in 0..n {
            if self.chance(p) {
                hits += 1;
            }
        }
        hits
    }
}
