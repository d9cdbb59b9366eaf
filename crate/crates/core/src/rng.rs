//! Deterministic counter-based random number generation.
//!
//! All randomness in the crate flows through [`SplitMix64`], a 64-bit
//! counter-based generator: the state advances by a fixed odd constant and
//! each output is a bijective mix of the counter. The generator is trivially
//! seedable, has no warm-up, and produces identical streams on every
//! platform, which is what makes the multi-trial experiments reproducible.
//! Reports reference the stream by [`ALGORITHM`].

/// Identifier written into experiment reports so a run can be reproduced.
pub const ALGORITHM: &str = "splitmix64";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizing mix of the splitmix64 sequence. Also used standalone to derive
/// independent per-trial seeds.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a base seed and a sequence of stream labels
/// (e.g. method id, coreset size, trial index). Order-sensitive.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = mix64(base ^ GOLDEN_GAMMA);
    for &p in parts {
        s = mix64(s.wrapping_add(GOLDEN_GAMMA) ^ mix64(p));
    }
    s
}

/// Stable 64-bit tag for a string label, used when a seed must incorporate a
/// method name. FNV-1a so the value never depends on compiler or platform.
pub fn label_tag(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    // cached second output of the Marsaglia polar transform
    spare_gaussian: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare_gaussian: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)`.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // multiply-shift; bias is negligible for the n used here (n << 2^64)
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via the Marsaglia polar method (no trig, fully
    /// determined by the uniform stream).
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.spare_gaussian.take() {
            return g;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_gaussian = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// Unit vector uniform on the sphere in `dim` dimensions.
    pub fn next_unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.next_gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
