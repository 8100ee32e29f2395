//! Deterministic random streams for weight generation and patch shuffling.
//!
//! The generator is splitmix64; Gaussians come from Box–Muller over pairs of
//! uniforms in (0, 1]. Transcendentals go through `libm` so the streams are
//! bit-identical on every platform.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in (0, 1] with 53 bits of resolution.
    pub fn next_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..bound` (simple modulo reduction).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// Standard normal draws. Each pair of uniforms (u1, u2) yields
/// r·cos(2πu2) followed by r·sin(2πu2), with r = sqrt(-2 ln u1).
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.rng.next_unit();
        let u2 = self.rng.next_unit();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// A uniform draw in (0, 1] from the underlying generator.
    pub fn next_unit(&mut self) -> f64 {
        self.rng.next_unit()
    }

    /// `len` draws of N(0, scale²), each computed in f64 and rounded to f32.
    pub fn fill(&mut self, len: usize, scale: f64) -> Vec<f32> {
        (0..len).map(|_| (self.next_gaussian() * scale) as f32).collect()
    }
}

/// Per-sample shuffle nonce derived from a counter mixed with the key seed.
pub fn derive_nonce(seed: u64, counter: u64) -> u64 {
    SplitMix64::new(seed ^ counter.wrapping_mul(GOLDEN_GAMMA).rotate_left(17)).next_u64()
}
