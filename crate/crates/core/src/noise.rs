//! Seeded random streams.
//!
//! Every random quantity in the crate comes from a ChaCha8 keystream addressed
//! by `(seed, stream)`. ChaCha is a counter-mode generator with a published
//! reference output, so the same `(seed, stream)` yields the same words on
//! every platform. Normal variates use the Box-Muller transform over pairs of
//! 53-bit uniforms.

use std::f64::consts::TAU;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream identifiers. Distinct purposes never share a keystream.
pub mod streams {
    pub const PHASE_U: u64 = 1;
    pub const PHASE_V: u64 = 2;
    pub const TRAINING_NOISE: u64 = 16;
    pub const SAMPLING_NOISE: u64 = 17;
}

/// SplitMix64 finaliser, used to derive per-item seeds from a base seed.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform source on a single `(seed, stream)` keystream.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        UniformStream { rng }
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1].
    #[inline]
    pub fn next_unit_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal variates via Box-Muller.
#[derive(Debug, Clone)]
pub struct NormalStream {
    uniform: UniformStream,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        NormalStream {
            uniform: UniformStream::new(seed, stream),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform.next_unit_open();
        let u2 = self.uniform.next_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill_standard(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.next_standard();
        }
    }

    pub fn fill_scaled(&mut self, sigma: f64, out: &mut [f64]) {
        for v in out {
            *v = sigma * self.next_standard();
        }
    }
}
