//! Seeded sampling.
//!
//! The generator is ChaCha with 8 rounds (a counter-mode stream cipher), keyed by
//! `seed_from_u64`. A double in [0,1) is the top 53 bits of `next_u64` times 2^-53.

use num_complex::Complex64 as C;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn complex(&mut self, re: (f64, f64), im: (f64, f64)) -> C {
        let a = self.uniform(re.0, re.1);
        let b = self.uniform(im.0, im.1);
        C::new(a, b)
    }
}
