//! Deterministic, splittable random streams.
//!
//! Generator: ChaCha20 (`rand_chacha::ChaCha20Rng`, stream cipher with a
//! 64-bit block counter and a 64-bit stream id). The 256-bit key is
//! `ChaCha20Rng::seed_from_u64(master_seed)` and every independent substream
//! is selected with `set_stream`, so a trial's data depends only on
//! `(master_seed, role, index)` and never on scheduling.
//!
//! Derived variates (version 1 of the stream format):
//! - uniform on [0, 1): `(next_u64 >> 11) * 2^-53`;
//! - standard normal: Marsaglia polar method on `2u - 1` pairs, both outputs
//!   of an accepted pair used in order (first `u * f`, then `v * f`).

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// What a substream is used for. The tag occupies the top byte of the
/// ChaCha stream id; the low 56 bits carry the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamRole {
    Training = 1,
    Validation = 2,
    Selection = 3,
    Dataset = 4,
    Calibration = 5,
}

const INDEX_MASK: u64 = (1 << 56) - 1;

#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha20Rng,
    spare_normal: Option<f64>,
}

impl SampleStream {
    /// Raw stream `stream` under `master_seed`.
    pub fn new(master_seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        Self {
            rng,
            spare_normal: None,
        }
    }

    pub fn substream(master_seed: u64, role: StreamRole, index: u64) -> Self {
        assert!(index <= INDEX_MASK, "substream index {index} exceeds 56 bits");
        Self::new(master_seed, ((role as u64) << 56) | index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

/// One standard normal draw from `stream`.
pub fn standard_normal(stream: &mut SampleStream) -> f64 {
    stream.standard_normal()
}
