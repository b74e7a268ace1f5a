//! Seeded random streams.
//!
//! A stream is identified by `(seed, index)`; ChaCha's 64-bit stream id keeps
//! the streams for different indices independent, which is what lets
//! bootstrap replicates and per-trader draws run in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Standard normal draw by inversion, so a stream maps to draws one-to-one.
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    crate::numeric::special::norm_ppf(open_unit(rng))
}
