//! Seeded random streams.
//!
//! Every Monte-Carlo draw in the crate comes from a ChaCha8 generator keyed
//! by `(seed, stream)`. Independent runs use disjoint stream ids, so results
//! do not depend on how runs are scheduled across threads.

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

/// Generator for stream `stream` under the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly symmetric complex normal with `E|z|² = 1`.
pub fn circular_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}
