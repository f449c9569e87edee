//! Seeded, splittable random streams and complex Gaussian sampling.
//!
//! Every stochastic routine takes a master seed and derives one ChaCha8
//! stream per (purpose, index) pair, so results do not depend on how work is
//! scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags keep streams for different stages disjoint.
pub mod tag {
    pub const CHANNEL: u64 = 1;
    pub const SYMBOLS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const EQUIVALENT: u64 = 4;
    pub const HAAR: u64 = 5;
    pub const AUDIT: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `index` of purpose `tag` under master `seed`.
pub fn stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)));
    rng.set_stream(index);
    rng
}

/// Plain generator from a seed, for single-stream callers.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw of CN(0, var): real and imaginary parts are N(0, var/2).
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn fill_complex_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [Complex64], var: f64) {
    for x in out.iter_mut() {
        *x = complex_normal(rng, var);
    }
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    fill_complex_normal(rng, &mut v, var);
    v
}
