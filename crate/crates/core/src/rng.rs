//! Counter-based random substreams.
//!
//! Every simulated experiment draws from its own ChaCha8 stream, keyed by
//! `(seed, domain, experiment index)`. ChaCha is a counter-mode generator,
//! so selecting a stream is O(1) and the draws of experiment `j` do not
//! depend on how many experiments ran before it or on which thread. Normal
//! variates use the Ziggurat method from `rand_distr::StandardNormal`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent purposes that share a user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    NullSamples = 1,
    PowerAlternative = 2,
    PowerNullTable = 3,
    FitStudy = 4,
    Validation = 5,
}

/// Generator for experiment `index` in `domain`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(domain as u64)));
    rng.set_stream(index);
    rng
}

/// A 64-bit seed for `domain`, for callers that need a plain seed rather
/// than a stream.
pub fn substream_seed(seed: u64, domain: Domain) -> u64 {
    splitmix64(splitmix64(seed ^ 0xD1B5_4A32_D192_ED03) ^ domain as u64)
}

/// Fills `out` with standard normal variates.
pub fn fill_standard_normal<R: Rng>(rng: &mut R, out: &mut [f64]) {
    for z in out.iter_mut() {
        *z = rng.sample(StandardNormal);
    }
}

/// A seed drawn from the operating system's entropy source.
pub fn entropy_seed() -> u64 {
    rand::random()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
