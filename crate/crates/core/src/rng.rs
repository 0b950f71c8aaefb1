//! Counter-based random streams derived from a single 64-bit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Returns the generator for stream `stream` of `seed`.
///
/// Streams are independent ChaCha sequences, so results never depend on the
/// order in which streams are consumed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Radical inverse of `index` in the given prime base.
fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    value
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// The `index`-th point of the Halton sequence in `[0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton sequence supports at most {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(index + 1, b)).collect()
}
