use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` derived from the top-level seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_SYNTH_UTILITY: u64 = 2;
pub(crate) const STREAM_SYNTH_PURCHASES: u64 = 3;
pub(crate) const STREAM_SYNTH_NOISE: u64 = 4;
pub(crate) const STREAM_RANK_DEMO: u64 = 5;
pub(crate) const STREAM_ITEM_SAMPLING: u64 = 6;

/// Stream used by the randomized SVD of one proximal step.
pub(crate) fn prox_stream(outer: usize, inner: usize) -> u64 {
    (1u64 << 48) | ((outer as u64) << 24) | inner as u64
}
