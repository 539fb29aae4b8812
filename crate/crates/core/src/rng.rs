//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, stream_id, draw_index)`: the seed picks
//! the ChaCha key, the stream id the ChaCha stream, and the draw index a
//! disjoint window of 2³² words in that stream. Any partition of draws over
//! workers therefore reproduces the same numbers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Words reserved per draw; resampling loops stay well inside this window.
const WORDS_PER_DRAW_LOG2: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub seed: u64,
    pub stream_id: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator positioned at the start of draw `draw_index`.
    pub fn draw(&self, draw_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos((draw_index as u128) << WORDS_PER_DRAW_LOG2);
        rng
    }
}

/// Complex number with independent standard normal real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}
