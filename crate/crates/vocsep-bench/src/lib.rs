//! Shared helpers for the benchmark targets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vocsep::dsp::AudioClip;

pub use rand;
pub use rand_chacha;

/// Seeded white-noise clip.
pub fn noise_clip(seconds: f64, sample_rate: u32, seed: u64) -> AudioClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = (seconds * sample_rate as f64) as usize;
    let samples = (0..len).map(|_| rng.random_range(-0.9..0.9)).collect();
    AudioClip::mono(samples, sample_rate).expect("finite noise")
}
