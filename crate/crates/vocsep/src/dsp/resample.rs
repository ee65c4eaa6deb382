//! Sample-rate conversion by windowed-sinc interpolation.
//!
//! Rational-ratio polyphase design: 64 taps per phase under a Kaiser window
//! (beta 8.6, ~90 dB stopband), cutoff at the narrower of the two Nyquist
//! limits. Signal tails are treated as zeros.

use crate::dsp::AudioClip;
use crate::error::{Error, Result};

const TAPS_PER_PHASE: usize = 64;
const KAISER_BETA: f64 = 8.6;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < 1e-14 * sum {
            return sum;
        }
        k += 1.0;
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lowpass prototype at the upsampled rate: `taps = TAPS_PER_PHASE * up`,
/// cutoff `0.5 / max(up, down)` cycles per (upsampled) sample.
fn design_filter(up: usize, down: usize) -> Vec<f64> {
    let taps = TAPS_PER_PHASE * up;
    let cutoff = 0.5 / up.max(down) as f64;
    let center = (taps - 1) as f64 / 2.0;
    let denom = bessel_i0(KAISER_BETA);
    (0..taps)
        .map(|i| {
            let t = i as f64 - center;
            let frac = t / center; // in [-1, 1]
            let kaiser = bessel_i0(KAISER_BETA * (1.0 - frac * frac).max(0.0).sqrt()) / denom;
            // Gain `up` compensates the zero-stuffed interpolation.
            2.0 * cutoff * up as f64 * sinc(2.0 * cutoff * t) * kaiser
        })
        .collect()
}

fn resample_channel(x: &[f64], up: usize, down: usize, filter: &[f64]) -> Vec<f64> {
    let taps = filter.len() as isize;
    let center = (taps - 1) / 2;
    let out_len = (x.len() * up).div_ceil(down);
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        // Position of output sample j on the upsampled grid.
        let pos = (j * down) as isize;
        // Nonzero input samples i satisfy 0 <= pos + center - i*up < taps.
        let lo = (pos + center - taps + 1).div_euclid(up as isize) + 1;
        let hi = (pos + center).div_euclid(up as isize);
        let mut acc = 0.0;
        for i in lo.max(0)..=hi.min(x.len() as isize - 1) {
            let h = filter[(pos + center - i * up as isize) as usize];
            acc += x[i as usize] * h;
        }
        out.push(acc);
    }
    out
}

/// Resample a clip to `target_rate`. Identity when the rates match.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::Parameter {
            name: "target_rate",
            detail: "must be positive".into(),
        });
    }
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let g = gcd(target_rate, clip.sample_rate());
    let up = (target_rate / g) as usize;
    let down = (clip.sample_rate() / g) as usize;
    let filter = design_filter(up, down);
    let channels = (0..clip.num_channels())
        .map(|c| resample_channel(clip.channel(c), up, down, &filter))
        .collect();
    Ok(AudioClip::from_finite(channels, target_rate))
}
