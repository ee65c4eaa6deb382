//! STFT analysis and weighted overlap-add resynthesis.
//!
//! Framing convention: the signal is zero-extended at the tail to a whole
//! number of hops, then reflect-padded by `frame_size / 2` on both sides so
//! frame `t` is centered on sample `t * hop`. This gives
//! `T = ceil(len / hop) + 1` frames and covers every input sample.
//! The inverse divides the overlap-added windowed frames by the per-sample
//! sum of squared windows, so an unmodified round trip is exact to floating
//! precision over the whole (zero-extended) signal.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::{AudioClip, Spectrogram};
use crate::error::{Error, Result};

/// Periodic Hann window: `0.5 * (1 - cos(2*pi*k/n))` for `k = 0..n`.
pub fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
        .collect()
}

fn check_params(frame_size: usize, hop: usize) -> Result<()> {
    if frame_size == 0 || !frame_size.is_power_of_two() {
        return Err(Error::Parameter {
            name: "frame_size",
            detail: format!("{frame_size} is not a positive power of two"),
        });
    }
    if hop == 0 {
        return Err(Error::Parameter {
            name: "hop",
            detail: "must be positive".into(),
        });
    }
    if frame_size < hop {
        return Err(Error::Parameter {
            name: "frame_size",
            detail: format!("frame size {frame_size} smaller than hop {hop}"),
        });
    }
    if frame_size % hop != 0 {
        return Err(Error::Parameter {
            name: "hop",
            detail: format!("hop {hop} does not divide frame size {frame_size}"),
        });
    }
    Ok(())
}

/// Index into a signal reflect-padded around `[0, len)` (edge samples not
/// repeated). Out-of-range positions bounce until they land inside.
fn reflect(idx: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let mut i = idx.rem_euclid(period);
    if i >= len as isize {
        i = period - i;
    }
    i as usize
}

/// Forward STFT of a mono clip with a periodic Hann window.
pub fn stft(clip: &AudioClip, frame_size: usize, hop: usize) -> Result<Spectrogram> {
    check_params(frame_size, hop)?;
    let samples = clip.samples()?;
    if samples.is_empty() {
        return Err(Error::Input("cannot transform an empty clip".into()));
    }

    // Zero-extend the tail to a whole number of hops, then center frames.
    let len = samples.len();
    let ext_len = len.div_ceil(hop) * hop;
    let num_frames = ext_len / hop + 1;
    let pad = frame_size / 2;
    let bins = frame_size / 2 + 1;

    let at = |pos: isize| -> f64 {
        let i = reflect(pos, ext_len);
        if i < len {
            samples[i]
        } else {
            0.0
        }
    };

    let window = periodic_hann(frame_size);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(frame_size);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    let mut frames = Array2::<Complex64>::zeros((num_frames, bins));
    let mut buf = vec![Complex64::default(); frame_size];
    for t in 0..num_frames {
        let start = t as isize * hop as isize - pad as isize;
        for (j, w) in window.iter().enumerate() {
            buf[j] = Complex64::new(at(start + j as isize) * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for b in 0..bins {
            frames[[t, b]] = buf[b];
        }
    }

    Ok(Spectrogram::from_parts(
        frames,
        frame_size,
        hop,
        clip.sample_rate(),
    ))
}

/// Inverse STFT via weighted overlap-add with window-squared normalization.
///
/// Returns `(T - 1) * hop` samples, the zero-extended analysis length; the
/// caller trims to the original signal length if it differs.
pub fn istft(spec: &Spectrogram) -> Result<AudioClip> {
    let frame_size = spec.frame_size();
    let hop = spec.hop();
    check_params(frame_size, hop)?;

    let num_frames = spec.num_frames();
    let bins = spec.num_bins();
    if num_frames == 0 {
        return Err(Error::Input("spectrogram has no frames".into()));
    }

    let pad = frame_size / 2;
    let ext_len = (num_frames - 1) * hop;
    let total = ext_len + frame_size;

    let window = periodic_hann(frame_size);
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(frame_size);
    let mut scratch = vec![Complex64::default(); ifft.get_inplace_scratch_len()];

    let mut acc = vec![0.0f64; total];
    let mut wsq = vec![0.0f64; total];
    let mut buf = vec![Complex64::default(); frame_size];
    let scale = 1.0 / frame_size as f64;
    for t in 0..num_frames {
        // Rebuild the full Hermitian spectrum from the one-sided half.
        for b in 0..bins {
            buf[b] = spec.frames()[[t, b]];
        }
        for b in bins..frame_size {
            buf[b] = spec.frames()[[t, frame_size - b]].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * hop;
        for (j, w) in window.iter().enumerate() {
            acc[start + j] += buf[j].re * scale * w;
            wsq[start + j] += w * w;
        }
    }

    let mut out = Vec::with_capacity(ext_len);
    for i in 0..ext_len {
        let d = wsq[pad + i];
        if d < 1e-12 {
            return Err(Error::Numerical(format!(
                "overlap-add normalizer vanished at sample {i}"
            )));
        }
        out.push(acc[pad + i] / d);
    }

    if out.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite sample after inverse".into()));
    }
    Ok(AudioClip::from_finite(vec![out], spec.sample_rate()))
}
