//! Waveform I/O, resampling, and the STFT/ISTFT front-end.
//!
//! Analysis defaults follow the working configuration of the toolkit:
//! 1024-sample periodic-Hann frames with a 256-sample hop at 22,050 Hz.

mod resample;
mod specdump;
mod stft;
mod wav;

pub use resample::resample;
pub use specdump::{read_spec_dump, write_spec_dump};
pub use stft::{istft, periodic_hann, stft};
pub use wav::{read_wav, write_wav};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default analysis frame length in samples.
pub const DEFAULT_FRAME_SIZE: usize = 1024;
/// Default analysis hop in samples.
pub const DEFAULT_HOP: usize = 256;
/// Default working sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 22_050;

/// A sampled waveform: one or two channels of equal length plus a rate.
///
/// Dataset clips are stereo with channel 0 carrying background music and
/// channel 1 the singing voice (swappable at ingestion).
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::from_channels(vec![samples], sample_rate)
    }

    pub fn stereo(ch0: Vec<f64>, ch1: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::from_channels(vec![ch0, ch1], sample_rate)
    }

    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Parameter {
                name: "sample_rate",
                detail: "must be positive".into(),
            });
        }
        if channels.is_empty() || channels.len() > 2 {
            return Err(Error::Parameter {
                name: "channels",
                detail: format!("expected 1 or 2 channels, got {}", channels.len()),
            });
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Shape("channel lengths differ".into()));
        }
        for ch in &channels {
            if ch.iter().any(|s| !s.is_finite()) {
                return Err(Error::Input("non-finite sample in audio clip".into()));
            }
        }
        Ok(AudioClip {
            channels,
            sample_rate,
        })
    }

    /// Construct without the finiteness scan; callers guarantee finite data.
    pub(crate) fn from_finite(channels: Vec<Vec<f64>>, sample_rate: u32) -> Self {
        AudioClip {
            channels,
            sample_rate,
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    /// The single channel of a mono clip.
    pub fn samples(&self) -> Result<&[f64]> {
        if self.num_channels() != 1 {
            return Err(Error::Parameter {
                name: "clip",
                detail: "expected a mono clip".into(),
            });
        }
        Ok(&self.channels[0])
    }

    /// Mix down to mono as 0.5 times the channel sum (no clipping for
    /// in-range inputs). Mono clips pass through unchanged.
    pub fn mixdown(&self) -> AudioClip {
        if self.num_channels() == 1 {
            return self.clone();
        }
        let mixed = self.channels[0]
            .iter()
            .zip(&self.channels[1])
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        AudioClip::from_finite(vec![mixed], self.sample_rate)
    }
}

/// Complex one-sided STFT frames: `T x F` with `F = frame_size / 2 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: Array2<Complex64>,
    frame_size: usize,
    hop: usize,
    sample_rate: u32,
}

impl Spectrogram {
    pub fn new(
        frames: Array2<Complex64>,
        frame_size: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        let bins = frame_size / 2 + 1;
        if frames.ncols() != bins {
            return Err(Error::Shape(format!(
                "spectrogram has {} bins, frame size {} requires {}",
                frames.ncols(),
                frame_size,
                bins
            )));
        }
        if frames.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Input("non-finite spectrogram entry".into()));
        }
        Ok(Spectrogram {
            frames,
            frame_size,
            hop,
            sample_rate,
        })
    }

    pub(crate) fn from_parts(
        frames: Array2<Complex64>,
        frame_size: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Self {
        Spectrogram {
            frames,
            frame_size,
            hop,
            sample_rate,
        }
    }

    pub fn frames(&self) -> &Array2<Complex64> {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.frames.ncols()
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Split into magnitudes and phases; `m * exp(i*phi)` recombines exactly.
    pub fn split(&self) -> (MagnitudeSpectra, PhaseSpectra) {
        let mag = self.frames.mapv(|c| c.norm());
        let phase = self.frames.mapv(|c| c.im.atan2(c.re));
        (MagnitudeSpectra(mag), PhaseSpectra(phase))
    }

    pub fn magnitude(&self) -> MagnitudeSpectra {
        MagnitudeSpectra(self.frames.mapv(|c| c.norm()))
    }

    /// Recombine magnitude and phase matrices into a spectrogram.
    pub fn from_polar(
        mag: &MagnitudeSpectra,
        phase: &PhaseSpectra,
        frame_size: usize,
        hop: usize,
        sample_rate: u32,
    ) -> Result<Self> {
        if mag.0.dim() != phase.0.dim() {
            return Err(Error::Shape(format!(
                "magnitude {:?} vs phase {:?}",
                mag.0.dim(),
                phase.0.dim()
            )));
        }
        let frames = ndarray::Zip::from(&mag.0)
            .and(&phase.0)
            .map_collect(|&m, &p| Complex64::new(m * p.cos(), m * p.sin()));
        Spectrogram::new(frames, frame_size, hop, sample_rate)
    }
}

/// Nonnegative magnitudes, `T x F`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectra(pub Array2<f64>);

/// Phases in `(-pi, pi]`, `T x F`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectra(pub Array2<f64>);
