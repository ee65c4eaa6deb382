//! Monaural singing-voice separation toolkit.
//!
//! The crate covers the full pipeline: WAV input, STFT analysis, mask-output
//! dense networks trained first with a supervised joint-mask objective and
//! then adversarially, oracle masks, and BSS-Eval style SDR/SIR/SAR scoring.
//!
//! Modules mirror the processing stages:
//!
//! - [`dsp`] — waveform I/O, resampling, STFT/ISTFT.
//! - [`neural`] — dense networks, backpropagation, Adam, checkpoints.
//! - [`mask`] — soft time-frequency masks and the masking output layer.
//! - [`gan`] — adversarial objectives and the two-phase training loop.
//! - [`bsseval`] — projection-based SDR/SIR/SAR computation.
//! - [`pipeline`] — dataset ingestion, featurization, end-to-end separation.

pub mod bsseval;
pub mod dsp;
pub mod error;
pub mod gan;
pub mod mask;
pub mod neural;
pub mod pipeline;
pub mod verify;

pub use error::{Error, Result};
