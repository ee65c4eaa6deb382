//! Run configuration and the run manifest.
//!
//! The config JSON mirrors [`RunConfig`] field-for-field. A run directory
//! holds `manifest.json` plus the checkpoints it lists; every entry carries
//! a whole-file CRC32 so tampering is detected at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::{GanVariant, TrainingSchedule};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub sample_rate: u32,
    pub frame_size: usize,
    pub hop: usize,
    pub variant: GanVariant,
    pub schedule: TrainingSchedule,
    /// Hidden layer widths of the generator (input F and output 2F are
    /// implied by the frame size).
    pub g_hidden: Vec<usize>,
    /// Hidden layer widths of the discriminator.
    pub d_hidden: Vec<usize>,
    /// Seed for network initialization (generator; discriminator uses +1).
    pub init_seed: u64,
    /// Fraction of clips assigned to the training split.
    pub split_fraction: f64,
    pub split_seed: u64,
    /// Swap the dataset channel convention (default: channel 0 = music,
    /// channel 1 = vocal).
    pub swap_channels: bool,
    /// Distortion filter length for evaluation.
    pub bss_filter_len: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sample_rate: crate::dsp::DEFAULT_SAMPLE_RATE,
            frame_size: crate::dsp::DEFAULT_FRAME_SIZE,
            hop: crate::dsp::DEFAULT_HOP,
            variant: GanVariant::Vbm,
            schedule: TrainingSchedule::default(),
            g_hidden: vec![1024, 1024, 1024],
            d_hidden: vec![512, 512, 512],
            init_seed: 1,
            split_fraction: 0.25,
            split_seed: 7,
            swap_channels: false,
            bss_filter_len: crate::bsseval::DEFAULT_FILTER_LEN,
        }
    }
}

impl RunConfig {
    /// Desk-scale configuration matched to the synthetic dataset: 8 kHz,
    /// 64-sample frames (33 bins), small networks, short training. The
    /// adversarial rates are deliberately gentle; at this scale the
    /// discriminator otherwise overpowers the generator long before any
    /// equilibrium.
    pub fn synthetic_suite() -> Self {
        RunConfig {
            sample_rate: 8000,
            frame_size: 64,
            hop: 16,
            g_hidden: vec![128, 128],
            d_hidden: vec![16],
            schedule: TrainingSchedule {
                pretrain_epochs: 50,
                adversarial_epochs: 20,
                batch_size: 64,
                d_steps_per_g_step: 1,
                pretrain_lr: 3e-3,
                adversarial_g_lr: 1e-6,
                adversarial_d_lr: 3e-6,
                adversarial_beta1: 0.5,
                seed: 42,
            },
            bss_filter_len: 16,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Parameter {
                name: "sample_rate",
                detail: "must be positive".into(),
            });
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Parameter {
                name: "split_fraction",
                detail: format!("must lie in (0, 1), got {}", self.split_fraction),
            });
        }
        if self.frame_size == 0 || !self.frame_size.is_power_of_two() {
            return Err(Error::Parameter {
                name: "frame_size",
                detail: "must be a positive power of two".into(),
            });
        }
        if self.hop == 0 || self.frame_size % self.hop != 0 || self.frame_size < self.hop {
            return Err(Error::Parameter {
                name: "hop",
                detail: "must be positive and divide the frame size".into(),
            });
        }
        if self.g_hidden.iter().chain(&self.d_hidden).any(|&w| w == 0) {
            return Err(Error::Parameter {
                name: "hidden widths",
                detail: "layer widths must be positive".into(),
            });
        }
        if self.bss_filter_len == 0 {
            return Err(Error::Parameter {
                name: "bss_filter_len",
                detail: "must be at least 1".into(),
            });
        }
        self.schedule.validate()
    }

    /// Frequency bins per frame under this config.
    pub fn num_bins(&self) -> usize {
        self.frame_size / 2 + 1
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "config",
            detail: format!("{e} in {}", path.display()),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointEntry {
    /// File name relative to the run directory.
    pub file: String,
    pub crc32: u32,
}

/// Everything needed to reproduce and reuse a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    /// Global magnitude normalization scale (training-set 99.9th percentile).
    pub normalization_scale: f64,
    pub pretrained: bool,
    pub adversarial: bool,
    pub checkpoints: Vec<CheckpointEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GENERATOR_FILE: &str = "generator.ckpt";
pub const DISCRIMINATOR_FILE: &str = "discriminator.ckpt";

pub fn file_crc32(path: impl AsRef<Path>) -> Result<u32> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes);
    Ok(hasher.finalize())
}

impl RunManifest {
    pub fn manifest_path(run_dir: &Path) -> PathBuf {
        run_dir.join(MANIFEST_FILE)
    }

    pub fn save(&self, run_dir: impl AsRef<Path>) -> Result<()> {
        let path = Self::manifest_path(run_dir.as_ref());
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Load a manifest and verify the CRC of every listed checkpoint.
    pub fn load(run_dir: impl AsRef<Path>) -> Result<Self> {
        let run_dir = run_dir.as_ref();
        let path = Self::manifest_path(run_dir);
        if !path.exists() {
            return Err(Error::NotFound(format!(
                "no manifest at {}",
                path.display()
            )));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "manifest",
            detail: format!("{e} in {}", path.display()),
        })?;
        for entry in &manifest.checkpoints {
            let ckpt = run_dir.join(&entry.file);
            if !ckpt.exists() {
                return Err(Error::NotFound(format!(
                    "checkpoint {} listed in manifest is missing",
                    ckpt.display()
                )));
            }
            let crc = file_crc32(&ckpt)?;
            if crc != entry.crc32 {
                return Err(Error::Integrity(format!(
                    "checksum mismatch for {} (manifest {:08x}, file {:08x})",
                    entry.file, entry.crc32, crc
                )));
            }
        }
        Ok(manifest)
    }
}
