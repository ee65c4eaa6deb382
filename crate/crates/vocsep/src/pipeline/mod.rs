//! Dataset ingestion, featurization, training orchestration, and
//! end-to-end separation.
//!
//! Dataset clips are stereo WAVs with one source per channel. Ingestion
//! splits the channels, resamples, and synthesizes the mixture as half the
//! channel sum; the stored per-source references are the channels at the
//! same mixture gain, so `vocal + music = mixture` sample-for-sample and
//! the masked training targets are reachable.

mod config;
mod synth;

pub use config::{
    file_crc32, CheckpointEntry, RunConfig, RunManifest, DISCRIMINATOR_FILE, GENERATOR_FILE,
    MANIFEST_FILE,
};
pub use synth::{generate_dataset, SynthConfig};

use std::path::Path;

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bsseval::{evaluate_clip, SeparationScores};
use crate::dsp::{istft, read_wav, resample, stft, AudioClip, MagnitudeSpectra, Spectrogram};
use crate::error::{Error, Result};
use crate::gan::{
    adversarial_train, pretrain, AdversarialOptions, EpochDiagnostics, TrainingSet,
};
use crate::mask::{apply_mask, ideal_binary_mask, mask_layer_forward_batch, soft_mask};
use crate::neural::{
    forward, init_network, load_checkpoint, save_checkpoint, Activation, Batch, DenseNet,
};

/// Which stereo channel carries which source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelMap {
    pub music: usize,
    pub vocal: usize,
}

impl ChannelMap {
    /// Channel 0 = background music, channel 1 = singing voice.
    pub fn standard() -> Self {
        ChannelMap { music: 0, vocal: 1 }
    }

    pub fn from_swap(swap: bool) -> Self {
        if swap {
            ChannelMap { music: 1, vocal: 0 }
        } else {
            Self::standard()
        }
    }
}

/// One dataset clip: mono vocal and music references at mixture gain plus
/// their exact sum.
#[derive(Debug, Clone)]
pub struct ClipRecord {
    pub id: String,
    pub vocal: AudioClip,
    pub music: AudioClip,
    pub mixture: AudioClip,
}

impl ClipRecord {
    pub fn duration_s(&self) -> f64 {
        self.mixture.duration_s()
    }
}

/// Read every stereo WAV under `dir` (sorted by file name), split channels
/// per the convention, resample to `target_rate`, and synthesize mixtures.
/// Returns an empty list for an empty directory.
pub fn ingest(dir: impl AsRef<Path>, map: ChannelMap, target_rate: u32) -> Result<Vec<ClipRecord>> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::NotFound(format!(
            "dataset directory {}",
            dir.display()
        )));
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|ext| ext.eq_ignore_ascii_case("wav"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();

    let mut clips = Vec::with_capacity(paths.len());
    for path in paths {
        let raw = read_wav(&path)?;
        if raw.num_channels() != 2 {
            return Err(Error::Data(format!(
                "{} has {} channel(s); the dataset convention requires stereo",
                path.display(),
                raw.num_channels()
            )));
        }
        let resampled = resample(&raw, target_rate)?;
        let half = |ch: usize| -> Vec<f64> {
            resampled.channel(ch).iter().map(|s| 0.5 * s).collect()
        };
        let vocal = half(map.vocal);
        let music = half(map.music);
        let mixture: Vec<f64> = vocal.iter().zip(&music).map(|(v, m)| v + m).collect();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        clips.push(ClipRecord {
            id,
            vocal: AudioClip::from_finite(vec![vocal], target_rate),
            music: AudioClip::from_finite(vec![music], target_rate),
            mixture: AudioClip::from_finite(vec![mixture], target_rate),
        });
    }
    Ok(clips)
}

/// Seeded shuffle then prefix split at `ceil(fraction * N)`: disjoint,
/// exhaustive, deterministic per seed.
pub fn split(
    clips: Vec<ClipRecord>,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<ClipRecord>, Vec<ClipRecord>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter {
            name: "fraction",
            detail: format!("must lie in (0, 1), got {fraction}"),
        });
    }
    let mut order: Vec<usize> = (0..clips.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = (fraction * clips.len() as f64).ceil() as usize;
    let mut slots: Vec<Option<ClipRecord>> = clips.into_iter().map(Some).collect();
    let train = order[..n_train]
        .iter()
        .map(|&i| slots[i].take().expect("unique index"))
        .collect();
    let test = order[n_train..]
        .iter()
        .map(|&i| slots[i].take().expect("unique index"))
        .collect();
    Ok((train, test))
}

/// Aligned per-frame features of one clip.
#[derive(Debug, Clone)]
pub struct FrameTriple {
    pub clip_id: String,
    pub frame_index: usize,
    /// Mixture magnitude, normalized.
    pub z: Vec<f32>,
    /// Vocal magnitude, normalized.
    pub y1: Vec<f32>,
    /// Music magnitude, normalized.
    pub y2: Vec<f32>,
}

/// Global normalization scale: the 99.9th-percentile magnitude over all
/// mixture/vocal/music spectra of the given (training) clips.
pub fn normalization_scale(
    clips: &[ClipRecord],
    frame_size: usize,
    hop: usize,
) -> Result<f64> {
    let mut mags: Vec<f64> = Vec::new();
    for clip in clips {
        for signal in [&clip.mixture, &clip.vocal, &clip.music] {
            let spec = stft(signal, frame_size, hop)?;
            mags.extend(spec.frames().iter().map(|c| c.norm()));
        }
    }
    if mags.is_empty() {
        return Err(Error::Data("no frames to compute a scale from".into()));
    }
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite magnitudes"));
    let idx = ((0.999 * mags.len() as f64).ceil() as usize)
        .saturating_sub(1)
        .min(mags.len() - 1);
    let scale = mags[idx];
    if scale <= 0.0 {
        return Err(Error::Data(
            "training clips are silent; normalization scale is zero".into(),
        ));
    }
    Ok(scale)
}

/// STFT the clip's mixture/vocal/music with shared parameters and divide
/// all magnitudes by `scale`. Frames are index-aligned across the three.
pub fn featurize(
    clip: &ClipRecord,
    scale: f64,
    frame_size: usize,
    hop: usize,
) -> Result<Vec<FrameTriple>> {
    if scale <= 0.0 {
        return Err(Error::Parameter {
            name: "scale",
            detail: "must be positive".into(),
        });
    }
    let spec_z = stft(&clip.mixture, frame_size, hop)?;
    let spec_v = stft(&clip.vocal, frame_size, hop)?;
    let spec_m = stft(&clip.music, frame_size, hop)?;
    let t = spec_z.num_frames();
    debug_assert_eq!(t, spec_v.num_frames());
    debug_assert_eq!(t, spec_m.num_frames());
    let row = |spec: &Spectrogram, t: usize| -> Vec<f32> {
        spec.frames()
            .row(t)
            .iter()
            .map(|c| (c.norm() / scale) as f32)
            .collect()
    };
    Ok((0..t)
        .map(|i| FrameTriple {
            clip_id: clip.id.clone(),
            frame_index: i,
            z: row(&spec_z, i),
            y1: row(&spec_v, i),
            y2: row(&spec_m, i),
        })
        .collect())
}

/// Stack frame triples from many clips into one training set.
pub fn frames_to_training_set(frames: &[FrameTriple]) -> Result<TrainingSet> {
    if frames.is_empty() {
        return Err(Error::Data("no frames".into()));
    }
    let f = frames[0].z.len();
    let n = frames.len();
    let mut z = Array2::zeros((n, f));
    let mut y1 = Array2::zeros((n, f));
    let mut y2 = Array2::zeros((n, f));
    for (r, frame) in frames.iter().enumerate() {
        if frame.z.len() != f || frame.y1.len() != f || frame.y2.len() != f {
            return Err(Error::Shape(format!(
                "frame {} of {} has inconsistent width",
                frame.frame_index, frame.clip_id
            )));
        }
        for c in 0..f {
            z[[r, c]] = frame.z[c];
            y1[[r, c]] = frame.y1[c];
            y2[[r, c]] = frame.y2[c];
        }
    }
    TrainingSet::new(z, y1, y2)
}

fn reconstruct(
    mag: Array2<f64>,
    phase: &crate::dsp::PhaseSpectra,
    frame_size: usize,
    hop: usize,
    sample_rate: u32,
    target_len: usize,
) -> Result<AudioClip> {
    let spec = Spectrogram::from_polar(
        &MagnitudeSpectra(mag),
        phase,
        frame_size,
        hop,
        sample_rate,
    )?;
    let wave = istft(&spec)?;
    let mut samples = wave.channel(0).to_vec();
    samples.truncate(target_len);
    Ok(AudioClip::from_finite(vec![samples], sample_rate))
}

/// Separate a mono mixture with a trained generator: STFT, normalize,
/// per-frame forward pass through the masking layer, un-normalize, rebuild
/// both sources with the mixture phase, inverse STFT. Output lengths equal
/// the input length.
pub fn separate(
    g: &DenseNet<f32>,
    mixture: &AudioClip,
    frame_size: usize,
    hop: usize,
    scale: f64,
) -> Result<(AudioClip, AudioClip)> {
    let spec = stft(mixture, frame_size, hop)?;
    let bins = spec.num_bins();
    if g.input_dim() != bins || g.output_dim() != 2 * bins {
        return Err(Error::Checkpoint(format!(
            "generator maps {} -> {}, frame size {frame_size} needs {bins} -> {}",
            g.input_dim(),
            g.output_dim(),
            2 * bins
        )));
    }
    let (mag, phase) = spec.split();
    let x = mag.0.mapv(|v| (v / scale) as f32);
    let trace = forward(g, &Batch::new(x.clone(), None)?)?;
    let pred = mask_layer_forward_batch(trace.output(), &x)?;
    let vocal_mag = pred
        .slice(s![.., 0..bins])
        .mapv(|v| v as f64 * scale);
    let music_mag = pred
        .slice(s![.., bins..2 * bins])
        .mapv(|v| v as f64 * scale);
    let len = mixture.len();
    let rate = mixture.sample_rate();
    let vocal = reconstruct(vocal_mag, &phase, frame_size, hop, rate, len)?;
    let music = reconstruct(music_mag, &phase, frame_size, hop, rate, len)?;
    Ok((vocal, music))
}

/// Oracle mask flavor for [`separate_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMask {
    /// Binary dominance mask from clean magnitudes.
    Ibm,
    /// Ratio mask from clean magnitudes.
    Soft,
}

impl std::str::FromStr for OracleMask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibm" => Ok(OracleMask::Ibm),
            "soft" => Ok(OracleMask::Soft),
            other => Err(Error::Parameter {
                name: "mask",
                detail: format!("unknown oracle mask `{other}`"),
            }),
        }
    }
}

/// Separate a clip's mixture with an oracle mask computed from its clean
/// source magnitudes.
pub fn separate_oracle(
    clip: &ClipRecord,
    kind: OracleMask,
    frame_size: usize,
    hop: usize,
) -> Result<(AudioClip, AudioClip)> {
    let spec_z = stft(&clip.mixture, frame_size, hop)?;
    let spec_v = stft(&clip.vocal, frame_size, hop)?;
    let spec_m = stft(&clip.music, frame_size, hop)?;
    let (mag_z, phase) = spec_z.split();
    let mag_v = spec_v.magnitude();
    let mag_m = spec_m.magnitude();

    let t = spec_z.num_frames();
    let bins = spec_z.num_bins();
    let mut vocal_mag = Array2::<f64>::zeros((t, bins));
    let mut music_mag = Array2::<f64>::zeros((t, bins));
    for i in 0..t {
        let v: Vec<f64> = mag_v.0.row(i).to_vec();
        let m: Vec<f64> = mag_m.0.row(i).to_vec();
        let z: Vec<f64> = mag_z.0.row(i).to_vec();
        let mask = match kind {
            OracleMask::Ibm => ideal_binary_mask(&v, &m)?,
            OracleMask::Soft => soft_mask(&v, &m)?,
        };
        let (s1, s2) = apply_mask(&mask, &z)?;
        for b in 0..bins {
            vocal_mag[[i, b]] = s1[b];
            music_mag[[i, b]] = s2[b];
        }
    }
    let len = clip.mixture.len();
    let rate = clip.mixture.sample_rate();
    let vocal = reconstruct(vocal_mag, &phase, frame_size, hop, rate, len)?;
    let music = reconstruct(music_mag, &phase, frame_size, hop, rate, len)?;
    Ok((vocal, music))
}

/// Score separated estimates against clip references.
pub fn score_clips<F>(clips: &[ClipRecord], filter_len: usize, mut separate_fn: F) -> Result<SeparationScores>
where
    F: FnMut(&ClipRecord) -> Result<(AudioClip, AudioClip)>,
{
    let mut scores = SeparationScores::new();
    for clip in clips {
        let (vocal, music) = separate_fn(clip)?;
        let metrics = evaluate_clip(
            [vocal.channel(0), music.channel(0)],
            [clip.vocal.channel(0), clip.music.channel(0)],
            filter_len,
        )?;
        scores.add_clip(&clip.id, clip.duration_s(), metrics);
    }
    Ok(scores)
}

/// Results of a full training run.
pub struct TrainOutcome {
    pub manifest: RunManifest,
    pub pretrain_curve: Vec<f64>,
    pub diagnostics: Vec<EpochDiagnostics>,
    pub generator: DenseNet<f32>,
    pub discriminator: Option<DenseNet<f32>>,
}

/// Ingest a dataset, split it, pretrain the generator, optionally run the
/// adversarial phase, and write checkpoints plus the manifest to `run_dir`.
pub fn train_run(
    data_dir: impl AsRef<Path>,
    run_dir: impl AsRef<Path>,
    config: &RunConfig,
    pretrain_only: bool,
) -> Result<TrainOutcome> {
    config.validate()?;
    let run_dir = run_dir.as_ref();
    std::fs::create_dir_all(run_dir).map_err(|e| Error::io(run_dir, e))?;

    let clips = ingest(
        &data_dir,
        ChannelMap::from_swap(config.swap_channels),
        config.sample_rate,
    )?;
    if clips.is_empty() {
        return Err(Error::Data("dataset directory contains no clips".into()));
    }
    let (train_clips, test_clips) = split(clips, config.split_fraction, config.split_seed)?;
    let scale = normalization_scale(&train_clips, config.frame_size, config.hop)?;

    let collect = |clips: &[ClipRecord]| -> Result<TrainingSet> {
        let mut frames = Vec::new();
        for clip in clips {
            frames.extend(featurize(clip, scale, config.frame_size, config.hop)?);
        }
        frames_to_training_set(&frames)
    };
    let train_set = collect(&train_clips)?;
    let holdout = if test_clips.is_empty() {
        train_set.clone()
    } else {
        collect(&test_clips)?
    };

    let bins = config.num_bins();
    let mut g_dims = vec![bins];
    g_dims.extend(&config.g_hidden);
    g_dims.push(2 * bins);
    let g_acts = vec![Activation::Relu; g_dims.len() - 1];
    let mut g: DenseNet<f32> = init_network(&g_dims, &g_acts, config.init_seed)?;

    let pretrain_curve = pretrain(&mut g, &train_set, &config.schedule)?;
    save_checkpoint(run_dir.join(GENERATOR_FILE), &g)?;
    {
        let mut csv = String::from("epoch,mse\n");
        for (epoch, loss) in pretrain_curve.iter().enumerate() {
            csv.push_str(&format!("{epoch},{loss}\n"));
        }
        let path = run_dir.join("pretrain_loss.csv");
        std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }

    let mut checkpoints = vec![CheckpointEntry {
        file: GENERATOR_FILE.to_string(),
        crc32: file_crc32(run_dir.join(GENERATOR_FILE))?,
    }];

    let mut diagnostics = Vec::new();
    let mut discriminator = None;
    if !pretrain_only {
        let mut d_dims = vec![config.variant.d_input_width(bins)];
        d_dims.extend(&config.d_hidden);
        d_dims.push(1);
        let mut d_acts = vec![Activation::Relu; d_dims.len() - 2];
        d_acts.push(Activation::Sigmoid);
        let mut d: DenseNet<f32> = init_network(&d_dims, &d_acts, config.init_seed + 1)?;
        diagnostics = adversarial_train(
            &mut g,
            &mut d,
            config.variant,
            &train_set,
            &holdout,
            &config.schedule,
            &AdversarialOptions::default(),
        )?;
        save_checkpoint(run_dir.join(GENERATOR_FILE), &g)?;
        save_checkpoint(run_dir.join(DISCRIMINATOR_FILE), &d)?;
        checkpoints = vec![
            CheckpointEntry {
                file: GENERATOR_FILE.to_string(),
                crc32: file_crc32(run_dir.join(GENERATOR_FILE))?,
            },
            CheckpointEntry {
                file: DISCRIMINATOR_FILE.to_string(),
                crc32: file_crc32(run_dir.join(DISCRIMINATOR_FILE))?,
            },
        ];
        crate::gan::write_diagnostics_csv(run_dir.join("diagnostics.csv"), &diagnostics)?;
        discriminator = Some(d);
    }

    let manifest = RunManifest {
        config: config.clone(),
        normalization_scale: scale,
        pretrained: true,
        adversarial: !pretrain_only,
        checkpoints,
    };
    manifest.save(run_dir)?;
    Ok(TrainOutcome {
        manifest,
        pretrain_curve,
        diagnostics,
        generator: g,
        discriminator,
    })
}

/// Load the generator and manifest from a run directory (CRC-verified).
pub fn load_run(run_dir: impl AsRef<Path>) -> Result<(RunManifest, DenseNet<f32>)> {
    let run_dir = run_dir.as_ref();
    let manifest = RunManifest::load(run_dir)?;
    if !manifest.pretrained {
        return Err(Error::Checkpoint(
            "run manifest does not record a pretrained generator".into(),
        ));
    }
    let g = load_checkpoint(run_dir.join(GENERATOR_FILE))?;
    Ok((manifest, g))
}
