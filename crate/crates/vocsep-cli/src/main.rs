//! Command-line interface: train, separate, evaluate, oracle masks,
//! gradient verification, and synthetic dataset generation.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical/training error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vocsep::bsseval::Aggregate;
use vocsep::dsp::{read_wav, resample, write_wav, AudioClip};
use vocsep::error::Error;
use vocsep::gan::GanVariant;
use vocsep::pipeline::{
    generate_dataset, ingest, load_run, score_clips, separate, separate_oracle, train_run,
    ChannelMap, OracleMask, RunConfig, SynthConfig,
};

#[derive(Parser)]
#[command(name = "vocsep", about = "Monaural singing-voice separation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a separation model on a dataset of stereo clips.
    Train(TrainArgs),
    /// Separate a mixture WAV into vocal and background tracks.
    Separate(SeparateArgs),
    /// Score a trained model on a dataset.
    Evaluate(EvaluateArgs),
    /// Score oracle masks (separation upper bounds) on a dataset.
    Oracle(OracleArgs),
    /// Verify analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Generate the synthetic two-band dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory of stereo WAV clips.
    #[arg(long)]
    data: PathBuf,
    /// Run configuration (JSON mirroring the config schema).
    #[arg(long)]
    config: PathBuf,
    /// Output run directory for checkpoints and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Override the discriminator input variant from the config.
    #[arg(long)]
    variant: Option<GanVariant>,
    /// Stop after supervised pretraining (skip the adversarial phase).
    #[arg(long)]
    pretrain_only: bool,
}

#[derive(Args)]
struct SeparateArgs {
    /// Run directory holding the trained model.
    #[arg(long)]
    model: PathBuf,
    /// Input mixture WAV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output path for the separated vocal track.
    #[arg(long)]
    out_vocal: PathBuf,
    /// Output path for the separated background track.
    #[arg(long)]
    out_music: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory holding the trained model.
    #[arg(long)]
    model: PathBuf,
    /// Dataset directory of stereo WAV clips.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV path (a JSON summary is written next to it).
    #[arg(long)]
    csv: PathBuf,
    /// Aggregation across clips.
    #[arg(long, default_value = "weighted-mean")]
    aggregate: Aggregate,
}

#[derive(Args)]
struct OracleArgs {
    /// Dataset directory of stereo WAV clips.
    #[arg(long)]
    data: PathBuf,
    /// Oracle mask flavor.
    #[arg(long)]
    mask: OracleMask,
    /// Output CSV path (a JSON summary is written next to it).
    #[arg(long)]
    csv: PathBuf,
    /// Optional run configuration for analysis parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Aggregation across clips.
    #[arg(long, default_value = "weighted-mean")]
    aggregate: Aggregate,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Seed for the check instances and coordinate sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the generated clips.
    #[arg(long)]
    out: PathBuf,
    /// Number of clips.
    #[arg(long, default_value_t = 64)]
    clips: usize,
    /// Generation seed.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Also write a matching desk-scale run configuration here.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Training { .. } | Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Train(args) => {
            let mut config = RunConfig::load(&args.config)?;
            if let Some(variant) = args.variant {
                config.variant = variant;
            }
            let outcome = train_run(&args.data, &args.out, &config, args.pretrain_only)?;
            if let (Some(first), Some(last)) = (
                outcome.pretrain_curve.first(),
                outcome.pretrain_curve.last(),
            ) {
                println!(
                    "pretraining: {} epochs, loss {first:.6} -> {last:.6}",
                    outcome.pretrain_curve.len()
                );
            }
            if let Some(diag) = outcome.diagnostics.last() {
                println!(
                    "adversarial: {} epochs, d_loss {:.4}, g_loss {:.4}, held-out D accuracy {:.3}",
                    outcome.diagnostics.len(),
                    diag.d_loss,
                    diag.g_loss,
                    diag.d_accuracy
                );
            }
            println!("run written to {}", args.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Separate(args) => {
            let (manifest, generator) = load_run(&args.model)?;
            let config = &manifest.config;
            let raw = read_wav(&args.input)?;
            let mono = raw.mixdown();
            let mixture = if mono.sample_rate() != config.sample_rate {
                eprintln!(
                    "resampling {} Hz input to the model rate {} Hz",
                    mono.sample_rate(),
                    config.sample_rate
                );
                resample(&mono, config.sample_rate)?
            } else {
                mono
            };
            let (vocal, music) = separate(
                &generator,
                &mixture,
                config.frame_size,
                config.hop,
                manifest.normalization_scale,
            )?;
            write_wav(&args.out_vocal, &limit_peak(vocal, "vocal"))?;
            write_wav(&args.out_music, &limit_peak(music, "background"))?;
            println!(
                "wrote {} and {}",
                args.out_vocal.display(),
                args.out_music.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate(args) => {
            let (manifest, generator) = load_run(&args.model)?;
            let config = &manifest.config;
            let clips = ingest(
                &args.data,
                ChannelMap::from_swap(config.swap_channels),
                config.sample_rate,
            )?;
            if clips.is_empty() {
                eprintln!("warning: dataset directory contains no clips");
            }
            let scale = manifest.normalization_scale;
            let scores = score_clips(&clips, config.bss_filter_len, |clip| {
                separate(
                    &generator,
                    &clip.mixture,
                    config.frame_size,
                    config.hop,
                    scale,
                )
            })?;
            write_scores(&scores, &args.csv, args.aggregate)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle(args) => {
            let config = match &args.config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            let clips = ingest(
                &args.data,
                ChannelMap::from_swap(config.swap_channels),
                config.sample_rate,
            )?;
            if clips.is_empty() {
                eprintln!("warning: dataset directory contains no clips");
            }
            let scores = score_clips(&clips, config.bss_filter_len, |clip| {
                separate_oracle(clip, args.mask, config.frame_size, config.hop)
            })?;
            write_scores(&scores, &args.csv, args.aggregate)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Gradcheck(args) => {
            let report = vocsep::verify::gradcheck_suite(args.seed)?;
            println!("masked-mse generator: max relative error {:e}", report.masked_mse);
            println!("bce discriminator:    max relative error {:e}", report.bce);
            println!("adversarial chain:    max relative error {:e}", report.adversarial);
            if report.passed() {
                println!("all gradients verified below {:e}", vocsep::verify::TOLERANCE);
                Ok(ExitCode::SUCCESS)
            } else {
                Err(Error::Numerical(format!(
                    "gradient verification exceeded {:e}",
                    vocsep::verify::TOLERANCE
                )))
            }
        }
        Command::Synth(args) => {
            let config = SynthConfig {
                num_clips: args.clips,
                seed: args.seed,
                ..Default::default()
            };
            let ids = generate_dataset(&args.out, &config)?;
            println!("wrote {} clips to {}", ids.len(), args.out.display());
            if let Some(path) = args.config_out {
                RunConfig::synthetic_suite().save(&path)?;
                println!("wrote matching run config to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Scale a clip down only if it would clip at the 16-bit boundary.
fn limit_peak(clip: AudioClip, label: &str) -> AudioClip {
    let peak = clip
        .channel(0)
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak <= 1.0 {
        return clip;
    }
    let gain = 1.0 / peak;
    eprintln!("{label} track peaks at {peak:.3}; applying gain {gain:.4}");
    let samples = clip.channel(0).iter().map(|v| v * gain).collect();
    AudioClip::from_channels(vec![samples], clip.sample_rate()).expect("finite samples")
}

fn write_scores(
    scores: &vocsep::bsseval::SeparationScores,
    csv_path: &PathBuf,
    aggregate: Aggregate,
) -> Result<(), Error> {
    scores.write_csv(csv_path)?;
    let summary = scores.summary_json(aggregate);
    let summary_path = csv_path.with_extension("summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )
    .map_err(|e| Error::io(&summary_path, e))?;
    println!("{summary}");
    println!(
        "scores written to {} (summary in {})",
        csv_path.display(),
        summary_path.display()
    );
    Ok(())
}
