//! End-to-end CLI checks: subcommand wiring, produced files, exit codes
//! (0 ok, 1 usage, 2 data error, 3 numerical/training error).

use std::path::Path;
use std::process::Command;

fn vocsep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vocsep"))
}

fn write_tiny_config(path: &Path) {
    // Synthetic-suite analysis parameters with a throwaway schedule.
    let config = r#"{
        "sample_rate": 8000,
        "frame_size": 64,
        "hop": 16,
        "g_hidden": [32],
        "d_hidden": [16],
        "schedule": {
            "pretrain_epochs": 4,
            "adversarial_epochs": 2,
            "batch_size": 32,
            "pretrain_lr": 0.003,
            "adversarial_g_lr": 1e-6,
            "adversarial_d_lr": 3e-6
        },
        "bss_filter_len": 8
    }"#;
    std::fs::write(path, config).unwrap();
}

#[test]
fn full_workflow_produces_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let config = dir.path().join("config.json");
    write_tiny_config(&config);

    let status = vocsep()
        .args(["synth", "--out"])
        .arg(&data)
        .args(["--clips", "10"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(data.join("clip_009.wav").exists());

    let status = vocsep()
        .args(["train", "--data"])
        .arg(&data)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&run)
        .args(["--variant", "vm"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(run.join("manifest.json").exists());
    assert!(run.join("generator.ckpt").exists());
    assert!(run.join("discriminator.ckpt").exists());
    assert!(run.join("diagnostics.csv").exists());
    assert!(run.join("pretrain_loss.csv").exists());

    let csv = dir.path().join("scores.csv");
    let status = vocsep()
        .args(["evaluate", "--model"])
        .arg(&run)
        .arg("--data")
        .arg(&data)
        .arg("--csv")
        .arg(&csv)
        .args(["--aggregate", "median"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("clip_id,source,sdr,sir,sar,duration_s"));
    assert_eq!(text.lines().count(), 21); // header + 10 clips x 2 sources
    assert!(dir.path().join("scores.summary.json").exists());

    let vocal = dir.path().join("v.wav");
    let music = dir.path().join("m.wav");
    let status = vocsep()
        .args(["separate", "--model"])
        .arg(&run)
        .arg("--in")
        .arg(data.join("clip_000.wav"))
        .arg("--out-vocal")
        .arg(&vocal)
        .arg("--out-music")
        .arg(&music)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(vocal.exists() && music.exists());

    let oracle_csv = dir.path().join("oracle.csv");
    let status = vocsep()
        .args(["oracle", "--data"])
        .arg(&data)
        .args(["--mask", "ibm"])
        .arg("--csv")
        .arg(&oracle_csv)
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(oracle_csv.exists());

    let status = vocsep()
        .args(["oracle", "--data"])
        .arg(&data)
        .args(["--mask", "soft"])
        .arg("--csv")
        .arg(&oracle_csv)
        .arg("--config")
        .arg(&config)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn gradcheck_exits_zero() {
    let status = vocsep()
        .args(["gradcheck", "--seed", "7"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let status = vocsep().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(1));

    let status = vocsep().args(["train", "--data"]).status().unwrap();
    assert_eq!(status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    write_tiny_config(&config);
    let status = vocsep()
        .args(["train", "--data"])
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("run"))
        .args(["--variant", "nonsense"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    write_tiny_config(&config);

    // Missing dataset directory.
    let status = vocsep()
        .args(["train", "--data"])
        .arg(dir.path().join("nope"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Missing model manifest.
    let status = vocsep()
        .args(["separate", "--model"])
        .arg(dir.path())
        .arg("--in")
        .arg(dir.path().join("x.wav"))
        .arg("--out-vocal")
        .arg(dir.path().join("v.wav"))
        .arg("--out-music")
        .arg(dir.path().join("m.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Malformed config JSON.
    std::fs::write(&config, "{ not json").unwrap();
    let status = vocsep()
        .args(["train", "--data"])
        .arg(dir.path())
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("run"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn tampered_checkpoint_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    let config = dir.path().join("config.json");
    write_tiny_config(&config);
    assert!(vocsep()
        .args(["synth", "--out"])
        .arg(&data)
        .args(["--clips", "6"])
        .status()
        .unwrap()
        .success());
    assert!(vocsep()
        .args(["train", "--data"])
        .arg(&data)
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&run)
        .arg("--pretrain-only")
        .status()
        .unwrap()
        .success());

    // Flip one byte in the generator checkpoint.
    let ckpt = run.join("generator.ckpt");
    let mut bytes = std::fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    std::fs::write(&ckpt, bytes).unwrap();

    let status = vocsep()
        .args(["separate", "--model"])
        .arg(&run)
        .arg("--in")
        .arg(data.join("clip_000.wav"))
        .arg("--out-vocal")
        .arg(dir.path().join("v.wav"))
        .arg("--out-music")
        .arg(dir.path().join("m.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
