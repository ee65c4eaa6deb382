//! Debug spectrogram dump.
//!
//! Layout: magic `SPEC`, u32 version (1), u32 T, u32 F, u32 frame_size,
//! u32 hop, then `T * F` complex entries as little-endian `(f32 re, f32 im)`
//! pairs, row-major by frame. The sample rate is not stored; the reader
//! takes it as an argument.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::dsp::Spectrogram;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPEC";
const VERSION: u32 = 1;

pub fn write_spec_dump(path: impl AsRef<Path>, spec: &Spectrogram) -> Result<()> {
    let path = path.as_ref();
    let t = spec.num_frames();
    let f = spec.num_bins();
    let mut out = Vec::with_capacity(24 + t * f * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(t as u32).to_le_bytes());
    out.extend_from_slice(&(f as u32).to_le_bytes());
    out.extend_from_slice(&(spec.frame_size() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.hop() as u32).to_le_bytes());
    for row in spec.frames().rows() {
        for c in row {
            out.extend_from_slice(&(c.re as f32).to_le_bytes());
            out.extend_from_slice(&(c.im as f32).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_spec_dump(path: impl AsRef<Path>, sample_rate: u32) -> Result<Spectrogram> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |detail: String| Error::Format {
        what: "spectrogram dump",
        detail,
    };
    if bytes.len() < 24 {
        return Err(fail("shorter than the 24-byte header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let t = u32_at(8) as usize;
    let f = u32_at(12) as usize;
    let frame_size = u32_at(16) as usize;
    let hop = u32_at(20) as usize;
    let expected = 24 + t * f * 8;
    if bytes.len() != expected {
        return Err(fail(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut frames = Array2::<Complex64>::zeros((t, f));
    let mut off = 24;
    for i in 0..t {
        for j in 0..f {
            let re = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            let im = f32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
            frames[[i, j]] = Complex64::new(re as f64, im as f64);
            off += 8;
        }
    }
    Spectrogram::new(frames, frame_size, hop, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{stft, AudioClip};

    #[test]
    fn dump_roundtrip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.bin");
        let x: Vec<f64> = (0..2000).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
        let clip = AudioClip::mono(x, 22_050).unwrap();
        let spec = stft(&clip, 1024, 256).unwrap();
        write_spec_dump(&path, &spec).unwrap();
        let back = read_spec_dump(&path, 22_050).unwrap();
        assert_eq!(back.num_frames(), spec.num_frames());
        assert_eq!(back.frame_size(), 1024);
        assert_eq!(back.hop(), 256);
        for (a, b) in spec.frames().iter().zip(back.frames().iter()) {
            assert!((a.re - b.re).abs() <= a.re.abs().max(1.0) * 1e-6);
            assert!((a.im - b.im).abs() <= a.im.abs().max(1.0) * 1e-6);
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"NOPE____________________").unwrap();
        assert!(matches!(
            read_spec_dump(&path, 8000),
            Err(Error::Format { .. })
        ));
    }
}
