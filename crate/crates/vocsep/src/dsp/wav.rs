//! Minimal RIFF/WAVE reader and writer.
//!
//! Read side accepts PCM 16-bit and IEEE float 32-bit, one or two channels.
//! Write side emits PCM 16-bit little-endian. Integer samples map to
//! `[-1, 1)` via division by 32768.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::dsp::AudioClip;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

fn format_err(detail: impl Into<String>) -> Error {
    Error::Format {
        what: "wav file",
        detail: detail.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(format_err(format!(
                "truncated at byte {} (wanted {} more)",
                self.pos, n
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tag(&mut self) -> Result<[u8; 4]> {
        let b = self.take(4)?;
        Ok([b[0], b[1], b[2], b[3]])
    }
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

/// Read a WAV file into an [`AudioClip`] with samples in `[-1, 1]`
/// (PCM16 divided by 32768; float samples taken as-is).
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };

    if r.tag()? != *b"RIFF" {
        return Err(format_err("missing RIFF tag"));
    }
    let _riff_size = r.u32()?;
    if r.tag()? != *b"WAVE" {
        return Err(format_err("missing WAVE tag"));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    while r.pos < r.bytes.len() {
        if r.bytes.len() - r.pos < 8 {
            // Trailing junk shorter than a chunk header.
            break;
        }
        let id = r.tag()?;
        let size = r.u32()? as usize;
        let body = r.take(size)?;
        if size % 2 == 1 && r.pos < r.bytes.len() {
            r.pos += 1; // chunk padding byte
        }
        match &id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(format_err("fmt chunk shorter than 16 bytes"));
                }
                let mut fr = Reader {
                    bytes: body,
                    pos: 0,
                };
                let format = fr.u16()?;
                let channels = fr.u16()?;
                let sample_rate = fr.u32()?;
                let _byte_rate = fr.u32()?;
                let _block_align = fr.u16()?;
                let bits_per_sample = fr.u16()?;
                fmt = Some(FmtChunk {
                    format,
                    channels,
                    sample_rate,
                    bits_per_sample,
                });
            }
            b"data" => {
                data = Some(body);
            }
            _ => {} // skip LIST, fact, cue, ...
        }
    }

    let fmt = fmt.ok_or_else(|| format_err("missing fmt chunk"))?;
    let data = data.ok_or_else(|| format_err("missing data chunk"))?;

    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(Error::Unsupported {
            what: "wav channel count",
            detail: format!("{} channels (expected 1 or 2)", fmt.channels),
        });
    }
    if fmt.sample_rate == 0 {
        return Err(format_err("zero sample rate"));
    }

    let nch = fmt.channels as usize;
    let samples: Vec<f64> = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => {
            if data.len() % 2 != 0 {
                return Err(format_err("data chunk not a multiple of 2 bytes"));
            }
            data.chunks_exact(2)
                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
                .collect()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            if data.len() % 4 != 0 {
                return Err(format_err("data chunk not a multiple of 4 bytes"));
            }
            data.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect()
        }
        (format, bits) => {
            return Err(Error::Unsupported {
                what: "wav encoding",
                detail: format!("format tag {format} with {bits} bits per sample"),
            });
        }
    };

    if samples.len() % nch != 0 {
        return Err(format_err("interleaved data not a multiple of channels"));
    }
    let frames = samples.len() / nch;
    let mut channels = vec![Vec::with_capacity(frames); nch];
    for (i, s) in samples.into_iter().enumerate() {
        channels[i % nch].push(s);
    }
    AudioClip::from_channels(channels, fmt.sample_rate)
}

fn quantize_i16(x: f64) -> i16 {
    let scaled = (x * 32768.0).round();
    scaled.clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Write a clip as PCM 16-bit little-endian WAV.
///
/// Samples outside `[-1, 1]` are clipped to the nearest representable code;
/// in-range samples round-trip within one quantization step (1/32768).
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let path = path.as_ref();
    let nch = clip.num_channels();
    let frames = clip.len();
    let data_len = (frames * nch * 2) as u32;
    let sample_rate = clip.sample_rate();
    let byte_rate = sample_rate * nch as u32 * 2;
    let block_align = (nch * 2) as u16;

    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&(nch as u16).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for i in 0..frames {
        for ch in 0..nch {
            out.extend_from_slice(&quantize_i16(clip.channel(ch)[i]).to_le_bytes());
        }
    }

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}
