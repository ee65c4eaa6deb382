//! On-disk network checkpoints.
//!
//! Layout: magic `SVSG`, u32 version (1), u32 layer_count, one
//! `(u32 in, u32 out, u8 activation_tag)` descriptor per layer, all weight
//! matrices row-major as f32 little-endian (layer order), all bias vectors
//! (layer order), then a footer of u64 seed and the CRC32 of every preceding
//! byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::neural::{Activation, DenseNet, Layer};

const MAGIC: &[u8; 4] = b"SVSG";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: impl AsRef<Path>, net: &DenseNet<f32>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for layer in net.layers() {
        out.extend_from_slice(&(layer.input_dim() as u32).to_le_bytes());
        out.extend_from_slice(&(layer.output_dim() as u32).to_le_bytes());
        out.push(layer.activation.tag());
    }
    for layer in net.layers() {
        for w in layer.weights.iter() {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    for layer in net.layers() {
        for b in layer.bias.iter() {
            out.extend_from_slice(&b.to_le_bytes());
        }
    }
    out.extend_from_slice(&net.seed().to_le_bytes());
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&out);
    out.extend_from_slice(&hasher.finalize().to_le_bytes());

    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<DenseNet<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let fail = |detail: String| Error::Format {
        what: "checkpoint",
        detail,
    };

    if bytes.len() < 12 + 12 {
        return Err(fail("file too short for header and footer".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail("bad magic".into()));
    }

    let crc_stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&bytes[..bytes.len() - 4]);
    if hasher.finalize() != crc_stored {
        return Err(Error::Integrity(format!(
            "checkpoint CRC mismatch in {}",
            path.display()
        )));
    }

    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let layer_count = u32_at(8) as usize;
    let mut off = 12;
    let mut dims = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        if off + 9 > bytes.len() {
            return Err(fail("truncated layer descriptors".into()));
        }
        let d_in = u32_at(off) as usize;
        let d_out = u32_at(off + 4) as usize;
        let act = Activation::from_tag(bytes[off + 8])?;
        if d_in == 0 || d_out == 0 {
            return Err(fail("zero layer dimension".into()));
        }
        dims.push((d_in, d_out, act));
        off += 9;
    }

    let weight_count: usize = dims.iter().map(|(i, o, _)| i * o).sum();
    let bias_count: usize = dims.iter().map(|(_, o, _)| o).sum();
    let expected = off + 4 * (weight_count + bias_count) + 12;
    if bytes.len() != expected {
        return Err(fail(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }

    let f32_at = |o: &mut usize| -> f32 {
        let v = f32::from_le_bytes(bytes[*o..*o + 4].try_into().unwrap());
        *o += 4;
        v
    };
    let mut weight_blocks = Vec::with_capacity(layer_count);
    for &(d_in, d_out, _) in &dims {
        let data: Vec<f32> = (0..d_in * d_out).map(|_| f32_at(&mut off)).collect();
        weight_blocks.push(Array2::from_shape_vec((d_out, d_in), data).expect("sized above"));
    }
    let mut layers = Vec::with_capacity(layer_count);
    for (k, &(_, d_out, act)) in dims.iter().enumerate() {
        let bias: Vec<f32> = (0..d_out).map(|_| f32_at(&mut off)).collect();
        layers.push(Layer {
            weights: std::mem::take(&mut weight_blocks[k]),
            bias: Array1::from_vec(bias),
            activation: act,
        });
    }
    let seed = u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());

    for pair in layers.windows(2) {
        if pair[0].output_dim() != pair[1].input_dim() {
            return Err(fail("layer dimensions do not chain".into()));
        }
    }
    Ok(DenseNet::from_layers(layers, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_network;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ckpt");
        let net: DenseNet<f32> = init_network(
            &[33, 64, 64, 66],
            &[Activation::Relu, Activation::Relu, Activation::Relu],
            1234,
        )
        .unwrap();
        save_checkpoint(&path, &net).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.seed(), 1234);
        assert_eq!(back.layers().len(), 3);
        for (a, b) in net.layers().iter().zip(back.layers()) {
            assert_eq!(a.activation, b.activation);
            assert!(a
                .weights
                .iter()
                .zip(b.weights.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
            assert!(a
                .bias
                .iter()
                .zip(b.bias.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn flipped_byte_fails_integrity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ckpt");
        let net: DenseNet<f32> =
            init_network(&[4, 3], &[Activation::Sigmoid], 7).unwrap();
        save_checkpoint(&path, &net).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::Integrity(_))
        ));
    }
}
