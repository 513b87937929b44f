//! Binary checkpoint container.
//!
//! Layout (all integers little-endian `u32`, all floats little-endian `f32`):
//!
//! ```text
//! magic[8] = "SGCFCKPT"
//! version
//! dim, hidden, layers, communities, items
//! config_hash[32]
//! community  (communities * dim, row-major)
//! items      (items * dim)
//! gate_hidden (2 * dim * hidden)
//! gate_out   (hidden)
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::ModelParameters;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SGCFCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub layers: usize,
    pub config_hash: [u8; 32],
    pub params: ModelParameters,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::with_capacity(64 + 4 * p.scalar_count());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        for v in [
            CHECKPOINT_VERSION,
            p.dim() as u32,
            p.hidden() as u32,
            self.layers as u32,
            p.community_count() as u32,
            p.item_count() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.config_hash);
        for t in p.tensors() {
            for &v in t.iter() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < 8 + 24 + 32 || bytes[..8] != CHECKPOINT_MAGIC {
            return Err(bad("missing magic header"));
        }
        let word = |k: usize| {
            let at = 8 + 4 * k;
            u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
        };
        if word(0) as u32 != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", word(0))));
        }
        let (dim, hidden, layers, communities, items) = (word(1), word(2), word(3), word(4), word(5));
        let mut config_hash = [0u8; 32];
        config_hash.copy_from_slice(&bytes[32..64]);
        let shapes = [(communities, dim), (items, dim), (2 * dim, hidden), (hidden, 1)];
        let expected: usize = shapes.iter().map(|(r, c)| r * c).sum::<usize>() * 4 + 64;
        if bytes.len() != expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} bytes for the declared shapes, found {}",
                bytes.len()
            )));
        }
        let mut cursor = 64;
        let mut read = |(r, c): (usize, usize)| {
            let data: Vec<f64> = bytes[cursor..cursor + 4 * r * c]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                .collect();
            cursor += 4 * r * c;
            Array2::from_shape_vec((r, c), data).expect("length checked")
        };
        let params = ModelParameters {
            community: read(shapes[0]),
            items: read(shapes[1]),
            gate_hidden: read(shapes[2]),
            gate_out: read(shapes[3]),
        };
        Ok(Checkpoint {
            layers,
            config_hash,
            params,
        })
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
