//! Parameter checkpoints as named blocks, either JSON or a little-endian
//! binary pack. Both carry a format version and refuse to load mismatched
//! versions.
//!
//! Binary layout (all integers little-endian u32, floats little-endian
//! f64): magic `NBPK`, version, block count, then per block: name length,
//! name bytes, rank, dims, values.

use crate::params::{ParamBlock, ParamVector};
use crate::{AutodiffError, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"NBPK";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointFormat {
    Json,
    Binary,
}

#[derive(Serialize, Deserialize)]
struct JsonCheckpoint {
    version: u32,
    blocks: Vec<ParamBlock>,
}

pub fn save_params(path: &Path, params: &ParamVector, format: CheckpointFormat) -> Result<()> {
    match format {
        CheckpointFormat::Json => {
            let doc = JsonCheckpoint {
                version: CHECKPOINT_VERSION,
                blocks: params.blocks().to_vec(),
            };
            let text = serde_json::to_string(&doc)
                .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
            fs::write(path, text).map_err(|e| AutodiffError::Checkpoint(e.to_string()))
        }
        CheckpointFormat::Binary => {
            let mut buf: Vec<u8> = Vec::new();
            buf.extend_from_slice(MAGIC);
            buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
            buf.extend_from_slice(&(params.blocks().len() as u32).to_le_bytes());
            for b in params.blocks() {
                buf.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
                buf.extend_from_slice(b.name.as_bytes());
                buf.extend_from_slice(&(b.shape.len() as u32).to_le_bytes());
                for &d in &b.shape {
                    buf.extend_from_slice(&(d as u32).to_le_bytes());
                }
                for &v in &b.values {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            let mut f =
                fs::File::create(path).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
            f.write_all(&buf)
                .map_err(|e| AutodiffError::Checkpoint(e.to_string()))
        }
    }
}

pub fn load_params(path: &Path) -> Result<ParamVector> {
    let mut f = fs::File::open(path).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
    let mut data = Vec::new();
    f.read_to_end(&mut data)
        .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
    if data.starts_with(MAGIC) {
        load_binary(&data)
    } else {
        let doc: JsonCheckpoint = serde_json::from_slice(&data)
            .map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        if doc.version != CHECKPOINT_VERSION {
            return Err(AutodiffError::Checkpoint(format!(
                "version {} not supported (expected {CHECKPOINT_VERSION})",
                doc.version
            )));
        }
        Ok(ParamVector::new(doc.blocks))
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(AutodiffError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn load_binary(data: &[u8]) -> Result<ParamVector> {
    let mut cur = Cursor { data, pos: 4 };
    let version = cur.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(AutodiffError::Checkpoint(format!(
            "version {version} not supported (expected {CHECKPOINT_VERSION})"
        )));
    }
    let count = cur.u32()? as usize;
    let mut blocks = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u32()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| AutodiffError::Checkpoint("invalid block name".into()))?;
        let rank = cur.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32()? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = cur.take(n * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        blocks.push(ParamBlock::new(name, shape, values));
    }
    Ok(ParamVector::new(blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::xavier_normal_init;

    #[test]
    fn json_round_trip() {
        let p = xavier_normal_init(&[("w".into(), vec![4, 3]), ("b".into(), vec![4])], 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        save_params(&path, &p, CheckpointFormat::Json).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(p.fingerprint(), q.fingerprint());
    }

    #[test]
    fn binary_round_trip() {
        let p = xavier_normal_init(&[("w".into(), vec![5, 2]), ("b".into(), vec![5])], 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        save_params(&path, &p, CheckpointFormat::Binary).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(p.fingerprint(), q.fingerprint());
    }

    #[test]
    fn version_mismatch_is_an_error() {
        let p = xavier_normal_init(&[("w".into(), vec![2, 2])], 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        save_params(&path, &p, CheckpointFormat::Binary).unwrap();
        let mut data = std::fs::read(&path).unwrap();
        data[4] = 99; // bump version byte
        std::fs::write(&path, &data).unwrap();
        assert!(load_params(&path).is_err());
    }
}
