//! Scorer checkpoints: a little-endian binary file plus a JSON sidecar.
//!
//! Binary layout:
//!
//! | bytes | content                                  |
//! |-------|------------------------------------------|
//! | 4     | magic `CDSC`                             |
//! | 4     | format version (u32, currently 1)        |
//! | 1     | kind (0 = linear, 1 = mlp)               |
//! | 4     | context_dim (u32)                        |
//! | 4     | item_slots (u32)                         |
//! | 4     | number of widths L (u32)                 |
//! | 4·L   | widths `[input, hidden.., 1]` (u32 each) |
//! | 8     | parameter count N (u64)                  |
//! | 8·N   | parameters (f64)                         |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Scorer, ScorerKind};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"CDSC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub kind: ScorerKind,
    pub architecture: Vec<usize>,
    pub context_dim: usize,
    pub item_slots: usize,
    pub n_params: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn encode_checkpoint(scorer: &Scorer) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32 + 8 * scorer.n_params());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match scorer.kind() {
        ScorerKind::Linear => 0,
        ScorerKind::Mlp => 1,
    });
    buf.extend_from_slice(&(scorer.context_dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(scorer.item_slots() as u32).to_le_bytes());
    buf.extend_from_slice(&(scorer.architecture().len() as u32).to_le_bytes());
    for w in scorer.architecture() {
        buf.extend_from_slice(&(*w as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(scorer.n_params() as u64).to_le_bytes());
    for p in scorer.parameters() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    buf
}

struct Cursor<'a>(&'a [u8]);

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(Error::Checkpoint("truncated".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Scorer> {
    let mut cur = Cursor(bytes);
    if cur.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let kind = match cur.take(1)?[0] {
        0 => ScorerKind::Linear,
        1 => ScorerKind::Mlp,
        other => return Err(Error::Checkpoint(format!("unknown kind {other}"))),
    };
    let context_dim = cur.u32()? as usize;
    let item_slots = cur.u32()? as usize;
    let n_widths = cur.u32()? as usize;
    let widths = (0..n_widths)
        .map(|_| cur.u32().map(|w| w as usize))
        .collect::<Result<Vec<_>>>()?;
    if widths.len() < 2 || widths[0] != context_dim + item_slots || widths[widths.len() - 1] != 1 {
        return Err(Error::Checkpoint("inconsistent architecture".into()));
    }
    let mut scorer = Scorer::zeroed(kind, context_dim, item_slots, &widths[1..widths.len() - 1])
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let n = cur.u64()? as usize;
    if n != scorer.n_params() {
        return Err(Error::Checkpoint(format!(
            "expected {} parameters, found {n}",
            scorer.n_params()
        )));
    }
    let params = (0..n)
        .map(|_| {
            cur.take(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        })
        .collect::<Result<Vec<_>>>()?;
    if !cur.0.is_empty() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    scorer.set_parameters(&params)?;
    Ok(scorer)
}

/// Writes `path` (binary) and `path.json` (metadata sidecar).
pub fn write_checkpoint(scorer: &Scorer, path: &Path) -> Result<CheckpointMeta> {
    std::fs::write(path, encode_checkpoint(scorer)).map_err(|e| Error::io(path, e))?;
    let meta = CheckpointMeta {
        format_version: VERSION,
        kind: scorer.kind(),
        architecture: scorer.architecture().to_vec(),
        context_dim: scorer.context_dim(),
        item_slots: scorer.item_slots(),
        n_params: scorer.n_params(),
    };
    let sidecar = sidecar_path(path);
    std::fs::write(&sidecar, serde_json::to_vec_pretty(&meta)?)
        .map_err(|e| Error::io(&sidecar, e))?;
    Ok(meta)
}

pub fn read_checkpoint(path: &Path) -> Result<Scorer> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
