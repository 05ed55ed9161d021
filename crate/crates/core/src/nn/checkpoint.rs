//! Versioned binary checkpoint format.
//!
//! Byte layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "PZCK"
//! version    u32      FORMAT_VERSION
//! game id    u32 length + UTF-8 bytes
//! spec       u32 field count (7) + 7 × u32, NetworkSpec field order
//! step       u64
//! elo        u8 present flag + f64 (0.0 when absent)
//! weights    f32 values, tensors in NetworkSpec::param_shapes order
//! crc32      u32 over every preceding byte
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{Network, NetworkSpec, NnError, Tensor};

pub const MAGIC: [u8; 4] = *b"PZCK";
pub const FORMAT_VERSION: u32 = 1;
const SPEC_FIELDS: u32 = 7;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub game_id: String,
    pub network: Network<f32>,
    pub step: u64,
    pub elo: Option<f64>,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint truncated: need {needed} bytes, have {actual}")]
    Truncated { needed: usize, actual: usize },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

impl From<NnError> for CheckpointError {
    fn from(e: NnError) -> Self {
        CheckpointError::Malformed(e.to_string())
    }
}

impl Checkpoint {
    pub fn new(game_id: impl Into<String>, network: Network<f32>) -> Self {
        Self {
            game_id: game_id.into(),
            network,
            step: 0,
            elo: None,
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.network.spec()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.network.spec();
        let mut out = Vec::with_capacity(64 + 4 * spec.param_count());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.game_id.len() as u32).to_le_bytes());
        out.extend_from_slice(self.game_id.as_bytes());
        out.extend_from_slice(&SPEC_FIELDS.to_le_bytes());
        for f in spec.fields() {
            out.extend_from_slice(&(f as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        out.push(self.elo.is_some() as u8);
        out.extend_from_slice(&self.elo.unwrap_or(0.0).to_le_bytes());
        for (_, t) in self.network.named_tensors() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let id_len = r.u32()? as usize;
        let game_id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| CheckpointError::Malformed("game id is not UTF-8".into()))?;
        let nfields = r.u32()?;
        if nfields != SPEC_FIELDS {
            return Err(CheckpointError::Malformed(format!(
                "expected {SPEC_FIELDS} spec fields, found {nfields}"
            )));
        }
        let mut fields = [0usize; 7];
        for f in &mut fields {
            *f = r.u32()? as usize;
        }
        let spec = NetworkSpec::from_fields(fields);
        spec.validate()?;
        let step = r.u64()?;
        let has_elo = r.take(1)?[0];
        let elo_value = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));

        let needed = r.pos + 4 * spec.param_count() + 4;
        if bytes.len() < needed {
            return Err(CheckpointError::Truncated {
                needed,
                actual: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(CheckpointError::Malformed(format!(
                "{} trailing bytes",
                bytes.len() - needed
            )));
        }
        let body = &bytes[..needed - 4];
        let stored = u32::from_le_bytes(bytes[needed - 4..].try_into().expect("4 bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(CheckpointError::Checksum { stored, computed });
        }

        let mut tensors = Vec::new();
        for shape in spec.param_shapes() {
            let n: usize = shape.iter().product();
            let raw = r.take(4 * n)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push(Tensor::new(&shape, data)?);
        }
        Ok(Checkpoint {
            game_id,
            network: Network::from_tensors(spec, tensors)?,
            step,
            elo: (has_elo != 0).then_some(elo_value),
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                needed: end,
                actual: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, ckpt.to_bytes())?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    Checkpoint::from_bytes(&fs::read(path)?)
}
