//! Length-prefixed binary records carrying samples from a self-play worker
//! to a trainer process.
//!
//! Each record is `u32 payload_len` followed by the payload, all little
//! endian:
//!
//! ```text
//! u32 id_len, id bytes (game id, UTF-8)
//! u32 spec_hash            CRC-32 of the network spec fields
//! u32 count
//! count × sample:
//!     u32 c, u32 h, u32 w, f32[c·h·w] input
//!     u32 n, f32[n] policy, u8[n] mask (0 or 1)
//!     f32 reward
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::buffer::Sample;
use crate::nn::{NetworkSpec, Tensor};

/// Upper bound on a single record, guarding against corrupt length prefixes.
pub const MAX_RECORD_BYTES: usize = 1 << 30;

#[derive(Debug, Error)]
pub enum WireError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record truncated")]
    Truncated,
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub game_id: String,
    pub spec_hash: u32,
    pub samples: Vec<Sample>,
}

pub fn spec_hash(spec: &NetworkSpec) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for f in spec.fields() {
        h.update(&(f as u32).to_le_bytes());
    }
    h.finalize()
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, xs: &[f32]) {
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl SampleRecord {
    pub fn to_payload(&self) -> Vec<u8> {
        let mut out = Vec::new();
        put_u32(&mut out, self.game_id.len());
        out.extend_from_slice(self.game_id.as_bytes());
        out.extend_from_slice(&self.spec_hash.to_le_bytes());
        put_u32(&mut out, self.samples.len());
        for s in &self.samples {
            let shape = s.input.shape();
            for i in 0..3 {
                put_u32(&mut out, shape.get(i).copied().unwrap_or(1));
            }
            put_f32s(&mut out, s.input.data());
            put_u32(&mut out, s.policy.len());
            put_f32s(&mut out, &s.policy);
            out.extend(s.mask.iter().map(|&m| u8::from(m)));
            out.extend_from_slice(&s.reward.to_le_bytes());
        }
        out
    }

    pub fn from_payload(bytes: &[u8]) -> Result<Self, WireError> {
        let mut r = Reader { bytes, at: 0 };
        let id_len = r.u32()? as usize;
        let game_id = String::from_utf8(r.take(id_len)?.to_vec())
            .map_err(|_| WireError::Malformed("game id is not UTF-8".into()))?;
        let spec_hash = r.u32()?;
        let count = r.u32()? as usize;
        let mut samples = Vec::with_capacity(count.min(bytes.len()));
        for _ in 0..count {
            let (c, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
            let input = r.f32s(c.saturating_mul(h).saturating_mul(w))?;
            let input =
                Tensor::new(&[c, h, w], input).map_err(|e| WireError::Malformed(e.to_string()))?;
            let n = r.u32()? as usize;
            let policy = r.f32s(n)?;
            let mask = r
                .take(n)?
                .iter()
                .map(|&b| match b {
                    0 => Ok(false),
                    1 => Ok(true),
                    _ => Err(WireError::Malformed(format!("mask byte {b}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            let reward = r.f32s(1)?[0];
            samples.push(Sample {
                input,
                policy,
                mask,
                reward,
            });
        }
        if r.at != bytes.len() {
            return Err(WireError::Malformed(format!(
                "{} trailing bytes",
                bytes.len() - r.at
            )));
        }
        Ok(Self {
            game_id,
            spec_hash,
            samples,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.at.checked_add(n).ok_or(WireError::Truncated)?;
        let out = self.bytes.get(self.at..end).ok_or(WireError::Truncated)?;
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, WireError> {
        let raw = self.take(n.checked_mul(4).ok_or(WireError::Truncated)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn write_record<W: Write>(out: &mut W, record: &SampleRecord) -> Result<(), WireError> {
    let payload = record.to_payload();
    if payload.len() > MAX_RECORD_BYTES {
        return Err(WireError::Malformed("record too large".into()));
    }
    out.write_all(&(payload.len() as u32).to_le_bytes())?;
    out.write_all(&payload)?;
    Ok(())
}

/// Reads the next record; `Ok(None)` at a clean end of stream.
pub fn read_record<R: Read>(input: &mut R) -> Result<Option<SampleRecord>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match input.read(&mut len[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(WireError::Truncated),
            n => got += n,
        }
    }
    let len = u32::from_le_bytes(len) as usize;
    if len > MAX_RECORD_BYTES {
        return Err(WireError::Malformed(format!("record of {len} bytes")));
    }
    let mut payload = vec![0u8; len];
    input.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => WireError::Io(e),
    })?;
    SampleRecord::from_payload(&payload).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> SampleRecord {
        SampleRecord {
            game_id: "connect4x4k3".into(),
            spec_hash: 0xdead_beef,
            samples: vec![
                Sample {
                    input: Tensor::new(&[1, 2, 2], vec![1.0, 0.0, -0.5, 2.0]).unwrap(),
                    policy: vec![0.25, 0.75, 0.0],
                    mask: vec![true, true, false],
                    reward: -1.0,
                },
                Sample {
                    input: Tensor::zeros(&[3, 1, 1]),
                    policy: vec![1.0],
                    mask: vec![true],
                    reward: 0.0,
                },
            ],
        }
    }

    #[test]
    fn stream_round_trip() {
        let mut buf = Vec::new();
        write_record(&mut buf, &record()).unwrap();
        write_record(&mut buf, &record()).unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_record(&mut r).unwrap(), Some(record()));
        assert_eq!(read_record(&mut r).unwrap(), Some(record()));
        assert_eq!(read_record(&mut r).unwrap(), None);
    }

    #[test]
    fn damaged_streams_are_rejected() {
        let mut buf = Vec::new();
        write_record(&mut buf, &record()).unwrap();
        for cut in [2, 5, buf.len() - 1] {
            assert!(
                matches!(read_record(&mut &buf[..cut]), Err(WireError::Truncated)),
                "{cut}"
            );
        }
        let mut bad_mask = record().to_payload();
        let mask_at = bad_mask.len() - 4 - 1;
        bad_mask[mask_at] = 7;
        assert!(matches!(
            SampleRecord::from_payload(&bad_mask),
            Err(WireError::Malformed(_))
        ));
        let mut trailing = record().to_payload();
        trailing.push(0);
        assert!(matches!(
            SampleRecord::from_payload(&trailing),
            Err(WireError::Malformed(_))
        ));
    }

    #[test]
    fn spec_hash_tracks_the_spec() {
        let a = NetworkSpec::from_fields([3, 16, 2, 3, 1, 2, 16]);
        let b = NetworkSpec::from_fields([3, 16, 3, 3, 1, 2, 16]);
        assert_eq!(spec_hash(&a), spec_hash(&a.clone()));
        assert_ne!(spec_hash(&a), spec_hash(&b));
    }
}
