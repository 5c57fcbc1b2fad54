//! `CSLS` sample-set files.
//!
//! Little-endian layout:
//!
//! ```text
//! "CSLS" | version u32 | model type u8 (0 = rbm, 1 = gmm) | n_samples u64 | latent dim u32
//! samples: ceil(dim / 8) bit-packed bytes each (LSB first) for rbm, one u32 each for gmm
//! JSON-encoded ChainConfig filling the rest of the file
//! ```
//!
//! For gmm files the latent dim field holds the number of components.

use std::io::{Read, Write};
use std::path::Path;

use super::{ChainConfig, LatentKind, LatentSampleSet};
use crate::error::{Error, Result};
use crate::models::{BinaryVector, LatentState};

pub const MAGIC: &[u8; 4] = b"CSLS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 1 + 8 + 4;

pub fn encode(set: &LatentSampleSet) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let (type_byte, dim) = match set.kind() {
        LatentKind::Binary { len } => (0u8, len),
        LatentKind::Component { n_components } => (1u8, n_components),
    };
    let dim32 = u32::try_from(dim).map_err(|_| Error::InvalidParameter("latent dim exceeds u32".into()))?;
    out.push(type_byte);
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&dim32.to_le_bytes());
    for h in set.samples() {
        match h {
            LatentState::Binary(b) => {
                let mut packed = vec![0u8; dim.div_ceil(8)];
                for (i, &bit) in b.bits().iter().enumerate() {
                    packed[i / 8] |= bit << (i % 8);
                }
                out.extend_from_slice(&packed);
            }
            LatentState::Component(k) => out.extend_from_slice(&(*k as u32).to_le_bytes()),
        }
    }
    out.extend_from_slice(serde_json::to_string(set.provenance())?.as_bytes());
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], offset: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < *offset + n {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!("truncated while reading {what}"),
        });
    }
    let s = &bytes[*offset..*offset + n];
    *offset += n;
    Ok(s)
}

pub fn decode(bytes: &[u8]) -> Result<LatentSampleSet> {
    let mut off = 0;
    if take(bytes, &mut off, 4, "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "bad magic, expected \"CSLS\"".into(),
        });
    }
    let version = u32::from_le_bytes(take(bytes, &mut off, 4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let type_byte = take(bytes, &mut off, 1, "model type")?[0];
    let n = u64::from_le_bytes(take(bytes, &mut off, 8, "sample count")?.try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(take(bytes, &mut off, 4, "latent dim")?.try_into().unwrap()) as usize;
    debug_assert_eq!(off, HEADER_LEN);
    let (kind, width) = match type_byte {
        0 => (LatentKind::Binary { len: dim }, dim.div_ceil(8)),
        1 => (LatentKind::Component { n_components: dim }, 4),
        t => {
            return Err(Error::Format {
                offset: 8,
                reason: format!("unknown model type {t}"),
            })
        }
    };
    let mut samples = Vec::with_capacity(n.min(bytes.len()));
    for _ in 0..n {
        let start = off;
        let raw = take(bytes, &mut off, width, "samples")?;
        let h = match kind {
            LatentKind::Binary { len } => {
                let bits = (0..len).map(|i| (raw[i / 8] >> (i % 8)) & 1).collect();
                LatentState::Binary(BinaryVector::new(bits).expect("masked bits"))
            }
            LatentKind::Component { n_components } => {
                let k = u32::from_le_bytes(raw.try_into().unwrap()) as usize;
                if k >= n_components {
                    return Err(Error::Format {
                        offset: start as u64,
                        reason: format!("component {k} out of range"),
                    });
                }
                LatentState::Component(k)
            }
        };
        samples.push(h);
    }
    let provenance: ChainConfig = serde_json::from_slice(&bytes[off..]).map_err(|e| Error::Format {
        offset: off as u64,
        reason: format!("bad JSON footer: {e}"),
    })?;
    LatentSampleSet::from_parts(samples, kind, provenance)
}

pub fn write_to(mut w: impl Write, set: &LatentSampleSet) -> Result<()> {
    w.write_all(&encode(set)?)?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<LatentSampleSet> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: impl AsRef<Path>, set: &LatentSampleSet) -> Result<()> {
    std::fs::write(path, encode(set)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<LatentSampleSet> {
    decode(&std::fs::read(path)?)
}
