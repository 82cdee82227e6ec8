//! Binary cache for generated banks.
//!
//! Layout (little endian): the 8-byte magic `SAMBANK1`, a 32-byte SHA-256
//! digest of the generating inputs, the bank count, then for every bank its
//! interval index, transition, element count and elements. An element is
//! `E, Z, λ`, its mark count and the marks as `time, n₁, n₂, n₃`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{LikelihoodSurface, Transition, XiBank, XiElement};
use crate::bridge::PoissonMark;
use crate::model::{ParameterBox, TransformedModel};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SAMBANK1";

/// Digest of everything a bank set is regenerated from.
pub fn content_hash(
    seed: u64,
    model: &str,
    bounds: &ParameterBox,
    transitions: &[Transition],
    size: usize,
) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((model.len() as u64).to_le_bytes());
    h.update(model.as_bytes());
    h.update((bounds.dim() as u64).to_le_bytes());
    for (&lo, &hi) in bounds.lower().iter().zip(bounds.upper()) {
        h.update(lo.to_le_bytes());
        h.update(hi.to_le_bytes());
    }
    h.update((transitions.len() as u64).to_le_bytes());
    for tr in transitions {
        h.update(tr.from.to_le_bytes());
        h.update(tr.to.to_le_bytes());
        h.update(tr.dt.to_le_bytes());
    }
    h.update((size as u64).to_le_bytes());
    h.finalize().into()
}

pub fn encode_banks(hash: &[u8; 32], banks: &[XiBank]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(hash);
    out.extend_from_slice(&(banks.len() as u64).to_le_bytes());
    for bank in banks {
        out.extend_from_slice(&bank.interval_index.to_le_bytes());
        for v in [bank.transition.from, bank.transition.to, bank.transition.dt] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(bank.elements.len() as u64).to_le_bytes());
        for xi in &bank.elements {
            for v in [xi.e, xi.z, xi.lambda] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&(xi.marks.len() as u64).to_le_bytes());
            for mk in &xi.marks {
                out.extend_from_slice(&mk.time.to_le_bytes());
                for n in mk.normals {
                    out.extend_from_slice(&n.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Cache(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Cache(format!("non-finite value before byte {}", self.pos)))
        }
    }

    /// A count whose items need at least `item_bytes` each.
    fn count(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        let left = (self.buf.len() - self.pos) as u64;
        if n > left / item_bytes as u64 {
            return Err(Error::Cache(format!("count {n} exceeds remaining {left} bytes")));
        }
        Ok(n as usize)
    }
}

/// Parses and validates a cache file image.
pub fn decode_banks(bytes: &[u8]) -> Result<([u8; 32], Vec<XiBank>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let hash: [u8; 32] = r.take(32)?.try_into().unwrap();
    let n_banks = r.count(40)?;
    let mut banks = Vec::with_capacity(n_banks);
    for _ in 0..n_banks {
        let interval_index = r.u64()?;
        let transition = Transition { from: r.f64()?, to: r.f64()?, dt: r.f64()? };
        if transition.dt.is_nan() || transition.dt <= 0.0 {
            return Err(Error::Cache(format!("interval {interval_index}: nonpositive duration")));
        }
        let n_elems = r.count(32)?;
        let mut elements = Vec::with_capacity(n_elems);
        for _ in 0..n_elems {
            let (e, z, lambda) = (r.f64()?, r.f64()?, r.f64()?);
            if !(e > 0.0 && lambda >= 0.0) {
                return Err(Error::Cache(format!("interval {interval_index}: invalid element header")));
            }
            let n_marks = r.count(32)?;
            let mut marks = Vec::with_capacity(n_marks);
            let mut prev = 0.0;
            for _ in 0..n_marks {
                let time = r.f64()?;
                if !(time > prev && time < transition.dt) {
                    return Err(Error::Cache(format!("interval {interval_index}: mark times out of order")));
                }
                prev = time;
                marks.push(PoissonMark { time, normals: [r.f64()?, r.f64()?, r.f64()?] });
            }
            elements.push(XiElement { e, z, lambda, marks });
        }
        banks.push(XiBank { interval_index, transition, elements });
    }
    if r.pos != bytes.len() {
        return Err(Error::Cache(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok((hash, banks))
}

/// Loads banks from `path` when its digest matches the inputs, otherwise
/// generates them and rewrites the file.
pub fn load_or_build(
    path: &Path,
    model: Arc<dyn TransformedModel>,
    bounds: ParameterBox,
    transitions: &[Transition],
    seed: u64,
    size: usize,
) -> Result<LikelihoodSurface> {
    let hash = content_hash(seed, model.name(), &bounds, transitions, size);
    if let Ok(bytes) = fs::read(path) {
        if let Ok((stored, banks)) = decode_banks(&bytes) {
            if stored == hash {
                return LikelihoodSurface::from_banks(model, bounds, banks);
            }
        }
    }
    let surface = LikelihoodSurface::build(model, bounds, transitions, seed, size)?;
    fs::write(path, encode_banks(&hash, surface.banks()))?;
    Ok(surface)
}
