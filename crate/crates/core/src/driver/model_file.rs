//! Versioned binary model container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "DMNDREC\0" | version u32 | m n l r k u64
//! U (m*k f64, row-major) | sigma (k) | V (n*k, row-major) | d (r)
//! iteration u64 | history length u64 | history f64s
//! config length u64 | config text (key = value lines)
//! SHA-256 of the config text (32 bytes)
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::driver::ModelState;
use crate::duration::DurationVector;
use crate::error::{Error, Result};
use crate::utility::{FactoredUtilityMatrix, SolverConfig};

pub const MAGIC: &[u8; 8] = b"DMNDREC\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn config_digest(config_text: &str) -> [u8; 32] {
    Sha256::digest(config_text.as_bytes()).into()
}

pub fn encode(state: &ModelState) -> Vec<u8> {
    let x = &state.x;
    let (m, n, k) = (x.num_rows(), x.num_cols(), x.rank());
    let mut buf = Vec::with_capacity(64 + 8 * (m * k + n * k + k + state.d.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for dim in [m, n, state.num_slots, state.d.len(), k] {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    let put = |buf: &mut Vec<u8>, v: f64| buf.extend_from_slice(&v.to_le_bytes());
    for i in 0..m {
        for a in 0..k {
            put(&mut buf, x.u()[(i, a)]);
        }
    }
    for &s in x.sigma() {
        put(&mut buf, s);
    }
    for j in 0..n {
        for a in 0..k {
            put(&mut buf, x.v()[(j, a)]);
        }
    }
    for &d in state.d.as_slice() {
        put(&mut buf, d);
    }
    buf.extend_from_slice(&(state.iteration as u64).to_le_bytes());
    buf.extend_from_slice(&(state.objective_history.len() as u64).to_le_bytes());
    for &f in &state.objective_history {
        put(&mut buf, f);
    }
    let config = state.config.to_text();
    buf.extend_from_slice(&(config.len() as u64).to_le_bytes());
    buf.extend_from_slice(config.as_bytes());
    buf.extend_from_slice(&config_digest(&config));
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat("file is truncated".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        // every counted element occupies at least one byte
        if v > (self.bytes.len() - self.pos) as u64 {
            return Err(Error::ModelFormat("file is truncated".into()));
        }
        Ok(v as usize)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = count
            .checked_mul(8)
            .ok_or_else(|| Error::ModelFormat("array length overflows".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<ModelState> {
    let mut rd = Reader { bytes, pos: 0 };
    if rd.take(MAGIC.len())? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = rd.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let m = rd.len()?;
    let n = rd.len()?;
    let l = rd.u64()? as usize;
    let r = rd.len()?;
    let k = rd.len()?;
    let u = rd.f64s(m.saturating_mul(k))?;
    let sigma = rd.f64s(k)?;
    let v = rd.f64s(n.saturating_mul(k))?;
    let d = rd.f64s(r)?;
    let iteration = rd.u64()? as usize;
    let hist_len = rd.len()?;
    let objective_history = rd.f64s(hist_len)?;
    let cfg_len = rd.len()?;
    let config_text = std::str::from_utf8(rd.take(cfg_len)?)
        .map_err(|_| Error::ModelFormat("config block is not UTF-8".into()))?
        .to_string();
    let digest = rd.take(32)?;
    if rd.pos != bytes.len() {
        return Err(Error::ModelFormat("trailing bytes after digest".into()));
    }
    if digest != config_digest(&config_text) {
        return Err(Error::ModelFormat("config digest mismatch".into()));
    }

    let corrupt = |e: Error| Error::ModelFormat(format!("corrupt contents: {e}"));
    let x = FactoredUtilityMatrix::new(
        DMatrix::from_row_slice(m, k, &u),
        sigma,
        DMatrix::from_row_slice(n, k, &v),
    )
    .map_err(corrupt)?;
    Ok(ModelState {
        x,
        d: DurationVector::new(d).map_err(corrupt)?,
        objective_history,
        iteration,
        config: SolverConfig::from_text(&config_text).map_err(corrupt)?,
        num_slots: l,
    })
}

pub fn save_model(state: &ModelState, path: &Path) -> Result<()> {
    std::fs::write(path, encode(state))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelState> {
    decode(&std::fs::read(path)?)
}
