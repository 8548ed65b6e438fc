//! Flat binary tensor files.
//!
//! ```text
//! magic      8 bytes   b"HVMAAC01"
//! n_header   u32 LE
//! header     n_header × u32 LE     architecture words, caller defined
//! n_tensors  u32 LE
//! per tensor:
//!   rows     u32 LE
//!   cols     u32 LE
//!   data     rows × cols × f64 LE, row-major
//! ```
//!
//! Values are stored with `f64::to_le_bytes`, so a round trip is bit-exact.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HVMAAC01";

pub fn write_tensors<W: Write>(w: &mut W, header: &[u32], tensors: &[&Array2<f64>]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * tensors.iter().map(|t| t.len() + 1).sum::<usize>());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    for h in header {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.nrows() as u32).to_le_bytes());
        buf.extend_from_slice(&(t.ncols() as u32).to_le_bytes());
        for v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)
        .map_err(|e| Error::Checkpoint(format!("write failed: {e}")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn read_tensors<R: Read>(r: &mut R) -> Result<(Vec<u32>, Vec<Array2<f64>>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Checkpoint(format!("read failed: {e}")))?;
    let mut c = Cursor { bytes: &bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let n_header = c.u32()? as usize;
    let header = (0..n_header).map(|_| c.u32()).collect::<Result<Vec<_>>>()?;
    let n_tensors = c.u32()? as usize;
    let mut tensors = Vec::with_capacity(n_tensors.min(1 << 16));
    for _ in 0..n_tensors {
        let rows = c.u32()? as usize;
        let cols = c.u32()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("tensor size overflow".into()))?;
        let raw = c.take(len.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor size overflow".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Array2::from_shape_vec((rows, cols), data).expect("length matches shape"));
    }
    if c.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after last tensor".into()));
    }
    Ok((header, tensors))
}
