//! Binary field dumps.
//!
//! Layout, all little-endian: magic `GFFD`, `u32` version, `u32` d, `d × u64`
//! window extents, `u64` sample count, `u64` seed, then `count × |W|` values
//! as `f64` in row-major window order, one sample after another.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GFFD";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DumpHeader {
    pub extents: Vec<usize>,
    pub count: u64,
    pub seed: u64,
}

impl DumpHeader {
    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn sites(&self) -> usize {
        self.extents.iter().product()
    }
}

pub fn write_header<W: Write>(w: &mut W, h: &DumpHeader) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(h.dim() as u32).to_le_bytes())?;
    for &e in &h.extents {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    w.write_all(&h.count.to_le_bytes())?;
    w.write_all(&h.seed.to_le_bytes())?;
    Ok(())
}

pub fn write_values<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_header<R: Read>(r: &mut R) -> Result<DumpHeader> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m)?;
    if &m != MAGIC {
        return Err(Error::InvalidArgument("not a field dump".into()));
    }
    let v = read_u32(r)?;
    if v != VERSION {
        return Err(Error::InvalidArgument(format!("unsupported dump version {v}")));
    }
    let d = read_u32(r)? as usize;
    let extents = (0..d).map(|_| read_u64(r).map(|e| e as usize)).collect::<Result<Vec<_>>>()?;
    let count = read_u64(r)?;
    let seed = read_u64(r)?;
    Ok(DumpHeader { extents, count, seed })
}

/// Reads a whole dump.
pub fn read_dump<R: Read>(r: &mut R) -> Result<(DumpHeader, Vec<Vec<f64>>)> {
    let h = read_header(r)?;
    let n = h.sites();
    let mut samples = Vec::with_capacity(h.count as usize);
    let mut buf = vec![0u8; n * 8];
    for _ in 0..h.count {
        r.read_exact(&mut buf)?;
        samples.push(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
    }
    Ok((h, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let h = DumpHeader { extents: vec![2, 3], count: 2, seed: 77 };
        let a: Vec<f64> = (0..6).map(|i| i as f64 * 0.5 - 1.0).collect();
        let b: Vec<f64> = a.iter().map(|x| -x).collect();
        let mut out = Vec::new();
        write_header(&mut out, &h).unwrap();
        write_values(&mut out, &a).unwrap();
        write_values(&mut out, &b).unwrap();
        assert_eq!(out.len(), 4 + 4 + 4 + 16 + 16 + 96);
        let (h2, s) = read_dump(&mut out.as_slice()).unwrap();
        assert_eq!(h2, h);
        assert_eq!(s, vec![a, b]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_header(&mut &b"nope1234"[..]).is_err());
    }
}
