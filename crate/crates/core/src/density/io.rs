//! Binary `MGRD` grid files and CSV export.
//!
//! Layout (little endian): magic `MGRD`, u32 version, u8 meaning, f64 sigma,
//! f64 extent, u32 size, u8 case, u32 label length, label bytes, then
//! `size^2` pairs of f64 (re, im) with x varying fastest.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ComplexGrid, GridMeaning};
use crate::coeffs::CoeffCase;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MGRD";
const VERSION: u32 = 1;

pub fn write_grid<W: Write>(grid: &ComplexGrid, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[grid.meaning.tag()])?;
    w.write_all(&grid.sigma.to_le_bytes())?;
    w.write_all(&grid.extent.to_le_bytes())?;
    w.write_all(&(grid.size as u32).to_le_bytes())?;
    w.write_all(&[grid.case.tag()])?;
    w.write_all(&(grid.label.len() as u32).to_le_bytes())?;
    w.write_all(grid.label.as_bytes())?;
    let mut buf = Vec::with_capacity(grid.samples.len() * 16);
    for v in &grid.samples {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::GridFormat(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_grid<R: Read>(mut r: R) -> Result<ComplexGrid> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::GridFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::GridFormat(format!("unsupported version {version}")));
    }
    let [m] = take::<1, _>(&mut r)?;
    let meaning = GridMeaning::from_tag(m).ok_or_else(|| Error::GridFormat(format!("bad meaning tag {m}")))?;
    let sigma = f64::from_le_bytes(take(&mut r)?);
    let extent = f64::from_le_bytes(take(&mut r)?);
    let size = u32::from_le_bytes(take(&mut r)?) as usize;
    if size == 0 || size > 1 << 14 {
        return Err(Error::GridFormat(format!("implausible size {size}")));
    }
    let [c] = take::<1, _>(&mut r)?;
    let case = CoeffCase::from_tag(c).ok_or_else(|| Error::GridFormat(format!("bad case tag {c}")))?;
    let len = u32::from_le_bytes(take(&mut r)?) as usize;
    if len > 1 << 16 {
        return Err(Error::GridFormat("label too long".into()));
    }
    let mut label = vec![0u8; len];
    r.read_exact(&mut label).map_err(|e| Error::GridFormat(format!("truncated label: {e}")))?;
    let label = String::from_utf8(label).map_err(|_| Error::GridFormat("label is not UTF-8".into()))?;
    let mut raw = vec![0u8; size * size * 16];
    r.read_exact(&mut raw).map_err(|e| Error::GridFormat(format!("truncated samples: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::GridFormat("trailing bytes".into()));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().unwrap());
    let samples = raw.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok(ComplexGrid { meaning, case, sigma, extent, size, label, samples, warnings: Vec::new() })
}

/// Rows `w_re,w_im,value_re,value_im`, x fastest.
pub fn write_grid_csv<W: Write>(grid: &ComplexGrid, mut w: W) -> Result<()> {
    writeln!(w, "w_re,w_im,value_re,value_im")?;
    for k in 0..grid.size {
        for j in 0..grid.size {
            let p = grid.point(j, k);
            let v = grid.at(j, k);
            writeln!(w, "{},{},{},{}", p.re, p.im, v.re, v.im)?;
        }
    }
    Ok(())
}
