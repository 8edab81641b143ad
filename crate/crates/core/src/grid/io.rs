//! Flat binary field layout: `d` (u64 LE), `n` (u64 LE), `L` (f64 LE), then
//! `n^d` interleaved `(re, im)` f64 LE pairs in row-major order.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{ComplexField, Grid, GridError};

pub fn write_field<W: Write>(mut out: W, field: &ComplexField) -> Result<(), GridError> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(24 + 16 * grid.len());
    buf.extend_from_slice(&(grid.d() as u64).to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u64).to_le_bytes());
    buf.extend_from_slice(&grid.extent().to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<ComplexField, GridError> {
    let mut header = [0u8; 24];
    input.read_exact(&mut header)?;
    let word = |i: usize| -> [u8; 8] { header[8 * i..8 * i + 8].try_into().unwrap() };
    let d = u64::from_le_bytes(word(0));
    let n = u64::from_le_bytes(word(1));
    let extent = f64::from_le_bytes(word(2));
    if d > 3 || n > 1 << 20 {
        return Err(GridError::Format(format!("implausible header d = {d}, n = {n}")));
    }
    let grid = Grid::new(d as usize, extent, n as usize)?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != 16 * grid.len() {
        return Err(GridError::Format(format!("expected {} payload bytes, found {}", 16 * grid.len(), body.len())));
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    ComplexField::from_values(&grid, values)
}
