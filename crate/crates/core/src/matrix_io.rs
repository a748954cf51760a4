//! Matrix blocks in the rawf64 convention: two little-endian `u64`
//! (rows, cols) followed by `rows·cols` little-endian `f64`, column-major.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};

pub fn write_matrix_block<W: Write>(m: &Array2<f64>, w: &mut W) -> Result<()> {
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for col in m.columns() {
        for v in col.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_block<R: Read>(r: &mut R) -> Result<Array2<f64>> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| Error::MalformedHeader {
        line: 1,
        detail: "matrix block dimensions overflow".into(),
    })?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    Array2::from_shape_vec((cols, rows), values)
        .map(|m| m.reversed_axes().as_standard_layout().into_owned())
        .map_err(|e| Error::InvalidDataset(e.to_string()))
}
