//! Interchange formats.
//!
//! CSV: a header line `# D=<int> n=<int> C=<int>`, then one sample per line:
//! `D` comma-separated decimal floats followed by an integer label.
//!
//! rawf64: three little-endian `u64` (D, n, C), then `D·n` little-endian
//! `f64` in column-major order (sample by sample), then `n` little-endian
//! `u32` labels.
//!
//! Error positions are 1-based file lines and 1-based CSV fields.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use super::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    RawF64,
}

impl Format {
    /// `.csv` is CSV, anything else rawf64.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::RawF64,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "rawf64" => Ok(Format::RawF64),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: Format) -> Result<LabeledDataset> {
    let file = File::open(path)?;
    match format {
        Format::Csv => read_csv(BufReader::new(file)),
        Format::RawF64 => read_rawf64(BufReader::new(file)),
    }
}

pub fn save_dataset(ds: &LabeledDataset, path: &Path, format: Format) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        Format::Csv => write_csv(ds, &mut w)?,
        Format::RawF64 => write_rawf64(ds, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<(usize, usize, usize)> {
    let bad = |detail: &str| Error::MalformedHeader {
        line: 1,
        detail: detail.to_string(),
    };
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| bad("expected '# D=<int> n=<int> C=<int>'"))?;
    let mut dims = [None; 3];
    for token in body.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| bad(token))?;
        let slot = match key {
            "D" => 0,
            "n" => 1,
            "C" => 2,
            _ => return Err(bad(&format!("unknown key {key:?}"))),
        };
        let v: usize = value.parse().map_err(|_| bad(&format!("bad value for {key}")))?;
        if dims[slot].replace(v).is_some() {
            return Err(bad(&format!("duplicate key {key}")));
        }
    }
    match dims {
        [Some(d), Some(n), Some(c)] => Ok((d, n, c)),
        _ => Err(bad("missing D, n or C")),
    }
}

pub fn read_csv<R: BufRead>(reader: R) -> Result<LabeledDataset> {
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.ok_or_else(|| Error::MalformedHeader {
        line: 1,
        detail: "empty file".into(),
    })?;
    let (d, n, c) = parse_header(&header)?;
    if d == 0 {
        return Err(Error::MalformedHeader {
            line: 1,
            detail: "D must be positive".into(),
        });
    }
    let mut values = Vec::with_capacity(d * n);
    let mut raw_labels = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() == d {
            return Err(Error::MissingLabel { line: line_no });
        }
        if fields.len() != d + 1 {
            return Err(Error::FieldCount {
                line: line_no,
                expected: d + 1,
                found: fields.len(),
            });
        }
        for (col, f) in fields[..d].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::ParseValue {
                line: line_no,
                col: col + 1,
                text: f.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    line: line_no,
                    col: col + 1,
                });
            }
            values.push(v);
        }
        let label: i64 = fields[d].parse().map_err(|_| Error::ParseValue {
            line: line_no,
            col: d + 1,
            text: fields[d].to_string(),
        })?;
        raw_labels.push(label);
    }
    if raw_labels.len() != n {
        return Err(Error::SampleCount {
            declared: n,
            found: raw_labels.len(),
        });
    }
    build(d, n, c, values, &raw_labels)
}

fn build(d: usize, n: usize, c: usize, column_major: Vec<f64>, raw_labels: &[i64]) -> Result<LabeledDataset> {
    let mut distinct = raw_labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != c {
        return Err(Error::EmptyClass {
            declared: c,
            found: distinct.len(),
        });
    }
    // column-major payload == row-major (n × D), transposed into D × n
    let x = Array2::from_shape_vec((n, d), column_major)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    LabeledDataset::from_raw_labels(x, raw_labels)
}

pub fn write_csv<W: Write>(ds: &LabeledDataset, w: &mut W) -> Result<()> {
    writeln!(
        w,
        "# D={} n={} C={}",
        ds.n_features(),
        ds.n_samples(),
        ds.n_classes()
    )?;
    let mut line = String::new();
    for (i, col) in ds.x().columns().into_iter().enumerate() {
        line.clear();
        for v in col.iter() {
            // shortest representation that parses back to the same bits
            line.push_str(&format!("{v:?},"));
        }
        line.push_str(&ds.class_names()[ds.labels()[i] as usize - 1].to_string());
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_rawf64<R: Read>(mut reader: R) -> Result<LabeledDataset> {
    let mut header = [0u8; 24];
    reader.read_exact(&mut header).map_err(|_| Error::MalformedHeader {
        line: 1,
        detail: "rawf64 header shorter than 24 bytes".into(),
    })?;
    let field = |i: usize| u64::from_le_bytes(header[i * 8..i * 8 + 8].try_into().unwrap());
    let (d, n, c) = (field(0), field(1), field(2));
    if d == 0 {
        return Err(Error::MalformedHeader {
            line: 1,
            detail: "D must be positive".into(),
        });
    }
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    let expected = d
        .checked_mul(n)
        .and_then(|dn| dn.checked_mul(8))
        .and_then(|b| b.checked_add(n.checked_mul(4)?))
        .ok_or_else(|| Error::MalformedHeader {
            line: 1,
            detail: "dimensions overflow".into(),
        })?;
    if payload.len() as u64 != expected {
        return Err(Error::PayloadSize {
            expected: expected + 24,
            found: payload.len() as u64 + 24,
        });
    }
    let (d, n, c) = (d as usize, n as usize, c as usize);
    let (floats, labels) = payload.split_at(8 * d * n);
    let mut values = Vec::with_capacity(d * n);
    for (i, chunk) in floats.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            // report sample as "line" and band as "column", both 1-based
            return Err(Error::NonFiniteValue {
                line: i / d + 1,
                col: i % d + 1,
            });
        }
        values.push(v);
    }
    let raw: Vec<i64> = labels
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()) as i64)
        .collect();
    build(d, n, c, values, &raw)
}

pub fn write_rawf64<W: Write>(ds: &LabeledDataset, w: &mut W) -> Result<()> {
    for v in [ds.n_features(), ds.n_samples(), ds.n_classes()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for col in ds.x().columns() {
        for v in col.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for &l in ds.labels() {
        let name = ds.class_names()[l as usize - 1];
        let raw = u32::try_from(name).map_err(|_| Error::LabelNotRepresentable { label: name })?;
        w.write_all(&raw.to_le_bytes())?;
    }
    Ok(())
}
