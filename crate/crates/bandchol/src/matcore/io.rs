//! Plain-text and binary matrix files.
//!
//! Square matrices: text is a header line `p` followed by `p` rows of
//! whitespace-separated values; binary is a little-endian `u64` dimension
//! followed by `p²` little-endian `f64` in row-major order.
//!
//! Data matrices use the header `n p` (text) or two `u64` dimensions (binary).
//! Text output uses the shortest representation that reads back to the same
//! `f64`, so both formats round-trip exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{DataMatrix, SymMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Text,
    Binary,
}

impl MatrixFormat {
    /// `.bin` files are binary, everything else is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Text,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Text => "txt",
            MatrixFormat::Binary => "bin",
        }
    }
}

fn write_rows<W: Write>(w: &mut W, nrows: usize, ncols: usize, get: impl Fn(usize, usize) -> f64) -> Result<()> {
    let mut line = String::new();
    for i in 0..nrows {
        line.clear();
        for j in 0..ncols {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&get(i, j).to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse(format!("missing {what} in header")))?
        .parse::<usize>()
        .map_err(|e| Error::Parse(format!("bad {what} in header: {e}")))
}

fn read_text_body<R: BufRead>(lines: &mut std::io::Lines<R>, nrows: usize, ncols: usize) -> Result<Mat<f64>> {
    let mut data = Vec::with_capacity(nrows * ncols);
    for line in lines {
        let line = line?;
        for tok in line.split_whitespace() {
            data.push(tok.parse::<f64>().map_err(|e| Error::Parse(format!("bad value {tok:?}: {e}")))?);
        }
    }
    if data.len() != nrows * ncols {
        return Err(Error::Parse(format!("expected {} values, found {}", nrows * ncols, data.len())));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| data[i * ncols + j]))
}

fn header_line<R: BufRead>(lines: &mut std::io::Lines<R>) -> Result<String> {
    for line in lines.by_ref() {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(line);
        }
    }
    Err(Error::Parse("empty file".into()))
}

fn read_u64<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    usize::try_from(u64::from_le_bytes(b)).map_err(|_| Error::Parse("dimension overflows usize".into()))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse(format!("{} trailing bytes", rest.len())));
    }
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn write_f64s<W: Write>(w: &mut W, nrows: usize, ncols: usize, get: impl Fn(usize, usize) -> f64) -> Result<()> {
    for i in 0..nrows {
        for j in 0..ncols {
            w.write_all(&get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Writes a square matrix.
pub fn write_square<W: Write>(w: &mut W, m: &SymMatrix, format: MatrixFormat) -> Result<()> {
    let p = m.dim();
    match format {
        MatrixFormat::Text => {
            writeln!(w, "{p}")?;
            write_rows(w, p, p, |i, j| m.get(i, j))
        }
        MatrixFormat::Binary => {
            w.write_all(&(p as u64).to_le_bytes())?;
            write_f64s(w, p, p, |i, j| m.get(i, j))
        }
    }
}

/// Reads a square matrix; it is tagged symmetric when its entries are.
pub fn read_square<R: Read>(r: R, format: MatrixFormat) -> Result<SymMatrix> {
    let mat = match format {
        MatrixFormat::Text => {
            let mut lines = BufReader::new(r).lines();
            let header = header_line(&mut lines)?;
            let mut toks = header.split_whitespace();
            let p = parse_usize(toks.next(), "dimension")?;
            if toks.next().is_some() {
                return Err(Error::Parse("square matrix header must hold a single dimension".into()));
            }
            read_text_body(&mut lines, p, p)?
        }
        MatrixFormat::Binary => {
            let mut r = r;
            let p = read_u64(&mut r)?;
            let v = read_f64s(&mut r, p * p)?;
            Mat::from_fn(p, p, |i, j| v[i * p + j])
        }
    };
    SymMatrix::from_symmetric(mat.clone()).or_else(|_| SymMatrix::general(mat))
}

/// Writes an `n × p` data matrix.
pub fn write_data<W: Write>(w: &mut W, z: &DataMatrix, format: MatrixFormat) -> Result<()> {
    let (n, p) = (z.n(), z.p());
    match format {
        MatrixFormat::Text => {
            writeln!(w, "{n} {p}")?;
            write_rows(w, n, p, |i, j| z.get(i, j))
        }
        MatrixFormat::Binary => {
            w.write_all(&(n as u64).to_le_bytes())?;
            w.write_all(&(p as u64).to_le_bytes())?;
            write_f64s(w, n, p, |i, j| z.get(i, j))
        }
    }
}

pub fn read_data<R: Read>(r: R, format: MatrixFormat) -> Result<DataMatrix> {
    let mat = match format {
        MatrixFormat::Text => {
            let mut lines = BufReader::new(r).lines();
            let header = header_line(&mut lines)?;
            let mut toks = header.split_whitespace();
            let n = parse_usize(toks.next(), "row count")?;
            let p = parse_usize(toks.next(), "column count")?;
            read_text_body(&mut lines, n, p)?
        }
        MatrixFormat::Binary => {
            let mut r = r;
            let n = read_u64(&mut r)?;
            let p = read_u64(&mut r)?;
            let v = read_f64s(&mut r, n * p)?;
            Mat::from_fn(n, p, |i, j| v[i * p + j])
        }
    };
    DataMatrix::new(mat)
}

pub fn save_square(path: &Path, m: &SymMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_square(&mut w, m, MatrixFormat::from_path(path))?;
    w.flush()?;
    Ok(())
}

pub fn load_square(path: &Path) -> Result<SymMatrix> {
    read_square(File::open(path)?, MatrixFormat::from_path(path))
}

pub fn save_data(path: &Path, z: &DataMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_data(&mut w, z, MatrixFormat::from_path(path))?;
    w.flush()?;
    Ok(())
}

pub fn load_data(path: &Path) -> Result<DataMatrix> {
    read_data(File::open(path)?, MatrixFormat::from_path(path))
}
