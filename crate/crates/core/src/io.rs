//! Snapshot file formats.
//!
//! CSV: one row per sensor, one column per snapshot, entries written as
//! `re+imj`. Binary: magic `SNAP`, `u32` N, `u32` T (little endian), then
//! row-major little-endian `f64` pairs `(re, im)`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{DoaError, Result};
use crate::linalg::CMatrix;

const MAGIC: &[u8; 4] = b"SNAP";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    Binary,
}

impl SnapshotFormat {
    /// `.bin` and `.snap` files are binary, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("snap") => SnapshotFormat::Binary,
            _ => SnapshotFormat::Csv,
        }
    }
}

/// Formats a value as `re+imj` with round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}j", z.re, sign, z.im.abs())
}

/// Parses `a`, `bj`, `a+bj` or `a-bj` (also accepting `i` for the imaginary
/// unit and exponents such as `1e-3+2E+1j`).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    let bad = || DoaError::Parse(format!("invalid complex number {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
    let Some(body) = t.strip_suffix(['j', 'i', 'J', 'I']) else {
        return Ok(Complex64::new(num(t)?, 0.0));
    };
    // split at the last sign that is not part of an exponent or leading
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let im = match &body[i..] {
                "+" => 1.0,
                "-" => -1.0,
                x => num(x)?,
            };
            Ok(Complex64::new(num(&body[..i])?, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                x => num(x)?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}

pub fn write_csv<W: Write>(x: &CMatrix, mut out: W) -> Result<()> {
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols()).map(|j| format_complex(x[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<CMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (ln, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(parse_complex)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| DoaError::Parse(format!("line {}: {e}", ln + 1)))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(DoaError::Parse(format!(
                    "line {} has {} entries, expected {}",
                    ln + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DoaError::Parse("empty snapshot file".into()));
    }
    let (n, t) = (rows.len(), rows[0].len());
    Ok(CMatrix::from_fn(n, t, |i, j| rows[i][j]))
}

pub fn write_binary<W: Write>(x: &CMatrix, mut out: W) -> Result<()> {
    let dim = |d: usize| u32::try_from(d).map_err(|_| DoaError::domain("dimension exceeds u32"));
    out.write_all(MAGIC)?;
    out.write_all(&dim(x.nrows())?.to_le_bytes())?;
    out.write_all(&dim(x.ncols())?.to_le_bytes())?;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out.write_all(&x[(i, j)].re.to_le_bytes())?;
            out.write_all(&x[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<CMatrix> {
    let mut head = [0u8; 12];
    input
        .read_exact(&mut head)
        .map_err(|_| DoaError::Parse("truncated snapshot header".into()))?;
    if &head[..4] != MAGIC {
        return Err(DoaError::Parse("missing SNAP magic".into()));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
    let t = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != n * t * 16 {
        return Err(DoaError::Parse(format!("expected {} payload bytes, found {}", n * t * 16, body.len())));
    }
    let val = |k: usize| f64::from_le_bytes(body[8 * k..8 * k + 8].try_into().unwrap());
    Ok(CMatrix::from_fn(n, t, |i, j| {
        let k = 2 * (i * t + j);
        Complex64::new(val(k), val(k + 1))
    }))
}

pub fn write_snapshots(path: &Path, x: &CMatrix, format: SnapshotFormat) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        SnapshotFormat::Csv => write_csv(x, &mut buf)?,
        SnapshotFormat::Binary => write_binary(x, &mut buf)?,
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads a snapshot file, detecting the binary format by its magic bytes.
pub fn read_snapshots(path: &Path) -> Result<CMatrix> {
    let bytes = std::fs::read(path).map_err(|e| DoaError::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        read_binary(bytes.as_slice())
    } else {
        read_csv(bytes.as_slice())
    }
}
