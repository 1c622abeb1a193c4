//! Dense input matrices and their on-disk formats.
//!
//! Two formats are understood: CSV with one point per row and an optional
//! header, and a raw little-endian binary format:
//!
//! ```text
//! "HMAPMAT1" | u64 n_points | u64 n_dims | n_points * n_dims f32 (row-major)
//! ```

use std::fs;
use std::io::Read;
use std::path::Path;

use crate::error::{HumapError, Result};

pub const MATRIX_MAGIC: &[u8; 8] = b"HMAPMAT1";
const HEADER_LEN: usize = 24;

/// Row-major `n_points x n_dims` matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n_points: usize,
    n_dims: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "csv" => Some(MatrixFormat::Csv),
            "bin" | "binary" | "hmapmat" => Some(MatrixFormat::Binary),
            _ => None,
        }
    }
}

impl DataMatrix {
    pub fn new(n_points: usize, n_dims: usize, values: Vec<f64>) -> Result<Self> {
        if n_points == 0 || n_dims == 0 {
            return Err(HumapError::input("matrix must have at least one point and one dimension"));
        }
        let expected = n_points
            .checked_mul(n_dims)
            .ok_or_else(|| HumapError::input("matrix dimensions overflow"))?;
        if values.len() != expected {
            return Err(HumapError::input(format!(
                "expected {expected} values for {n_points}x{n_dims}, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(HumapError::input(format!(
                "non-finite value at point {}, dimension {}",
                pos / n_dims,
                pos % n_dims
            )));
        }
        Ok(DataMatrix { n_points, n_dims, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_dims) {
            return Err(HumapError::input(format!(
                "row {i} has {} values, expected {n_dims}",
                rows[i].len()
            )));
        }
        Self::new(rows.len(), n_dims, rows.concat())
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    /// Euclidean distance between rows `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.row(i), self.row(j))
    }

    /// New matrix holding the given rows, in order.
    pub fn select_rows(&self, ids: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(ids.len() * self.n_dims);
        for &id in ids {
            if id >= self.n_points {
                return Err(HumapError::param(format!("row {id} out of range")));
            }
            values.extend_from_slice(self.row(id));
        }
        Self::new(ids.len(), self.n_dims, values)
    }

    /// Parse CSV text. The first record is treated as a header when any of
    /// its fields fails to parse as a number.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut values = Vec::new();
        let mut n_dims = 0;
        let mut n_points = 0;
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| HumapError::format(format!("csv: {e}")))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(HumapError::format(format!("csv record {}: {e}", line + 1)));
                }
            };
            if n_points == 0 {
                n_dims = row.len();
            } else if row.len() != n_dims {
                return Err(HumapError::format(format!(
                    "csv record {} has {} fields, expected {n_dims}",
                    line + 1,
                    row.len()
                )));
            }
            values.extend(row);
            n_points += 1;
        }
        Self::new(n_points, n_dims, values)
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_csv_reader(bytes)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_points {
            let row: Vec<String> = self.row(i).iter().map(f64::to_string).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Decode the `HMAPMAT1` binary format. Values are widened from f32.
    pub fn decode_binary(bytes: &[u8]) -> Result<Self> {
        let (n_points, n_dims, body) = decode_matrix_header(bytes)?;
        let values = body
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Self::new(n_points, n_dims, values)
    }

    /// Encode in the `HMAPMAT1` binary format. Values are narrowed to f32.
    pub fn encode_binary(&self) -> Vec<u8> {
        encode_matrix_f32(self.n_points, self.n_dims, &self.values)
    }

    pub fn load(path: &Path, format: Option<MatrixFormat>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let format = format.unwrap_or_else(|| {
            let by_ext = path.extension().and_then(|e| e.to_str()).and_then(MatrixFormat::parse);
            match by_ext {
                Some(f) => f,
                None if bytes.starts_with(MATRIX_MAGIC) => MatrixFormat::Binary,
                None => MatrixFormat::Csv,
            }
        });
        match format {
            MatrixFormat::Csv => Self::from_csv_bytes(&bytes),
            MatrixFormat::Binary => Self::decode_binary(&bytes),
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Validate an `HMAPMAT1` header and return `(n_points, n_dims, payload)`.
pub(crate) fn decode_matrix_header(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MATRIX_MAGIC {
        return Err(HumapError::format("missing HMAPMAT1 header"));
    }
    let n_points = read_u64(&bytes[8..16]);
    let n_dims = read_u64(&bytes[16..24]);
    let payload = n_points
        .checked_mul(n_dims)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| usize::try_from(c).ok())
        .ok_or_else(|| HumapError::format("matrix dimensions overflow"))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != payload {
        return Err(HumapError::format(format!(
            "payload is {} bytes, header declares {payload}",
            body.len()
        )));
    }
    Ok((n_points as usize, n_dims as usize, body))
}

pub(crate) fn encode_matrix_f32(n_points: usize, n_dims: usize, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(n_points as u64).to_le_bytes());
    out.extend_from_slice(&(n_dims as u64).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn read_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b.try_into().expect("8-byte slice"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let a = DataMatrix::from_csv_bytes(b"x,y\n1,2\n3,4\n").unwrap();
        let b = DataMatrix::from_csv_bytes(b"1, 2\r\n3,4\n\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_points(), 2);
        assert_eq!(a.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn csv_rejects_ragged_and_nan() {
        assert!(DataMatrix::from_csv_bytes(b"1,2\n3\n").is_err());
        assert!(DataMatrix::from_csv_bytes(b"1,2\nNaN,4\n").is_err());
        assert!(DataMatrix::from_csv_bytes(b"a,b\n").is_err());
    }

    #[test]
    fn binary_roundtrip_is_exact_for_f32_values() {
        let m = DataMatrix::new(2, 3, vec![0.5, -1.0, 2.25, 3.0, 1e-3f32 as f64, 7.0]).unwrap();
        let bytes = m.encode_binary();
        assert_eq!(&bytes[..8], b"HMAPMAT1");
        assert_eq!(bytes.len(), 24 + 6 * 4);
        assert_eq!(DataMatrix::decode_binary(&bytes).unwrap(), m);
    }

    #[test]
    fn binary_rejects_truncated_and_oversized_headers() {
        let m = DataMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let bytes = m.encode_binary();
        assert!(DataMatrix::decode_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut huge = bytes.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(DataMatrix::decode_binary(&huge).is_err());
        assert!(DataMatrix::decode_binary(b"HMAPMAT").is_err());
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(DataMatrix::new(0, 3, vec![]).is_err());
        assert!(DataMatrix::from_rows(&[]).is_err());
    }
}
