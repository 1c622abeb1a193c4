//! Embedding exports and landmark selection files.

use std::fmt::Write as _;

use crate::data::encode_matrix_f32;
use crate::embed::Embedding;
use crate::error::{HumapError, Result};

pub const EMBEDDING_HEADER: [&str; 5] = ["point_id", "x", "y", "fixed_flag", "source_level"];

/// CSV with one row per point. Coordinates use the shortest representation
/// that round-trips exactly.
pub fn embedding_to_csv(e: &Embedding) -> String {
    let mut out = EMBEDDING_HEADER.join(",");
    out.push('\n');
    for ((id, c), &fixed) in e.point_ids.iter().zip(&e.coords).zip(&e.fixed_mask) {
        let _ = writeln!(out, "{id},{:?},{:?},{},{}", c[0], c[1], u8::from(fixed), e.level);
    }
    out
}

/// Coordinates as an `HMAPMAT1` n×2 matrix of f32.
pub fn embedding_to_binary(e: &Embedding) -> Vec<u8> {
    let flat: Vec<f64> = e.coords.iter().flat_map(|c| [c[0], c[1]]).collect();
    encode_matrix_f32(e.len(), 2, &flat)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| HumapError::format(format!("line {line}: bad {}", EMBEDDING_HEADER[i])))
}

/// Parse a CSV written by [`embedding_to_csv`]. `theta` is not part of the
/// file and is supplied by the caller.
pub fn decode_embedding_csv(bytes: &[u8], theta: f64) -> Result<Embedding> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = rdr.headers().map_err(|e| HumapError::format(e.to_string()))?;
    if header.iter().ne(EMBEDDING_HEADER) {
        return Err(HumapError::format("embedding header must be point_id,x,y,fixed_flag,source_level"));
    }
    let mut e = Embedding {
        coords: Vec::new(),
        fixed_mask: Vec::new(),
        theta,
        level: 0,
        point_ids: Vec::new(),
        spectral_fallback: false,
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|err| HumapError::format(err.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != EMBEDDING_HEADER.len() {
            return Err(HumapError::format(format!("line {line}: expected 5 fields")));
        }
        let id: usize = field(&rec, 0, line)?;
        let x: f64 = field(&rec, 1, line)?;
        let y: f64 = field(&rec, 2, line)?;
        let fixed = match rec[3].trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            _ => return Err(HumapError::format(format!("line {line}: bad fixed_flag"))),
        };
        let level: usize = field(&rec, 4, line)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(HumapError::format(format!("line {line}: non-finite coordinate")));
        }
        if e.point_ids.last().is_some_and(|&p| p >= id) {
            return Err(HumapError::format(format!("line {line}: point ids must be ascending")));
        }
        if e.point_ids.is_empty() {
            e.level = level;
        } else if level != e.level {
            return Err(HumapError::format(format!("line {line}: mixed source levels")));
        }
        e.point_ids.push(id);
        e.coords.push([x, y]);
        e.fixed_mask.push(fixed);
    }
    if e.is_empty() {
        return Err(HumapError::format("embedding has no rows"));
    }
    Ok(e)
}

/// Landmark ids separated by commas or whitespace. `#` starts a comment.
pub fn parse_selection(text: &str) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let id = tok.parse().map_err(|_| {
                HumapError::format(format!("line {}: '{tok}' is not a point id", n + 1))
            })?;
            ids.push(id);
        }
    }
    Ok(ids)
}
