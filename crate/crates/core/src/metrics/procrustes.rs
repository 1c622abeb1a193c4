//! Procrustes disparity between two matched 2-D configurations.

use nalgebra::Matrix2;

use crate::embed::Embedding;
use crate::error::{HumapError, Result};
use crate::hierarchy::Hierarchy;

fn standardize(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let n = points.len() as f64;
    let mean = points.iter().fold([0.0, 0.0], |m, p| [m[0] + p[0] / n, m[1] + p[1] / n]);
    let centered: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - mean[0], p[1] - mean[1]]).collect();
    let norm = centered.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>().sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(HumapError::Degenerate("configuration has zero variance".into()));
    }
    Ok(centered.into_iter().map(|p| [p[0] / norm, p[1] / norm]).collect())
}

/// Sum of squared residuals after centering both sets, scaling them to unit
/// Frobenius norm and applying the best orthogonal map and scale to `b`.
pub fn procrustes_disparity(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(HumapError::param("configurations must have the same number of points"));
    }
    if a.len() < 2 {
        return Err(HumapError::param("need at least two matched points"));
    }
    let (sa, sb) = (standardize(a)?, standardize(b)?);
    let mut cross = Matrix2::<f64>::zeros();
    for (p, q) in sa.iter().zip(&sb) {
        for r in 0..2 {
            for c in 0..2 {
                cross[(r, c)] += p[r] * q[c];
            }
        }
    }
    let trace: f64 = cross.singular_values().iter().sum();
    Ok((1.0 - trace * trace).max(0.0))
}

/// Disparity between two embeddings restricted to the points they share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedDisparity {
    pub shared_points: usize,
    pub disparity: f64,
}

/// Compare an embedding of level `upper.level` with one of `lower.level`
/// over the input points present in both.
pub fn shared_point_disparity(h: &Hierarchy, upper: &Embedding, lower: &Embedding) -> Result<SharedDisparity> {
    let up_ids = &h.level(upper.level)?.global_ids;
    let low_ids = &h.level(lower.level)?.global_ids;
    let mut low_by_global: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (row, &pid) in lower.point_ids.iter().enumerate() {
        low_by_global.insert(low_ids[pid], row);
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (row, &pid) in upper.point_ids.iter().enumerate() {
        if let Some(&lr) = low_by_global.get(&up_ids[pid]) {
            a.push(upper.coords[row]);
            b.push(lower.coords[lr]);
        }
    }
    Ok(SharedDisparity { shared_points: a.len(), disparity: procrustes_disparity(&a, &b)? })
}
