use rayon::prelude::*;

use super::{check_pair, Layout, Space};
use crate::data::DataMatrix;
use crate::error::{HumapError, Result};

/// Mean fraction of each point's `k` nearest input-space neighbors that are
/// also among its `k` nearest layout neighbors.
pub fn neighborhood_preservation(high: &DataMatrix, low: &[[f64; 2]], k: usize) -> Result<f64> {
    Ok(neighborhood_preservation_curve(high, low, &[k])?[0])
}

/// Neighborhood preservation for several `k` at once.
pub fn neighborhood_preservation_curve(
    high: &DataMatrix,
    low: &[[f64; 2]],
    ks: &[usize],
) -> Result<Vec<f64>> {
    check_pair(high, low)?;
    let n = high.n_points();
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k >= n) {
        return Err(HumapError::param(format!("k must be in [1, {n}), got {bad}")));
    }
    let max_k = ks.iter().copied().max().unwrap_or(0);
    let layout = Layout(low);
    let per_point: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = &high.order_from(i)[..max_k];
            let b = &layout.order_from(i)[..max_k];
            let mut in_a = vec![usize::MAX; n];
            for (r, &j) in a.iter().enumerate() {
                in_a[j] = r;
            }
            // shared[k] = |A_k ∩ B_k|, built incrementally
            let mut shared = vec![0usize; max_k + 1];
            let mut in_b = vec![false; n];
            let mut count = 0;
            for k in 1..=max_k {
                let (x, y) = (a[k - 1], b[k - 1]);
                in_b[y] = true;
                if in_a[y] < k {
                    count += 1;
                }
                if in_b[x] && x != y {
                    count += 1;
                }
                shared[k] = count;
            }
            ks.iter().map(|&k| shared[k]).collect()
        })
        .collect();
    Ok(ks
        .iter()
        .enumerate()
        .map(|(c, &k)| per_point.iter().map(|p| p[c] as f64).sum::<f64>() / (n * k) as f64)
        .collect())
}
