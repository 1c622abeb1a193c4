//! Trustworthiness and continuity.

use rayon::prelude::*;
use serde::Serialize;

use super::{check_pair, Layout, Space};
use crate::data::DataMatrix;
use crate::error::{HumapError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankQuality {
    pub k: usize,
    /// Penalizes input-space neighbors missing from the layout neighborhood.
    pub continuity: f64,
    /// Penalizes layout neighbors that are not input-space neighbors.
    pub trustworthiness: f64,
}

/// `(continuity, trustworthiness)` at one `k`, with `1 <= k < n / 2`.
pub fn rank_quality(high: &DataMatrix, low: &[[f64; 2]], k: usize) -> Result<(f64, f64)> {
    let q = rank_quality_curve(high, low, &[k])?[0];
    Ok((q.continuity, q.trustworthiness))
}

pub fn rank_quality_curve(high: &DataMatrix, low: &[[f64; 2]], ks: &[usize]) -> Result<Vec<RankQuality>> {
    check_pair(high, low)?;
    let n = high.n_points();
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || 2 * k >= n) {
        return Err(HumapError::param(format!("k must satisfy 1 <= k < n/2 (n = {n}), got {bad}")));
    }
    let layout = Layout(low);
    let rank_of = |order: &[usize]| {
        let mut r = vec![0usize; n];
        for (pos, &j) in order.iter().enumerate() {
            r[j] = pos + 1;
        }
        r
    };
    // per point, per k: (continuity penalty, trust penalty)
    let penalties: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let oh = high.order_from(i);
            let ol = layout.order_from(i);
            let (rh, rl) = (rank_of(&oh), rank_of(&ol));
            ks.iter()
                .map(|&k| {
                    let trust: usize =
                        ol[..k].iter().filter(|&&j| rh[j] > k).map(|&j| rh[j] - k).sum();
                    let cont: usize =
                        oh[..k].iter().filter(|&&j| rl[j] > k).map(|&j| rl[j] - k).sum();
                    (cont as f64, trust as f64)
                })
                .collect()
        })
        .collect();
    Ok(ks
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            let (nf, kf) = (n as f64, k as f64);
            let norm = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
            let (cont, trust) = penalties
                .iter()
                .fold((0.0, 0.0), |(a, b), p| (a + p[c].0, b + p[c].1));
            RankQuality { k, continuity: 1.0 - norm * cont, trustworthiness: 1.0 - norm * trust }
        })
        .collect())
}
