//! Embedding quality and stability measurements.

mod demap;
mod neighbors;
mod procrustes;
mod rank;
mod report;

pub use demap::{demap, demap_with, geodesic_distances, spearman, DEMAP_MAX_POINTS};
pub use neighbors::{neighborhood_preservation, neighborhood_preservation_curve};
pub use procrustes::{procrustes_disparity, shared_point_disparity, SharedDisparity};
pub use rank::{rank_quality, rank_quality_curve, RankQuality};
pub use report::{LevelReport, Metric, MetricsReport, PairReport, DEFAULT_K_RANGE};

use crate::data::DataMatrix;
use crate::error::{HumapError, Result};

/// Point set with a distance, either the input space or a layout.
pub(crate) trait Space: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    /// All other points ordered by distance from `i`, ties to the lower
    /// index.
    fn order_from(&self, i: usize) -> Vec<usize> {
        let mut d: Vec<(usize, f64)> =
            (0..self.len()).filter(|&j| j != i).map(|j| (j, self.dist(i, j))).collect();
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        d.into_iter().map(|(j, _)| j).collect()
    }
}

impl Space for DataMatrix {
    fn len(&self) -> usize {
        self.n_points()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.distance(i, j)
    }
}

pub(crate) struct Layout<'a>(pub &'a [[f64; 2]]);

impl Space for Layout<'_> {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.0[i], self.0[j]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
}

pub(crate) fn check_pair(high: &DataMatrix, low: &[[f64; 2]]) -> Result<()> {
    if high.n_points() != low.len() {
        return Err(HumapError::param(format!(
            "{} input points but {} layout points",
            high.n_points(),
            low.len()
        )));
    }
    if low.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HumapError::input("layout coordinates must be finite"));
    }
    Ok(())
}
