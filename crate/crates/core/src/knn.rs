//! Directed k-nearest-neighbor graphs.

use std::cmp::Ordering;

use crate::data::DataMatrix;
use crate::error::{HumapError, Result};
use crate::exec::{map_indices, ExecMode};

/// Per-point neighbor lists sorted by ascending distance.
///
/// Rows built from raw data hold exactly `k` entries. Rows at upper hierarchy
/// levels come from sparse dissimilarities and may be shorter.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

fn by_distance_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

impl NeighborGraph {
    /// Build from unsorted per-row `(neighbor, distance)` lists. Rows are
    /// sorted by distance with ties going to the lower index.
    pub fn from_rows(k: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut distances = Vec::new();
        offsets.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by(by_distance_then_index);
            for &(j, d) in &row {
                if j >= n || j == i {
                    return Err(HumapError::format(format!("row {i} has invalid neighbor {j}")));
                }
                if !d.is_finite() || d < 0.0 {
                    return Err(HumapError::format(format!("row {i} has invalid distance {d}")));
                }
                indices.push(j);
                distances.push(d);
            }
            offsets.push(indices.len());
        }
        let g = NeighborGraph { k, offsets, indices, distances };
        g.check_unique()?;
        Ok(g)
    }

    /// Assemble from raw arrays, checking every invariant.
    pub fn from_parts(
        k: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        distances: Vec<f64>,
    ) -> Result<Self> {
        let g = NeighborGraph { k, offsets, indices, distances };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() || self.offsets[0] != 0 {
            return Err(HumapError::format("bad neighbor offsets"));
        }
        if self.indices.len() != self.distances.len()
            || *self.offsets.last().unwrap() != self.indices.len()
        {
            return Err(HumapError::format("neighbor offsets disagree with entry count"));
        }
        if let Some(i) = self.offsets.windows(2).position(|w| w[0] > w[1]) {
            return Err(HumapError::format(format!("row {i} offsets decrease")));
        }
        let n = self.n_points();
        for i in 0..n {
            let (ids, ds) = self.row(i);
            if ids.iter().any(|&j| j >= n || j == i) {
                return Err(HumapError::format(format!("row {i} has an invalid neighbor")));
            }
            if ds.iter().any(|d| !d.is_finite() || *d < 0.0) {
                return Err(HumapError::format(format!("row {i} has an invalid distance")));
            }
            if ds.windows(2).any(|w| w[0] > w[1]) {
                return Err(HumapError::format(format!("row {i} distances not ascending")));
            }
        }
        self.check_unique()
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = vec![usize::MAX; self.n_points()];
        for i in 0..self.n_points() {
            for &j in self.row(i).0 {
                if seen[j] == i {
                    return Err(HumapError::format(format!("row {i} repeats neighbor {j}")));
                }
                seen[j] = i;
            }
        }
        Ok(())
    }

    /// Nominal neighbor count.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_points(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[lo..hi], &self.distances[lo..hi])
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.row(i).0
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    /// Undirected adjacency: out-neighbors first (by distance), then points
    /// that list `i` as a neighbor (by index).
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n_points();
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| self.neighbors(i).to_vec()).collect();
        for i in 0..n {
            for &j in self.neighbors(i) {
                if !self.neighbors(j).contains(&i) {
                    adj[j].push(i);
                }
            }
        }
        adj
    }
}

/// Exact k-nearest neighbors under Euclidean distance. Ties go to the lower
/// index.
pub fn build_knn(data: &DataMatrix, k: usize, mode: ExecMode) -> Result<NeighborGraph> {
    let n = data.n_points();
    if k == 0 || k >= n {
        return Err(HumapError::param(format!("k must be in [1, {}), got {k}", n)));
    }
    let rows = map_indices(mode, n, |i| {
        let xi = data.row(i);
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, crate::data::euclidean(xi, data.row(j))))
            .collect();
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_distance_then_index);
            cand.truncate(k);
        }
        cand.sort_by(by_distance_then_index);
        cand
    });
    let mut offsets = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    offsets.push(0);
    for row in rows {
        for (j, d) in row {
            indices.push(j);
            distances.push(d);
        }
        offsets.push(indices.len());
    }
    Ok(NeighborGraph { k, offsets, indices, distances })
}
