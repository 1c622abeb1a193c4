//! Compressed sparse row graphs.

use crate::error::{HumapError, Result};

/// CSR matrix of non-negative edge weights.
///
/// Column indices are strictly increasing within each row. Strength and
/// probability graphs never store explicit zeros; dissimilarity graphs may,
/// since a zero dissimilarity is still an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseGraph {
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        SparseGraph {
            n_rows,
            n_cols,
            offsets: vec![0; n_rows + 1],
            indices: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Build from per-row `(column, weight)` lists in any order. Zero weights
    /// are dropped; a repeated column within a row is an error.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        Self::build(n_cols, rows, false)
    }

    /// Like [`SparseGraph::from_rows`] but zero weights are kept as edges.
    pub fn from_rows_keep_zeros(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        Self::build(n_cols, rows, true)
    }

    fn build(n_cols: usize, rows: Vec<Vec<(usize, f64)>>, keep_zeros: bool) -> Result<Self> {
        let n_rows = rows.len();
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(HumapError::format(format!("row {r} repeats column {}", w[0].0)));
                }
            }
            for (c, v) in row {
                if c >= n_cols {
                    return Err(HumapError::format(format!("row {r} column {c} out of range")));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(HumapError::format(format!("row {r} has invalid weight {v}")));
                }
                if keep_zeros || v != 0.0 {
                    indices.push(c);
                    weights.push(v);
                }
            }
            offsets.push(indices.len());
        }
        Ok(SparseGraph { n_rows, n_cols, offsets, indices, weights })
    }

    /// Assemble from raw CSR arrays, checking every structural invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let g = SparseGraph { n_rows, n_cols, offsets, indices, weights };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.len().checked_sub(1) != Some(self.n_rows) || self.offsets[0] != 0 {
            return Err(HumapError::format("bad row offsets"));
        }
        if self.indices.len() != self.weights.len()
            || *self.offsets.last().unwrap() != self.indices.len()
        {
            return Err(HumapError::format("offsets disagree with entry count"));
        }
        if let Some(r) = self.offsets.windows(2).position(|w| w[0] > w[1]) {
            return Err(HumapError::format(format!("row {r} offsets decrease")));
        }
        for r in 0..self.n_rows {
            let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
            let cols = &self.indices[lo..hi];
            if cols.iter().any(|&c| c >= self.n_cols) {
                return Err(HumapError::format(format!("row {r} column out of range")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HumapError::format(format!("row {r} columns not strictly increasing")));
            }
            if self.weights[lo..hi].iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(HumapError::format(format!("row {r} stores an invalid weight")));
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.offsets[r], self.offsets[r + 1]);
        (&self.indices[lo..hi], &self.weights[lo..hi])
    }

    pub fn row_len(&self, r: usize) -> usize {
        self.offsets[r + 1] - self.offsets[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, w) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |p| w[p])
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    /// All stored entries as `(row, col, weight)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, w) = self.row(r);
            cols.iter().zip(w).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn transpose(&self) -> SparseGraph {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut weights = vec![0.0; self.nnz()];
        for (r, c, v) in self.entries() {
            let slot = next[c];
            indices[slot] = r;
            weights[slot] = v;
            next[c] += 1;
        }
        SparseGraph { n_rows: self.n_cols, n_cols: self.n_rows, offsets, indices, weights }
    }

    /// Square submatrix over `ids` (must be sorted and unique), renumbered to
    /// `0..ids.len()`.
    pub fn restrict(&self, ids: &[usize]) -> SparseGraph {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        let mut local = vec![usize::MAX; self.n_cols.max(self.n_rows)];
        for (new, &old) in ids.iter().enumerate() {
            local[old] = new;
        }
        let mut offsets = Vec::with_capacity(ids.len() + 1);
        let mut indices = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for &old in ids {
            let (cols, w) = self.row(old);
            for (&c, &v) in cols.iter().zip(w) {
                if local[c] != usize::MAX {
                    indices.push(local[c]);
                    weights.push(v);
                }
            }
            offsets.push(indices.len());
        }
        SparseGraph { n_rows: ids.len(), n_cols: ids.len(), offsets, indices, weights }
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols && self.transpose() == *self
    }
}
