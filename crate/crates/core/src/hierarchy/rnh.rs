//! Representation neighborhoods and the landmark dissimilarity they induce.

use serde::{Deserialize, Serialize};

use super::landmarks::LandmarkSet;
use super::walks::step;
use crate::error::{HumapError, Result};
use crate::exec::{map_indices, ExecMode};
use crate::knn::NeighborGraph;
use crate::seed;
use crate::sparse::SparseGraph;

pub const DEFAULT_OMEGA: usize = 20;
pub const DEFAULT_UPSILON: usize = 30;
pub const DEFAULT_BETA: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnhParams {
    /// Walks started from each non-landmark.
    pub omega: usize,
    /// Maximum length of each of those walks.
    pub upsilon: usize,
    /// Fraction of each landmark's own neighbor list added to its
    /// neighborhood.
    pub beta: f64,
}

impl Default for RnhParams {
    fn default() -> Self {
        RnhParams { omega: DEFAULT_OMEGA, upsilon: DEFAULT_UPSILON, beta: DEFAULT_BETA }
    }
}

/// Binary `|landmarks| x |lower level|` membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RnhMatrix(SparseGraph);

impl RnhMatrix {
    pub fn from_graph(g: SparseGraph) -> Result<Self> {
        if g.weights().iter().any(|&w| w != 1.0) {
            return Err(HumapError::format("representation matrix must be binary"));
        }
        Ok(RnhMatrix(g))
    }

    pub fn from_member_lists(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                r.into_iter().map(|c| (c, 1.0)).collect()
            })
            .collect();
        Ok(RnhMatrix(SparseGraph::from_rows(n_cols, rows)?))
    }

    pub fn graph(&self) -> &SparseGraph {
        &self.0
    }

    pub fn n_landmarks(&self) -> usize {
        self.0.n_rows()
    }

    pub fn members(&self, u: usize) -> &[usize] {
        self.0.row(u).0
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.members(u).binary_search(&v).is_ok()
    }
}

fn local_count(beta: f64, n_neighbors: usize) -> usize {
    // guard against 0.3 * 10 = 2.9999... style truncation
    ((beta * n_neighbors as f64) + 1e-9).floor() as usize
}

/// Build every landmark's representation neighborhood.
///
/// Each non-landmark starts `omega` walks of at most `upsilon` steps on
/// `transitions`; a walk is absorbed by the first landmark it reaches, which
/// then claims the walk's origin. Walks that reach no landmark are dropped.
/// Landmark `u` also claims itself and its first `floor(beta * |NH(u)|)`
/// nearest neighbors.
pub fn representation_neighborhoods(
    graph: &NeighborGraph,
    transitions: &SparseGraph,
    landmarks: &LandmarkSet,
    params: RnhParams,
    seed: u64,
    mode: ExecMode,
) -> Result<RnhMatrix> {
    let n = graph.n_points();
    if transitions.n_rows() != n {
        return Err(HumapError::param("transition matrix does not match neighbor graph"));
    }
    if !(0.0..=1.0).contains(&params.beta) {
        return Err(HumapError::param(format!("beta must be in [0, 1], got {}", params.beta)));
    }
    if landmarks.landmark_ids.iter().any(|&id| id >= n) {
        return Err(HumapError::param("landmark id outside the lower level"));
    }
    let position = landmarks.positions(n);
    let hits: Vec<Vec<usize>> = map_indices(mode, n, |start| {
        if position[start].is_some() {
            return Vec::new();
        }
        let mut rng = seed::stream(seed, "rnh-walks", start as u64);
        let mut found = Vec::new();
        for _ in 0..params.omega {
            let mut state = start;
            for _ in 0..params.upsilon {
                state = step(transitions, state, &mut rng);
                if let Some(p) = position[state] {
                    found.push(p);
                    break;
                }
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    });

    let mut rows: Vec<Vec<usize>> = landmarks
        .landmark_ids
        .iter()
        .map(|&id| {
            let mut members = vec![id];
            let nh = graph.neighbors(id);
            members.extend_from_slice(&nh[..local_count(params.beta, nh.len()).min(nh.len())]);
            members
        })
        .collect();
    for (v, claimed_by) in hits.into_iter().enumerate() {
        for p in claimed_by {
            rows[p].push(v);
        }
    }
    RnhMatrix::from_member_lists(n, rows)
}

/// Pairwise landmark dissimilarity `1 - |RNH_u ∩ RNH_v| / M`, with `M` the
/// largest neighborhood size. Only pairs with a non-empty intersection are
/// stored, zeros included; the diagonal is omitted.
pub fn landmark_dissimilarity(rnh: &RnhMatrix, mode: ExecMode) -> Result<SparseGraph> {
    let g = rnh.graph();
    let n = g.n_rows();
    if n == 0 {
        return Err(HumapError::Degenerate("representation matrix has no rows".into()));
    }
    let max_size = (0..n).map(|u| g.row_len(u)).max().unwrap_or(0);
    if max_size == 0 {
        return Err(HumapError::Degenerate("all representation neighborhoods are empty".into()));
    }
    let norm = max_size as f64;
    let by_member = g.transpose();
    let rows = map_indices(mode, n, |u| {
        let mut counts: Vec<(usize, u32)> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for &v in rnh.members(u) {
            for &w in by_member.row(v).0 {
                if w == u {
                    continue;
                }
                let idx = *slot.entry(w).or_insert_with(|| {
                    counts.push((w, 0));
                    counts.len() - 1
                });
                counts[idx].1 += 1;
            }
        }
        counts
            .into_iter()
            .map(|(w, c)| (w, 1.0 - f64::from(c) / norm))
            .collect::<Vec<_>>()
    });
    SparseGraph::from_rows_keep_zeros(n, rows)
}

/// Nearest `k` stored entries of each row, ascending, ties to the lower
/// index. Rows with fewer entries keep all of them.
pub fn knn_from_dissimilarity(dissim: &SparseGraph, k: usize) -> Result<NeighborGraph> {
    if dissim.n_rows() != dissim.n_cols() {
        return Err(HumapError::param("dissimilarity matrix must be square"));
    }
    let mut rows = Vec::with_capacity(dissim.n_rows());
    for u in 0..dissim.n_rows() {
        let (cols, w) = dissim.row(u);
        if cols.is_empty() {
            return Err(HumapError::Degenerate(format!("landmark {u} has no stored dissimilarity")));
        }
        let mut row: Vec<(usize, f64)> =
            cols.iter().copied().zip(w.iter().copied()).filter(|&(c, _)| c != u).collect();
        row.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        row.truncate(k);
        rows.push(row);
    }
    NeighborGraph::from_rows(k, rows)
}
