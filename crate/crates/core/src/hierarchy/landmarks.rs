//! Landmark selection by Monte Carlo walks on the transition chain.

use serde::{Deserialize, Serialize};

use super::walks::step;
use crate::error::{HumapError, Result};
use crate::exec::{map_indices, ExecMode};
use crate::seed;
use crate::sparse::SparseGraph;

pub const DEFAULT_WALKS_PER_POINT: usize = 10;
pub const DEFAULT_WALK_LENGTH: usize = 10;

/// Walk budget for landmark selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    pub walks_per_point: usize,
    pub walk_length: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams { walks_per_point: DEFAULT_WALKS_PER_POINT, walk_length: DEFAULT_WALK_LENGTH }
    }
}

/// Landmarks chosen from level `level - 1` to form level `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub level: usize,
    /// Sorted ids into the level below. Position `u` in this list is the
    /// id of the landmark within its own level.
    pub landmark_ids: Vec<usize>,
    /// Walk endpoint tallies for every candidate in the level below.
    pub visit_counts: Vec<u64>,
}

impl LandmarkSet {
    pub fn len(&self) -> usize {
        self.landmark_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmark_ids.is_empty()
    }

    /// Map from lower-level id to landmark position, `None` for non-landmarks.
    pub fn positions(&self, n_lower: usize) -> Vec<Option<usize>> {
        let mut pos = vec![None; n_lower];
        for (p, &id) in self.landmark_ids.iter().enumerate() {
            pos[id] = Some(p);
        }
        pos
    }
}

/// Endpoint tallies of `walks_per_point` walks from every state.
pub fn walk_endpoint_counts(
    transitions: &SparseGraph,
    walks: WalkParams,
    seed: u64,
    stage: &str,
    mode: ExecMode,
) -> Vec<u64> {
    let n = transitions.n_rows();
    let endpoints = map_indices(mode, n, |start| {
        let mut rng = seed::stream(seed, stage, start as u64);
        (0..walks.walks_per_point)
            .map(|_| {
                let mut state = start;
                for _ in 0..walks.walk_length {
                    state = step(transitions, state, &mut rng);
                }
                state
            })
            .collect::<Vec<_>>()
    });
    let mut counts = vec![0u64; n];
    for e in endpoints.into_iter().flatten() {
        counts[e] += 1;
    }
    counts
}

/// Pick the `target_count` most visited walk endpoints. Equal tallies go to
/// the lower index.
pub fn select_landmarks(
    transitions: &SparseGraph,
    target_count: usize,
    walks: WalkParams,
    seed: u64,
    mode: ExecMode,
) -> Result<LandmarkSet> {
    let n = transitions.n_rows();
    if target_count == 0 || target_count >= n {
        return Err(HumapError::param(format!(
            "landmark count must be in [1, {n}), got {target_count}"
        )));
    }
    let visit_counts = walk_endpoint_counts(transitions, walks, seed, "landmark-walks", mode);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| visit_counts[b].cmp(&visit_counts[a]).then(a.cmp(&b)));
    let mut landmark_ids = order[..target_count].to_vec();
    landmark_ids.sort_unstable();
    Ok(LandmarkSet { level: 0, landmark_ids, visit_counts })
}
