//! Bottom-up construction of the landmark hierarchy.

mod associate;
mod landmarks;
mod rnh;
mod walks;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use associate::{associate_landmarks, AssociationMap, AssociationStage};
pub use landmarks::{
    select_landmarks, walk_endpoint_counts, LandmarkSet, WalkParams, DEFAULT_WALKS_PER_POINT,
    DEFAULT_WALK_LENGTH,
};
pub use rnh::{
    knn_from_dissimilarity, landmark_dissimilarity, representation_neighborhoods, RnhMatrix,
    RnhParams, DEFAULT_BETA, DEFAULT_OMEGA, DEFAULT_UPSILON,
};

use crate::data::DataMatrix;
use crate::error::{HumapError, Result};
use crate::exec::ExecMode;
use crate::fuzzy_graph::{transition_matrix, FuzzyGraph};
use crate::knn::{build_knn, NeighborGraph};
use crate::seed::derive_seed;
use crate::sparse::SparseGraph;

pub const DEFAULT_K: usize = 15;
pub const DEFAULT_THETA: f64 = 0.01;

/// Parameters shared by every level of a hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub k: usize,
    pub walks: WalkParams,
    pub rnh: RnhParams,
    /// Movement fraction for inherited coordinates when projecting.
    pub theta: f64,
    pub seed: u64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        HierarchyParams {
            k: DEFAULT_K,
            walks: WalkParams::default(),
            rnh: RnhParams::default(),
            theta: DEFAULT_THETA,
            seed: 0,
        }
    }
}

/// How level `i` was derived from level `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLink {
    pub landmarks: LandmarkSet,
    pub rnh: RnhMatrix,
    /// Stored landmark dissimilarities (after any isolated-landmark repair).
    pub dissimilarity: SparseGraph,
    /// Level `i - 1` points to positions in level `i`.
    pub association: AssociationMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub index: usize,
    /// Level-0 id of every point of this level.
    pub global_ids: Vec<usize>,
    pub graph: NeighborGraph,
    /// Directed membership strengths over `graph`.
    pub strengths: SparseGraph,
    /// `None` for level 0.
    pub link: Option<LevelLink>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.global_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    pub params: HierarchyParams,
    pub levels: Vec<Level>,
}

impl Hierarchy {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Level::len).collect()
    }

    pub fn level(&self, i: usize) -> Result<&Level> {
        self.levels
            .get(i)
            .ok_or_else(|| HumapError::param(format!("level {i} does not exist")))
    }

    /// Follow association maps from level 0 up to `level`, returning the
    /// `level` position each level-0 point belongs to.
    pub fn ancestor_at(&self, level: usize) -> Result<Vec<usize>> {
        self.level(level)?;
        let mut current: Vec<usize> = (0..self.levels[0].len()).collect();
        for l in 1..=level {
            let assoc = &self.levels[l].link.as_ref().expect("upper level has a link").association;
            for c in current.iter_mut() {
                *c = assoc.landmark_of[*c];
            }
        }
        Ok(current)
    }
}

/// Wall time of one construction stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub level: usize,
    pub stage: &'static str,
    pub seconds: f64,
}

pub fn validate_level_sizes(n_points: usize, level_sizes: &[usize], k: usize) -> Result<()> {
    if level_sizes.is_empty() {
        return Err(HumapError::param("at least one level size is required"));
    }
    if level_sizes[0] != n_points {
        return Err(HumapError::param(format!(
            "first level size must equal the number of points ({n_points}), got {}",
            level_sizes[0]
        )));
    }
    if level_sizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HumapError::param("level sizes must be strictly decreasing"));
    }
    let smallest = *level_sizes.last().unwrap();
    if k == 0 || k >= smallest {
        return Err(HumapError::param(format!(
            "k must be in [1, {smallest}) for the smallest level, got {k}"
        )));
    }
    Ok(())
}

pub fn build_hierarchy(
    data: &DataMatrix,
    level_sizes: &[usize],
    params: HierarchyParams,
    mode: ExecMode,
) -> Result<Hierarchy> {
    build_hierarchy_timed(data, level_sizes, params, mode).map(|(h, _)| h)
}

/// Build a hierarchy and report the time spent in each stage.
pub fn build_hierarchy_timed(
    data: &DataMatrix,
    level_sizes: &[usize],
    params: HierarchyParams,
    mode: ExecMode,
) -> Result<(Hierarchy, Vec<StageTiming>)> {
    validate_level_sizes(data.n_points(), level_sizes, params.k)?;
    if !(0.0..=1.0).contains(&params.theta) {
        return Err(HumapError::param(format!("theta must be in [0, 1], got {}", params.theta)));
    }
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |level: usize, stage: &'static str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming { level, stage, seconds: clock.elapsed().as_secs_f64() });
        clock = Instant::now();
    };

    let graph = build_knn(data, params.k, mode)?;
    lap(0, "knn", &mut timings);
    let fuzzy = FuzzyGraph::from_neighbors(&graph, mode)?;
    lap(0, "strengths", &mut timings);
    let mut levels = vec![Level {
        index: 0,
        global_ids: (0..data.n_points()).collect(),
        graph,
        strengths: fuzzy.strengths,
        link: None,
    }];

    for (i, &size) in level_sizes.iter().enumerate().skip(1) {
        let below = &levels[i - 1];
        let transitions = transition_matrix(&below.strengths)?;
        let mut landmarks = select_landmarks(
            &transitions,
            size,
            params.walks,
            derive_seed(params.seed, "landmarks", i as u64),
            mode,
        )?;
        landmarks.level = i;
        lap(i, "landmarks", &mut timings);

        let rnh = representation_neighborhoods(
            &below.graph,
            &transitions,
            &landmarks,
            params.rnh,
            derive_seed(params.seed, "rnh", i as u64),
            mode,
        )?;
        let mut dissimilarity = landmark_dissimilarity(&rnh, mode)?;
        let global_ids: Vec<usize> =
            landmarks.landmark_ids.iter().map(|&id| below.global_ids[id]).collect();
        repair_isolated(&mut dissimilarity, data, &global_ids)?;
        lap(i, "dissimilarity", &mut timings);

        let graph = knn_from_dissimilarity(&dissimilarity, params.k)?;
        let fuzzy = FuzzyGraph::from_neighbors(&graph, mode)?;
        let association = associate_landmarks(&below.graph, &landmarks)?;
        lap(i, "association", &mut timings);

        levels.push(Level {
            index: i,
            global_ids,
            graph,
            strengths: fuzzy.strengths,
            link: Some(LevelLink { landmarks, rnh, dissimilarity, association }),
        });
    }
    Ok((Hierarchy { params, levels }, timings))
}

/// A landmark whose neighborhood overlaps no other gets a single edge of
/// dissimilarity 1 to the landmark nearest in the input space, so every
/// level keeps a usable neighbor graph.
fn repair_isolated(dissim: &mut SparseGraph, data: &DataMatrix, global_ids: &[usize]) -> Result<()> {
    let n = dissim.n_rows();
    let isolated: Vec<usize> = (0..n).filter(|&u| dissim.row_len(u) == 0).collect();
    if isolated.is_empty() || n < 2 {
        return Ok(());
    }
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|u| {
            let (c, w) = dissim.row(u);
            c.iter().copied().zip(w.iter().copied()).collect()
        })
        .collect();
    for u in isolated {
        let nearest = (0..n)
            .filter(|&v| v != u)
            .min_by(|&a, &b| {
                data.distance(global_ids[u], global_ids[a])
                    .total_cmp(&data.distance(global_ids[u], global_ids[b]))
                    .then(a.cmp(&b))
            })
            .expect("at least two landmarks");
        for (from, to) in [(u, nearest), (nearest, u)] {
            if !rows[from].iter().any(|&(c, _)| c == to) {
                rows[from].push((to, 1.0));
            }
        }
    }
    *dissim = SparseGraph::from_rows_keep_zeros(n, rows)?;
    Ok(())
}
