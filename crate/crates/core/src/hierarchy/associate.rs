//! Assignment of every lower-level point to one representing landmark.

use super::landmarks::LandmarkSet;
use crate::error::{HumapError, Result};
use crate::knn::NeighborGraph;

/// How a point obtained its landmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum AssociationStage {
    /// The point is itself a landmark.
    Landmark = 0,
    /// Claimed by the closest landmark listing it as a neighbor.
    LandmarkNeighbor = 1,
    /// Inherited from its own neighbor list.
    Neighborhood = 2,
    /// Found by depth-first search.
    Search = 3,
}

impl AssociationStage {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Landmark),
            1 => Some(Self::LandmarkNeighbor),
            2 => Some(Self::Neighborhood),
            3 => Some(Self::Search),
            _ => None,
        }
    }
}

/// Total map from lower-level points to landmark positions in the level
/// above.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMap {
    pub landmark_of: Vec<usize>,
    pub stage: Vec<AssociationStage>,
}

impl AssociationMap {
    pub fn len(&self) -> usize {
        self.landmark_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmark_of.is_empty()
    }

    /// Lower-level points whose landmark is in `selected` (landmark
    /// positions), ascending.
    pub fn preimage(&self, selected: &[usize]) -> Vec<usize> {
        let max = selected.iter().copied().max().map_or(0, |m| m + 1);
        let mut wanted = vec![false; max];
        for &s in selected {
            wanted[s] = true;
        }
        self.landmark_of
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l < max && wanted[l])
            .map(|(i, _)| i)
            .collect()
    }
}

/// Associate each point of `graph` with a landmark.
///
/// Landmarks first claim their own neighbors; a point claimed by several
/// landmarks goes to the closest (row distance in the landmark's neighbor
/// list, earlier landmark on ties). Remaining points take the landmark of
/// their nearest neighbor that is either a landmark or already associated.
/// Anything still unassigned is resolved by a depth-first search over the
/// undirected neighbor graph.
pub fn associate_landmarks(graph: &NeighborGraph, landmarks: &LandmarkSet) -> Result<AssociationMap> {
    let n = graph.n_points();
    if landmarks.landmark_ids.iter().any(|&id| id >= n) {
        return Err(HumapError::param("landmark id outside the neighbor graph"));
    }
    let position = landmarks.positions(n);
    let mut landmark_of: Vec<Option<usize>> = position.clone();
    let mut stage = vec![AssociationStage::Search; n];
    let mut claim_dist = vec![f64::INFINITY; n];

    for (p, &id) in landmarks.landmark_ids.iter().enumerate() {
        stage[id] = AssociationStage::Landmark;
        let (ids, ds) = graph.row(id);
        for (&v, &d) in ids.iter().zip(ds) {
            if position[v].is_none() && d < claim_dist[v] {
                claim_dist[v] = d;
                landmark_of[v] = Some(p);
                stage[v] = AssociationStage::LandmarkNeighbor;
            }
        }
    }

    let mut pending = Vec::new();
    for u in 0..n {
        if landmark_of[u].is_some() {
            continue;
        }
        let inherited = graph
            .neighbors(u)
            .iter()
            .find_map(|&v| position[v].or(landmark_of[v]));
        match inherited {
            Some(l) => {
                landmark_of[u] = Some(l);
                stage[u] = AssociationStage::Neighborhood;
            }
            None => pending.push(u),
        }
    }

    if !pending.is_empty() {
        let adj = graph.undirected_adjacency();
        let mut seen = vec![usize::MAX; n];
        for u in pending {
            let found = dfs_first_landmark(&adj, &position, u, &mut seen)
                .ok_or(HumapError::UnassociatedPoint { point: u })?;
            landmark_of[u] = Some(found);
            stage[u] = AssociationStage::Search;
        }
    }

    Ok(AssociationMap {
        landmark_of: landmark_of.into_iter().map(|l| l.expect("every point assigned")).collect(),
        stage,
    })
}

fn dfs_first_landmark(
    adj: &[Vec<usize>],
    position: &[Option<usize>],
    start: usize,
    seen: &mut [usize],
) -> Option<usize> {
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if seen[v] == start {
            continue;
        }
        seen[v] = start;
        if let Some(p) = position[v] {
            return Some(p);
        }
        stack.extend(adj[v].iter().rev().filter(|&&w| seen[w] != start));
    }
    None
}
