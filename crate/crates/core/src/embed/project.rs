//! Projection of whole levels and of drill-down subsets.

use rand_distr::{Distribution, Normal};

use super::layout::{optimize_layout, LayoutParams};
use super::spectral::spectral_init;
use super::symmetrize::symmetrize;
use super::Embedding;
use crate::error::{HumapError, Result};
use crate::hierarchy::Hierarchy;
use crate::seed;

/// Standard deviation of the offset given to points placed at their
/// landmark's coordinate.
pub const INHERIT_JITTER: f64 = 1e-2;

fn layout_params(params: &LayoutParams, stage: &str, level: usize) -> LayoutParams {
    LayoutParams { seed: seed::derive_seed(params.seed, stage, level as u64), ..*params }
}

/// Initial coordinates for `points` of `level`, inheriting from `parent`
/// (an embedding of `level + 1`).
fn inherited_init(
    h: &Hierarchy,
    level: usize,
    points: &[usize],
    parent: &Embedding,
    seed: u64,
) -> Result<(Vec<[f64; 2]>, Vec<bool>)> {
    let link = h.levels[level + 1].link.as_ref().expect("upper level has a link");
    let position = link.landmarks.positions(h.levels[level].len());
    let mut rng = seed::stream(seed, "inherit-jitter", level as u64);
    let noise = Normal::new(0.0, INHERIT_JITTER).expect("valid normal");
    let mut init = Vec::with_capacity(points.len());
    let mut fixed = Vec::with_capacity(points.len());
    for &m in points {
        let owner = link.association.landmark_of[m];
        let row = parent.row_of(owner).ok_or_else(|| {
            HumapError::param(format!("landmark {owner} of level {} has not been projected", level + 1))
        })?;
        let p = parent.coords[row];
        if position[m].is_some() {
            init.push(p);
            fixed.push(true);
        } else {
            init.push([p[0] + noise.sample(&mut rng), p[1] + noise.sample(&mut rng)]);
            fixed.push(false);
        }
    }
    Ok((init, fixed))
}

/// Project a whole level.
///
/// The top level is initialized spectrally. Every other level needs the
/// full embedding of the level above as `parent`: its landmarks start at
/// their parent coordinates and move by `theta` of each update, the rest
/// start next to the landmark they are associated with.
pub fn project_level(
    h: &Hierarchy,
    level: usize,
    parent: Option<&Embedding>,
    theta: f64,
    params: &LayoutParams,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<Embedding> {
    let lvl = h.level(level)?;
    let sym = symmetrize(&lvl.strengths)?;
    let params = layout_params(params, "layout", level);
    let mut emb = if level == h.top() {
        let init = spectral_init(&sym, seed::derive_seed(params.seed, "spectral", 0));
        let mut e = optimize_layout(&sym, init.coords, &[], theta, &params, progress)?;
        e.spectral_fallback = init.used_random_fallback;
        e
    } else {
        let parent = parent
            .filter(|p| p.level == level + 1 && p.len() == h.levels[level + 1].len())
            .ok_or(HumapError::Ordering { level, required: level + 1 })?;
        let points: Vec<usize> = (0..lvl.len()).collect();
        let (init, fixed) = inherited_init(h, level, &points, parent, params.seed)?;
        optimize_layout(&sym, init, &fixed, theta, &params, progress)?
    };
    emb.level = level;
    Ok(emb)
}

/// Project the points of `level` associated with the `selected` landmarks
/// of `level + 1`. `parent` is any embedding of `level + 1` that contains
/// the selection (a full level or an earlier drill-down).
pub fn project_subset(
    h: &Hierarchy,
    level: usize,
    selected: &[usize],
    parent: &Embedding,
    theta: f64,
    params: &LayoutParams,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<Embedding> {
    let lvl = h.level(level)?;
    if level >= h.top() {
        return Err(HumapError::param(format!("level {level} has no level above to drill from")));
    }
    if selected.is_empty() {
        return Err(HumapError::param("selection is empty"));
    }
    if parent.level != level + 1 {
        return Err(HumapError::Ordering { level, required: level + 1 });
    }
    let upper = h.levels[level + 1].len();
    let mut selection = selected.to_vec();
    selection.sort_unstable();
    selection.dedup();
    if let Some(&bad) = selection.iter().find(|&&s| s >= upper) {
        return Err(HumapError::param(format!("{bad} is not a landmark of level {}", level + 1)));
    }
    if let Some(&missing) = selection.iter().find(|&&s| parent.row_of(s).is_none()) {
        return Err(HumapError::param(format!(
            "landmark {missing} of level {} has not been projected",
            level + 1
        )));
    }
    let link = h.levels[level + 1].link.as_ref().expect("upper level has a link");
    let points = link.association.preimage(&selection);
    let sym = symmetrize(&lvl.strengths)?.restrict(&points);
    let params = layout_params(params, "drill", level);
    let (init, fixed) = inherited_init(h, level, &points, parent, params.seed)?;
    let mut emb = optimize_layout(&sym, init, &fixed, theta, &params, progress)?;
    emb.level = level;
    emb.point_ids = points;
    Ok(emb)
}

/// Top-down projection of a hierarchy with a cache of full-level embeddings.
#[derive(Debug)]
pub struct Projector<'h> {
    hierarchy: &'h Hierarchy,
    params: LayoutParams,
    theta: f64,
    embeddings: Vec<Option<Embedding>>,
}

impl<'h> Projector<'h> {
    pub fn new(hierarchy: &'h Hierarchy, theta: f64, params: LayoutParams) -> Self {
        Projector { hierarchy, params, theta, embeddings: vec![None; hierarchy.n_levels()] }
    }

    pub fn embedding(&self, level: usize) -> Option<&Embedding> {
        self.embeddings.get(level).and_then(Option::as_ref)
    }

    /// Store an embedding computed elsewhere (for example loaded from disk).
    pub fn insert(&mut self, embedding: Embedding) {
        let l = embedding.level;
        self.embeddings[l] = Some(embedding);
    }

    /// Project `level`, which must be the top or directly below a level
    /// that has already been projected. Re-projection returns the cached
    /// embedding.
    pub fn project_level(&mut self, level: usize) -> Result<&Embedding> {
        self.hierarchy.level(level)?;
        if self.embeddings[level].is_none() {
            let parent = if level == self.hierarchy.top() {
                None
            } else {
                Some(
                    self.embeddings[level + 1]
                        .as_ref()
                        .ok_or(HumapError::Ordering { level, required: level + 1 })?,
                )
            };
            let e = project_level(self.hierarchy, level, parent, self.theta, &self.params, None)?;
            self.embeddings[level] = Some(e);
        }
        Ok(self.embeddings[level].as_ref().unwrap())
    }

    /// Project `level` and every level above it that is missing.
    pub fn project_down_to(&mut self, level: usize) -> Result<&Embedding> {
        self.hierarchy.level(level)?;
        for l in (level..=self.hierarchy.top()).rev() {
            self.project_level(l)?;
        }
        Ok(self.embeddings[level].as_ref().unwrap())
    }

    /// Drill into the points of `level` represented by `selected` landmarks
    /// of `level + 1`, which must already be projected.
    pub fn project_subset(&self, level: usize, selected: &[usize]) -> Result<Embedding> {
        let parent = self
            .embeddings
            .get(level + 1)
            .and_then(Option::as_ref)
            .ok_or(HumapError::Ordering { level, required: level + 1 })?;
        project_subset(self.hierarchy, level, selected, parent, self.theta, &self.params, None)
    }
}
