//! Two-dimensional layouts of hierarchy levels.

mod curve;
mod layout;
mod project;
mod spectral;
mod symmetrize;

pub use curve::{curve, fit_curve_params, target_curve, DEFAULT_MIN_DIST, DEFAULT_SPREAD};
pub use layout::{
    optimize_layout, LayoutParams, DEFAULT_LEARNING_RATE, DEFAULT_NEGATIVE_SAMPLE_RATE,
    GRADIENT_CLIP,
};
pub use project::{project_level, project_subset, Projector, INHERIT_JITTER};
pub use spectral::{connected_components, spectral_init, SpectralInit};
pub use symmetrize::{fuzzy_union, symmetrize};

/// Coordinates for a set of points of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    /// True for points inherited from the level above.
    pub fixed_mask: Vec<bool>,
    pub theta: f64,
    pub level: usize,
    /// Level-local id of each row, ascending.
    pub point_ids: Vec<usize>,
    /// Set when spectral initialization fell back to random coordinates.
    pub spectral_fallback: bool,
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Row holding level-local point `id`, if present.
    pub fn row_of(&self, id: usize) -> Option<usize> {
        self.point_ids.binary_search(&id).ok()
    }
}
