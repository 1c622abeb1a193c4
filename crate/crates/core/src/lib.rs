//! Hierarchical manifold approximation and projection.
//!
//! The pipeline builds a kNN graph over the input, turns it into adaptive
//! membership strengths and a Markov chain, and repeatedly samples landmarks
//! by random walks to form coarser levels. Levels are embedded top-down in
//! 2-D; points inherited from the level above keep their coordinates up to a
//! movement fraction `theta`, which keeps successive views stable.

pub mod data;
pub mod embed;
pub mod error;
pub mod exec;
pub mod fuzzy_graph;
pub mod hierarchy;
pub mod knn;
pub mod metrics;
pub mod persist;
pub mod seed;
pub mod sparse;

pub use data::{DataMatrix, MatrixFormat};
pub use embed::Embedding;
pub use error::{HumapError, Result};
pub use exec::ExecMode;
pub use fuzzy_graph::{membership_strengths, smooth_knn_row, transition_matrix, FuzzyGraph, KernelRow};
pub use hierarchy::{build_hierarchy, Hierarchy, HierarchyParams};
pub use knn::{build_knn, NeighborGraph};
pub use sparse::SparseGraph;
