//! Adaptive-bandwidth membership strengths and the Markov chain built on them.
//!
//! For a point `i` with sorted neighbor distances `d_1 <= ... <= d_k` the
//! membership of neighbor `j` is `exp(-(d_j - rho_i) / sigma_i)`, where
//! `rho_i = d_1` and `sigma_i` is chosen so that `2^(sum_j p_j) = k`.

use crate::error::{HumapError, Result};
use crate::exec::{map_indices, ExecMode};
use crate::knn::NeighborGraph;
use crate::sparse::SparseGraph;

pub const SIGMA_MIN: f64 = 1e-5;
pub const SIGMA_MAX: f64 = 1e5;
pub const SIGMA_MAX_ITER: usize = 64;
/// Relative tolerance on `|2^(sum p) - k|`, scaled by `k`.
pub const SIGMA_TOLERANCE: f64 = 1e-3;

/// Local kernel parameters for one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRow {
    /// Distance to the closest neighbor.
    pub rho: f64,
    /// Bandwidth.
    pub sigma: f64,
    /// Number of bisection steps used; equals `SIGMA_MAX_ITER` when the
    /// search hit its cap.
    pub iterations: usize,
}

/// Membership of a neighbor at distance `d` under the given kernel.
#[inline]
pub fn membership(d: f64, rho: f64, sigma: f64) -> f64 {
    if d <= rho {
        1.0
    } else {
        (-(d - rho) / sigma).exp()
    }
}

fn membership_sum(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances.iter().map(|&d| membership(d, rho, sigma)).sum()
}

/// `2^(sum p) - k` for the given row and bandwidth.
pub fn kernel_residual(distances: &[f64], rho: f64, sigma: f64, k: usize) -> f64 {
    membership_sum(distances, rho, sigma).exp2() - k as f64
}

/// Solve for the bandwidth of one row by log-space bisection over
/// `[SIGMA_MIN, SIGMA_MAX]`.
pub fn smooth_knn_row(distances: &[f64], k: usize) -> Result<KernelRow> {
    if distances.is_empty() {
        return Err(HumapError::input("cannot fit a kernel to an empty neighbor row"));
    }
    let rho = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let target = k as f64;
    let tol = SIGMA_TOLERANCE * target;
    let (mut lo, mut hi) = (SIGMA_MIN.ln(), SIGMA_MAX.ln());
    let mut sigma = ((lo + hi) * 0.5).exp();
    for it in 1..=SIGMA_MAX_ITER {
        let mid = (lo + hi) * 0.5;
        sigma = mid.exp();
        let residual = kernel_residual(distances, rho, sigma, k);
        if residual.abs() <= tol {
            return Ok(KernelRow { rho, sigma, iterations: it });
        }
        // the membership sum grows with sigma
        if residual > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(KernelRow { rho, sigma, iterations: SIGMA_MAX_ITER })
}

/// Kernel parameters for every row of `graph`.
pub fn smooth_knn(graph: &NeighborGraph, mode: ExecMode) -> Result<Vec<KernelRow>> {
    map_indices(mode, graph.n_points(), |i| smooth_knn_row(graph.row(i).1, graph.k()))
        .into_iter()
        .collect()
}

/// Directed membership strengths `p(i|j)` for every kNN edge.
pub fn membership_strengths(graph: &NeighborGraph, kernels: &[KernelRow]) -> Result<SparseGraph> {
    let n = graph.n_points();
    if kernels.len() != n {
        return Err(HumapError::param(format!(
            "{} kernels supplied for {n} points",
            kernels.len()
        )));
    }
    let rows = (0..n)
        .map(|i| {
            let (ids, ds) = graph.row(i);
            let KernelRow { rho, sigma, .. } = kernels[i];
            ids.iter().zip(ds).map(|(&j, &d)| (j, membership(d, rho, sigma))).collect()
        })
        .collect();
    SparseGraph::from_rows(n, rows)
}

/// Row-normalize strengths into transition probabilities.
pub fn transition_matrix(strengths: &SparseGraph) -> Result<SparseGraph> {
    let mut weights = Vec::with_capacity(strengths.nnz());
    for r in 0..strengths.n_rows() {
        let total = strengths.row_sum(r);
        if total.is_nan() || total <= 0.0 {
            return Err(HumapError::DegenerateRow { row: r });
        }
        weights.extend(strengths.row(r).1.iter().map(|w| w / total));
    }
    SparseGraph::from_csr(
        strengths.n_rows(),
        strengths.n_cols(),
        strengths.offsets().to_vec(),
        strengths.indices().to_vec(),
        weights,
    )
}

/// kNN graph, kernels, strengths and transitions computed together.
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub kernels: Vec<KernelRow>,
    pub strengths: SparseGraph,
    pub transitions: SparseGraph,
}

impl FuzzyGraph {
    pub fn from_neighbors(graph: &NeighborGraph, mode: ExecMode) -> Result<Self> {
        let kernels = smooth_knn(graph, mode)?;
        let strengths = membership_strengths(graph, &kernels)?;
        let transitions = transition_matrix(&strengths)?;
        Ok(FuzzyGraph { kernels, strengths, transitions })
    }
}
