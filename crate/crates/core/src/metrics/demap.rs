//! Rank correlation between kNN-graph geodesics and layout distances.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::{check_pair, Layout, Space};
use crate::data::DataMatrix;
use crate::error::{HumapError, Result};
use crate::exec::ExecMode;
use crate::knn::build_knn;
use crate::seed;

/// Inputs larger than this are subsampled before computing geodesics.
pub const DEMAP_MAX_POINTS: usize = 2000;

/// All-pairs shortest paths over the undirected Euclidean-weighted kNN graph.
/// Unreachable pairs are `f64::INFINITY`.
pub fn geodesic_distances(high: &DataMatrix, knn_k: usize) -> Result<Vec<Vec<f64>>> {
    let n = high.n_points();
    let graph = build_knn(high, knn_k.min(n - 1).max(1), ExecMode::Parallel)?;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        let (ids, ds) = graph.row(i);
        for (&j, &d) in ids.iter().zip(ds) {
            adj[i].push((j, d));
            adj[j].push((i, d));
        }
    }
    Ok((0..n).into_par_iter().map(|s| dijkstra(&adj, s)).collect())
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Dist(0.0), source)));
    while let Some(Reverse((Dist(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    dist
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(HumapError::UndefinedMetric("need at least two paired values".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(HumapError::UndefinedMetric("a distance set is constant".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// DEMaP with the default subsampling budget and seed 0.
pub fn demap(high: &DataMatrix, low: &[[f64; 2]], knn_k: usize) -> Result<f64> {
    demap_with(high, low, knn_k, DEMAP_MAX_POINTS, 0)
}

/// Spearman correlation between geodesic input distances and Euclidean
/// layout distances over all point pairs connected in the kNN graph. Above
/// `max_points` points a seeded uniform subsample is used.
pub fn demap_with(
    high: &DataMatrix,
    low: &[[f64; 2]],
    knn_k: usize,
    max_points: usize,
    seed: u64,
) -> Result<f64> {
    check_pair(high, low)?;
    if knn_k == 0 {
        return Err(HumapError::param("DEMaP needs k >= 1"));
    }
    let n = high.n_points();
    if n < 2 {
        return Err(HumapError::UndefinedMetric("need at least two points".into()));
    }
    let (high, low): (std::borrow::Cow<DataMatrix>, Vec<[f64; 2]>) = if n > max_points {
        let mut rng = seed::stream(seed, "demap-subsample", 0);
        let mut ids = sample(&mut rng, n, max_points).into_vec();
        ids.sort_unstable();
        (std::borrow::Cow::Owned(high.select_rows(&ids)?), ids.iter().map(|&i| low[i]).collect())
    } else {
        (std::borrow::Cow::Borrowed(high), low.to_vec())
    };
    let geo = geodesic_distances(&high, knn_k)?;
    let layout = Layout(&low);
    let mut gx = Vec::new();
    let mut ly = Vec::new();
    for (i, row) in geo.iter().enumerate() {
        for (j, &g) in row.iter().enumerate().skip(i + 1) {
            if g.is_finite() {
                gx.push(g);
                ly.push(layout.dist(i, j));
            }
        }
    }
    spearman(&gx, &ly)
}
