#![allow(dead_code)]

use humap::{DataMatrix, NeighborGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Isotropic Gaussian clusters around centers drawn uniformly in a box.
/// Returns the data and the cluster label of every point.
pub fn blobs(n: usize, dims: usize, clusters: usize, std_dev: f64, box_half: f64, seed: u64) -> (DataMatrix, Vec<usize>) {
    let mut r = rng(seed);
    let centers: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..dims).map(|_| r.random_range(-box_half..box_half)).collect())
        .collect();
    let noise = Normal::new(0.0, std_dev).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % clusters;
        rows.push(centers[c].iter().map(|&m| m + noise.sample(&mut r)).collect());
        labels.push(c);
    }
    (DataMatrix::from_rows(&rows).unwrap(), labels)
}

pub fn uniform_points(n: usize, dims: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..dims).map(|_| r.random::<f64>()).collect()).collect();
    DataMatrix::from_rows(&rows).unwrap()
}

pub fn uniform_layout(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = rng(seed);
    (0..n).map(|_| [r.random::<f64>() * 10.0, r.random::<f64>() * 10.0]).collect()
}

/// Reference Euclidean distance, written independently of the library.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    s.sqrt()
}

/// All other points of `i` sorted by (distance, index).
pub fn sorted_neighbors(data: &DataMatrix, i: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..data.n_points())
        .filter(|&j| j != i)
        .map(|j| (j, dist(data.row(i), data.row(j))))
        .collect();
    all.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    all
}

/// Random kNN-style graph whose rows hold `k` distinct non-self neighbors
/// with positive distances. A ring edge keeps it connected.
pub fn random_neighbor_graph(n: usize, k: usize, seed: u64) -> NeighborGraph {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|i| {
            let mut ids = vec![(i + 1) % n];
            while ids.len() < k {
                let j = r.random_range(0..n);
                if j != i && !ids.contains(&j) {
                    ids.push(j);
                }
            }
            ids.into_iter().map(|j| (j, r.random_range(0.05..5.0))).collect()
        })
        .collect();
    NeighborGraph::from_rows(k, rows).unwrap()
}

/// Disparity from the closed form for 2x2 cross products: the nuclear norm
/// of M is sqrt(|M|_F^2 + 2|det M|).
pub fn procrustes_oracle(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let std = |p: &[[f64; 2]]| {
        let n = p.len() as f64;
        let mx = p.iter().map(|q| q[0]).sum::<f64>() / n;
        let my = p.iter().map(|q| q[1]).sum::<f64>() / n;
        let c: Vec<[f64; 2]> = p.iter().map(|q| [q[0] - mx, q[1] - my]).collect();
        let s = c.iter().map(|q| q[0] * q[0] + q[1] * q[1]).sum::<f64>().sqrt();
        c.into_iter().map(|q| [q[0] / s, q[1] / s]).collect::<Vec<_>>()
    };
    let (a, b) = (std(a), std(b));
    let mut m = [[0.0; 2]; 2];
    for (p, q) in a.iter().zip(&b) {
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += p[r] * q[c];
            }
        }
    }
    let fro2 = m.iter().flatten().map(|x| x * x).sum::<f64>();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let nuclear = (fro2 + 2.0 * det.abs()).sqrt();
    1.0 - nuclear * nuclear
}

pub fn reference_ranks(x: &[f64]) -> Vec<f64> {
    let mut ranks = vec![0.0; x.len()];
    for i in 0..x.len() {
        let below = x.iter().filter(|&&v| v < x[i]).count() as f64;
        let equal = x.iter().filter(|&&v| v == x[i]).count() as f64;
        ranks[i] = below + (equal + 1.0) / 2.0;
    }
    ranks
}

pub fn reference_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (reference_ranks(x), reference_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// All-pairs shortest paths over the undirected kNN graph by Floyd-Warshall.
pub fn dense_geodesics(high: &DataMatrix, k: usize) -> Vec<Vec<f64>> {
    let n = high.n_points();
    let mut geo = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        geo[i][i] = 0.0;
        for (j, d) in sorted_neighbors(high, i).into_iter().take(k) {
            geo[i][j] = geo[i][j].min(d);
            geo[j][i] = geo[j][i].min(d);
        }
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = geo[i][m] + geo[m][j];
                if via < geo[i][j] {
                    geo[i][j] = via;
                }
            }
        }
    }
    geo
}

/// Spearman correlation of geodesic and layout distances over connected pairs.
pub fn reference_demap(high: &DataMatrix, low: &[[f64; 2]], k: usize) -> f64 {
    let geo = dense_geodesics(high, k);
    let n = high.n_points();
    let (mut gx, mut ly) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            if geo[i][j].is_finite() {
                gx.push(geo[i][j]);
                ly.push(dist(&low[i], &low[j]));
            }
        }
    }
    reference_spearman(&gx, &ly)
}

pub fn brute_rank_quality(high: &DataMatrix, low: &[[f64; 2]], k: usize) -> (f64, f64) {
    let n = high.n_points();
    let low_data = DataMatrix::from_rows(&low.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
    let rank = |data: &DataMatrix, i: usize, j: usize| {
        sorted_neighbors(data, i).iter().position(|e| e.0 == j).unwrap() + 1
    };
    let set = |data: &DataMatrix, i: usize| -> Vec<usize> {
        sorted_neighbors(data, i).iter().take(k).map(|e| e.0).collect()
    };
    let (mut pt, mut pc) = (0.0, 0.0);
    for i in 0..n {
        let (hs, ls) = (set(high, i), set(&low_data, i));
        for &j in &ls {
            if !hs.contains(&j) {
                pt += (rank(high, i, j) - k) as f64;
            }
        }
        for &j in &hs {
            if !ls.contains(&j) {
                pc += (rank(&low_data, i, j) - k) as f64;
            }
        }
    }
    let norm = 2.0 / (n * k * (2 * n - 3 * k - 1)) as f64;
    (1.0 - norm * pc, 1.0 - norm * pt)
}
