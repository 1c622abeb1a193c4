mod common;

use std::collections::HashSet;

use common::*;
use humap::embed::{spectral_init, symmetrize};
use humap::fuzzy_graph::{smooth_knn_row, FuzzyGraph, SIGMA_MAX_ITER, SIGMA_TOLERANCE};
use humap::hierarchy::{
    associate_landmarks, knn_from_dissimilarity, landmark_dissimilarity,
    representation_neighborhoods, walk_endpoint_counts, AssociationStage, LandmarkSet, RnhMatrix,
    RnhParams, WalkParams,
};
use humap::metrics::{
    demap, neighborhood_preservation_curve, procrustes_disparity, rank_quality,
};
use humap::{build_knn, transition_matrix, DataMatrix, ExecMode, NeighborGraph, SparseGraph};
use rand::Rng;

#[test]
fn knn_matches_brute_force() {
    for (n, d, k, seed) in [(500, 6, 15, 1), (120, 2, 7, 2), (40, 30, 39, 3)] {
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| uniform_points(n, d, seed).row(i).to_vec()).collect();
        // exact duplicates exercise the tie rule
        rows[n - 1] = rows[0].clone();
        rows[n - 2] = rows[0].clone();
        let data = DataMatrix::from_rows(&rows).unwrap();
        for mode in [ExecMode::Deterministic, ExecMode::Parallel] {
            let g = build_knn(&data, k, mode).unwrap();
            for i in 0..n {
                let expect: Vec<(usize, f64)> = sorted_neighbors(&data, i).into_iter().take(k).collect();
                let (ids, ds) = g.row(i);
                assert_eq!(ids, expect.iter().map(|e| e.0).collect::<Vec<_>>().as_slice(), "row {i}");
                for (a, b) in ds.iter().zip(&expect) {
                    assert!((a - b.1).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn bandwidth_matches_grid_scan() {
    let row = [1.0, 2.0, 3.0, 4.0];
    let k = 4;
    let solved = smooth_knn_row(&row, k).unwrap();
    let objective = |sigma: f64| {
        let s: f64 = row.iter().map(|&d| if d <= 1.0 { 1.0 } else { (-(d - 1.0) / sigma).exp() }).sum();
        (s.exp2() - k as f64).abs()
    };
    let samples = 1_000_000;
    let (lo, hi) = (1e-4f64.ln(), 1e4f64.ln());
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..samples {
        let sigma = (lo + (hi - lo) * i as f64 / (samples - 1) as f64).exp();
        let r = objective(sigma);
        if r < best.0 {
            best = (r, sigma);
        }
    }
    assert_eq!(solved.rho, 1.0);
    assert!(
        (solved.sigma - best.1).abs() <= 1e-2 * best.1,
        "solver {} vs grid {}",
        solved.sigma,
        best.1
    );
    assert!(objective(solved.sigma) <= SIGMA_TOLERANCE * k as f64);
}

#[test]
fn constant_row_stops_at_the_cap() {
    let kr = smooth_knn_row(&[2.0; 6], 6).unwrap();
    assert_eq!(kr.iterations, SIGMA_MAX_ITER);
    assert!(kr.sigma.is_finite() && kr.sigma > 0.0);
}

#[test]
fn membership_entries_match_scalar_kernel() {
    let data = uniform_points(200, 4, 11);
    let g = build_knn(&data, 10, ExecMode::Deterministic).unwrap();
    let f = FuzzyGraph::from_neighbors(&g, ExecMode::Deterministic).unwrap();
    for i in 0..200 {
        let (ids, ds) = g.row(i);
        let (rho, sigma) = (f.kernels[i].rho, f.kernels[i].sigma);
        assert_eq!(rho, ds[0]);
        for (&j, &d) in ids.iter().zip(ds) {
            let expect = if d - rho <= 0.0 { 1.0 } else { (-(d - rho) / sigma).exp() };
            assert!((f.strengths.get(i, j) - expect).abs() <= 1e-12);
        }
        let total: f64 = (0..200).map(|j| f.transitions.get(i, j)).sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn dissimilarity_matches_set_intersection() {
    let mut r = rng(5);
    let (n_landmarks, n_cols) = (40, 120);
    let rows: Vec<Vec<usize>> = (0..n_landmarks)
        .map(|_| {
            let size = r.random_range(0..25);
            let mut s: Vec<usize> = (0..size).map(|_| r.random_range(0..n_cols)).collect();
            s.sort_unstable();
            s.dedup();
            s
        })
        .collect();
    let rnh = RnhMatrix::from_member_lists(n_cols, rows.clone()).unwrap();
    let dis = landmark_dissimilarity(&rnh, ExecMode::Deterministic).unwrap();
    let m = rows.iter().map(Vec::len).max().unwrap() as f64;
    for u in 0..n_landmarks {
        let a: HashSet<_> = rows[u].iter().collect();
        for v in 0..n_landmarks {
            let shared = rows[v].iter().filter(|x| a.contains(x)).count();
            let (cols, _) = dis.row(u);
            let stored = cols.contains(&v);
            assert_eq!(stored, u != v && shared > 0, "pattern at ({u},{v})");
            if stored {
                assert!((dis.get(u, v) - (1.0 - shared as f64 / m)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn symmetrization_matches_fuzzy_union() {
    let mut r = rng(8);
    let n = 30;
    let dense: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i != j && r.random_bool(0.2) { r.random::<f64>() } else { 0.0 })
                .collect()
        })
        .collect();
    let rows = dense
        .iter()
        .map(|row| row.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(j, &w)| (j, w)).collect())
        .collect();
    let s = symmetrize(&SparseGraph::from_rows(n, rows).unwrap()).unwrap();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (dense[i][j], dense[j][i]);
            assert!((s.get(i, j) - (a + b - a * b)).abs() <= 1e-12);
        }
    }
}

fn hub_chain() -> Vec<Vec<f64>> {
    // chain 1-2-0-3-4 with node 0 also linked to 1 and 4
    let mut w = vec![vec![0.0; 5]; 5];
    for &(a, b, x) in &[(1, 2, 1.0), (2, 0, 2.0), (0, 3, 1.5), (3, 4, 0.7), (0, 1, 0.9), (0, 4, 1.2)] {
        w[a][b] = x;
        w[b][a] = x;
    }
    w
}

fn dense_to_sparse(w: &[Vec<f64>]) -> SparseGraph {
    let rows = w
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(j, &x)| (j, x)).collect())
        .collect();
    SparseGraph::from_rows(w.len(), rows).unwrap()
}

#[test]
fn walk_endpoints_match_exact_chain_distribution() {
    let w = hub_chain();
    let n = w.len();
    let p: Vec<Vec<f64>> = w
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect();
    let mut dist = vec![1.0 / n as f64; n];
    for _ in 0..10 {
        dist = (0..n).map(|j| (0..n).map(|i| dist[i] * p[i][j]).sum()).collect();
    }
    let t = transition_matrix(&dense_to_sparse(&w)).unwrap();
    let walks = WalkParams { walks_per_point: 2000, walk_length: 10 };
    let counts = walk_endpoint_counts(&t, walks, 17, "landmark-walks", ExecMode::Deterministic);
    let total = (n * walks.walks_per_point) as f64;
    assert_eq!(counts.iter().sum::<u64>() as f64, total);
    for s in 0..n {
        let freq = counts[s] as f64 / total;
        let se = (dist[s] * (1.0 - dist[s]) / total).sqrt();
        assert!((freq - dist[s]).abs() <= 3.0 * se, "state {s}: {freq} vs {}", dist[s]);
    }
}

fn path_graph(n: usize) -> (NeighborGraph, SparseGraph) {
    let rows = (0..n)
        .map(|i| {
            let mut r = Vec::new();
            if i > 0 {
                r.push((i - 1, 1.0));
            }
            if i + 1 < n {
                r.push((i + 1, 1.0));
            }
            r
        })
        .collect::<Vec<_>>();
    let g = NeighborGraph::from_rows(2, rows.clone()).unwrap();
    let t = transition_matrix(&SparseGraph::from_rows(n, rows).unwrap()).unwrap();
    (g, t)
}

#[test]
fn absorbed_walks_match_first_hit_reachability() {
    let n = 6;
    let (g, t) = path_graph(n);
    let landmarks = LandmarkSet { level: 1, landmark_ids: vec![0, n - 1], visit_counts: vec![] };
    let (omega, upsilon) = (1000, 30);
    let params = RnhParams { omega, upsilon, beta: 0.0 };
    let rnh = representation_neighborhoods(&g, &t, &landmarks, params, 3, ExecMode::Deterministic).unwrap();
    // probability of being absorbed at each end within `upsilon` steps
    for (p, &target) in landmarks.landmark_ids.iter().enumerate() {
        for start in 1..n - 1 {
            let mut mass = vec![0.0; n];
            mass[start] = 1.0;
            let mut hit: f64 = 0.0;
            for _ in 0..upsilon {
                let mut next = vec![0.0; n];
                for s in 1..n - 1 {
                    next[s - 1] += 0.5 * mass[s];
                    next[s + 1] += 0.5 * mass[s];
                }
                hit += next[target];
                next[0] = 0.0;
                next[n - 1] = 0.0;
                mass = next;
            }
            assert!(hit > 0.0);
            let miss_all = (1.0 - hit).powi(omega as i32);
            assert!(miss_all < 1e-9);
            assert!(rnh.contains(p, start), "landmark {target} should hold {start}");
        }
        assert!(rnh.contains(p, target));
    }
}

#[test]
fn upper_knn_matches_full_row_sort() {
    let mut r = rng(21);
    let n = 50;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut row = Vec::new();
            for j in (0..n).filter(|&j| j != i) {
                if r.random_bool(0.3) {
                    row.push((j, r.random_range(0..20) as f64 / 19.0));
                }
            }
            if row.is_empty() {
                row.push(((i + 1) % n, 0.5));
            }
            row
        })
        .collect();
    let dis = SparseGraph::from_rows_keep_zeros(n, rows.clone()).unwrap();
    let g = knn_from_dissimilarity(&dis, 8).unwrap();
    for (i, mut row) in rows.into_iter().enumerate() {
        row.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        row.truncate(8);
        let (ids, ds) = g.row(i);
        assert_eq!(ids, row.iter().map(|e| e.0).collect::<Vec<_>>().as_slice());
        assert_eq!(ds, row.iter().map(|e| e.1).collect::<Vec<_>>().as_slice());
    }
}

#[test]
fn association_on_a_path_matches_hand_trace() {
    let data = DataMatrix::from_rows(&(0..7).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
    let g = build_knn(&data, 2, ExecMode::Deterministic).unwrap();
    use AssociationStage::*;

    // landmark at the left end: 1 and 2 are its neighbors, the rest chain
    let a = associate_landmarks(&g, &LandmarkSet { level: 1, landmark_ids: vec![0], visit_counts: vec![] }).unwrap();
    assert_eq!(a.landmark_of, vec![0; 7]);
    assert_eq!(a.stage, vec![Landmark, LandmarkNeighbor, LandmarkNeighbor, Neighborhood, Neighborhood, Neighborhood, Neighborhood]);

    // landmark at the right end: 4 and 5 are claimed, 3 sees 4, and 0..=2
    // find nothing in their rows (0:[1,2] 1:[0,2] 2:[1,3] with 3 still
    // unassigned when 2 is visited) so they fall back to search
    let a = associate_landmarks(&g, &LandmarkSet { level: 1, landmark_ids: vec![6], visit_counts: vec![] }).unwrap();
    assert_eq!(a.landmark_of, vec![0; 7]);
    assert_eq!(a.stage, vec![Search, Search, Search, Neighborhood, LandmarkNeighbor, LandmarkNeighbor, Landmark]);
}

#[test]
fn fiedler_ordering_on_a_path() {
    let n = 10;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut r = Vec::new();
            if i > 0 {
                r.push((i - 1, 1.0));
            }
            if i + 1 < n {
                r.push((i + 1, 1.0));
            }
            r
        })
        .collect();
    let g = SparseGraph::from_rows(n, rows).unwrap();
    let init = spectral_init(&g, 4);
    assert!(!init.used_random_fallback);

    // dense oracle: second-smallest eigenvector of I - D^-1/2 W D^-1/2
    let mut lap = nalgebra::DMatrix::<f64>::identity(n, n);
    let deg: Vec<f64> = (0..n).map(|i| g.row_sum(i)).collect();
    for (i, j, w) in g.entries() {
        lap[(i, j)] -= w / (deg[i] * deg[j]).sqrt();
    }
    let eig = lap.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let fiedler: Vec<f64> =
        eig.eigenvectors.column(order[1]).iter().zip(&deg).map(|(v, d)| v / d.sqrt()).collect();
    let oracle_increasing = fiedler[n - 1] > fiedler[0];

    let x: Vec<f64> = init.coords.iter().map(|c| c[0]).collect();
    let increasing = x.windows(2).all(|w| w[1] > w[0]);
    let decreasing = x.windows(2).all(|w| w[1] < w[0]);
    assert!(increasing || decreasing, "{x:?}");
    for i in 0..n - 1 {
        assert_eq!(fiedler[i + 1] > fiedler[i], oracle_increasing);
    }
    assert!(init.coords.iter().flatten().all(|v| v.abs() <= 10.0 + 1e-3));
}

#[test]
fn disconnected_triangles_land_apart() {
    let edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
    let mut rows = vec![Vec::new(); 6];
    for &(a, b) in &edges {
        rows[a].push((b, 1.0));
        rows[b].push((a, 1.0));
    }
    for r in &mut rows {
        r.sort_by_key(|e| e.0);
    }
    let init = spectral_init(&SparseGraph::from_rows(6, rows).unwrap(), 9);
    let c = &init.coords;
    let span = |ids: std::ops::Range<usize>, axis: usize| {
        ids.map(|i| c[i][axis]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let separated = (0..2).any(|axis| {
        let (a, b) = (span(0..3, axis), span(3..6, axis));
        a.1 < b.0 || b.1 < a.0
    });
    assert!(separated, "{c:?}");
    for tri in [0..3, 3..6] {
        let ids: Vec<usize> = tri.collect();
        for &a in &ids {
            for &b in &ids {
                assert!(a == b || c[a] != c[b]);
            }
        }
    }
}

#[test]
fn procrustes_matches_closed_form() {
    let a = [[0.0, 0.0], [1.0, 0.2], [2.1, -0.4], [0.3, 1.7], [-1.2, 0.9]];
    let b = [[0.5, 0.1], [0.9, 1.1], [1.4, 2.6], [-0.8, 0.4], [0.2, -1.3]];
    let d = procrustes_disparity(&a, &b).unwrap();
    assert!((d - procrustes_oracle(&a, &b)).abs() <= 1e-9);
    assert!(d > 0.01);
    // reflection is an orthogonal map too
    let mirrored: Vec<[f64; 2]> = a.iter().map(|p| [-p[0], p[1]]).collect();
    assert!(procrustes_disparity(&a, &mirrored).unwrap() <= 1e-9);
    let turned: Vec<[f64; 2]> = a.iter().map(|p| [-3.0 * p[1] + 4.0, 3.0 * p[0] - 1.0]).collect();
    assert!(procrustes_disparity(&a, &turned).unwrap() <= 1e-9);

    let mut r = rng(77);
    for _ in 0..50 {
        let x: Vec<[f64; 2]> = (0..12).map(|_| [r.random(), r.random()]).collect();
        let y: Vec<[f64; 2]> = (0..12).map(|_| [r.random(), r.random()]).collect();
        assert!((procrustes_disparity(&x, &y).unwrap() - procrustes_oracle(&x, &y)).abs() <= 1e-9);
    }
}

#[test]
fn demap_matches_dense_shortest_paths() {
    let mut r = rng(31);
    for (n, k) in [(40, 5), (60, 4), (25, 2)] {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let t = r.random_range(1.5 * std::f64::consts::PI..4.5 * std::f64::consts::PI);
                vec![t * t.cos(), r.random_range(0.0..3.0), t * t.sin()]
            })
            .collect();
        let high = DataMatrix::from_rows(&rows).unwrap();
        let low = uniform_layout(n, 32);

        let expect = reference_demap(&high, &low, k);
        let got = demap(&high, &low, k).unwrap();
        assert!((got - expect).abs() <= 1e-9, "n={n}: {got} vs {expect}");
    }
}

#[test]
fn rank_quality_four_point_hand_count() {
    // input order along a line: 0, 1, 3, 7; the layout swaps the last two
    let high = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0], vec![7.0]]).unwrap();
    let low = [[0.0, 0.0], [1.0, 0.0], [7.0, 0.0], [3.0, 0.0]];
    // k = 1, normaliser 2 / (n k (2n - 3k - 1)) = 1/8
    // trustworthiness: point 2's layout neighbor 3 has input rank 3 (+2),
    //   point 3's layout neighbor 1 has input rank 2 (+1)
    // continuity: point 2's input neighbor 1 has layout rank 2 (+1),
    //   point 3's input neighbor 2 has layout rank 3 (+2)
    let (c, t) = rank_quality(&high, &low, 1).unwrap();
    assert!((t - (1.0 - 3.0 / 8.0)).abs() < 1e-15);
    assert!((c - (1.0 - 3.0 / 8.0)).abs() < 1e-15);

    // asymmetric variant on five points, k = 2, normaliser 2 / (5*2*(10-6-1)) = 1/15
    let high = DataMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.5], vec![4.5], vec![8.0]]).unwrap();
    let low = [[0.0, 0.0], [1.0, 0.0], [9.0, 0.0], [4.5, 0.0], [2.5, 0.0]];
    let (c, t) = rank_quality(&high, &low, 2).unwrap();
    let (ec, et) = brute_rank_quality(&high, &low, 2);
    assert!((c - ec).abs() < 1e-15 && (t - et).abs() < 1e-15);
}

#[test]
fn rank_quality_matches_brute_force() {
    for seed in 0..5 {
        let high = uniform_points(40, 4, seed);
        let low = uniform_layout(40, seed + 100);
        for k in [1, 3, 10, 19] {
            let (c, t) = rank_quality(&high, &low, k).unwrap();
            let (ec, et) = brute_rank_quality(&high, &low, k);
            assert!((c - ec).abs() < 1e-12 && (t - et).abs() < 1e-12, "k={k}");
        }
    }
}

#[test]
fn neighborhood_preservation_matches_set_oracle() {
    let high = uniform_points(50, 5, 40);
    let low = uniform_layout(50, 41);
    let low_data = DataMatrix::from_rows(&low.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap();
    let ks: Vec<usize> = (1..=30).collect();
    let curve = neighborhood_preservation_curve(&high, &low, &ks).unwrap();
    for (&k, &got) in ks.iter().zip(&curve) {
        let mut total = 0.0;
        for i in 0..50 {
            let a: HashSet<usize> = sorted_neighbors(&high, i).iter().take(k).map(|e| e.0).collect();
            let b: HashSet<usize> = sorted_neighbors(&low_data, i).iter().take(k).map(|e| e.0).collect();
            total += a.intersection(&b).count() as f64 / k as f64;
        }
        assert!((got - total / 50.0).abs() < 1e-12, "k={k}");
    }
}
