//! Spectral initialization from the symmetric normalized Laplacian.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::seed;
use crate::sparse::SparseGraph;

/// Components up to this size are solved with a dense eigendecomposition.
pub const DENSE_LIMIT: usize = 2000;
pub const BOX_HALF_WIDTH: f64 = 10.0;
pub const SPECTRAL_JITTER: f64 = 1e-4;

const BLOCK: usize = 8;
const MAX_ITER: usize = 3000;
const RESIDUAL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInit {
    pub coords: Vec<[f64; 2]>,
    /// Set when an eigen-solve failed to converge and random coordinates
    /// were used for at least one component.
    pub used_random_fallback: bool,
}

/// Connected components of a symmetric graph, each sorted, ordered by their
/// smallest member.
pub fn connected_components(g: &SparseGraph) -> Vec<Vec<usize>> {
    let n = g.n_rows();
    let mut label = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        label[s] = id;
        let mut head = 0;
        while head < members.len() {
            let v = members[head];
            head += 1;
            for &w in g.row(v).0 {
                if label[w] == usize::MAX {
                    label[w] = id;
                    members.push(w);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

/// Two nontrivial Laplacian eigenvectors per component, scaled into the
/// `[-10, 10]` box. Several components are laid out on a grid of cells.
pub fn spectral_init(sym: &SparseGraph, seed: u64) -> SpectralInit {
    let n = sym.n_rows();
    let comps = connected_components(sym);
    let grid = (comps.len() as f64).sqrt().ceil() as usize;
    let cell = 2.0 * BOX_HALF_WIDTH / grid as f64;
    let half_extent = if comps.len() == 1 { BOX_HALF_WIDTH } else { 0.4 * cell };
    let mut coords = vec![[0.0; 2]; n];
    let mut used_random_fallback = false;

    for (c, members) in comps.iter().enumerate() {
        let local = match members.len() {
            1 => vec![[0.0, 0.0]],
            2 => vec![[-1.0, 0.0], [1.0, 0.0]],
            _ => {
                let sub = sym.restrict(members);
                match component_eigenvectors(&sub, seed ^ c as u64) {
                    Some(v) => v,
                    None => {
                        used_random_fallback = true;
                        let mut rng = seed::stream(seed, "spectral-fallback", c as u64);
                        (0..members.len())
                            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                            .collect()
                    }
                }
            }
        };
        let max_abs = local.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = if max_abs > 0.0 { half_extent / max_abs } else { 0.0 };
        let centre = if comps.len() == 1 {
            [0.0, 0.0]
        } else {
            [
                -BOX_HALF_WIDTH + ((c % grid) as f64 + 0.5) * cell,
                -BOX_HALF_WIDTH + ((c / grid) as f64 + 0.5) * cell,
            ]
        };
        for (&m, p) in members.iter().zip(&local) {
            coords[m] = [centre[0] + p[0] * scale, centre[1] + p[1] * scale];
        }
    }

    let mut rng = seed::stream(seed, "spectral-jitter", 0);
    let noise = Normal::new(0.0, SPECTRAL_JITTER).expect("valid normal");
    for p in &mut coords {
        p[0] += noise.sample(&mut rng);
        p[1] += noise.sample(&mut rng);
    }
    SpectralInit { coords, used_random_fallback }
}

/// Normalized adjacency `D^-1/2 W D^-1/2` applied to a block of columns.
fn normalized_adjacency_mul(g: &SparseGraph, inv_sqrt_deg: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(x.nrows(), x.ncols());
    for r in 0..g.n_rows() {
        let (cols, w) = g.row(r);
        for (&c, &v) in cols.iter().zip(w) {
            let s = v * inv_sqrt_deg[r] * inv_sqrt_deg[c];
            for j in 0..x.ncols() {
                y[(r, j)] += s * x[(c, j)];
            }
        }
    }
    y
}

fn component_eigenvectors(g: &SparseGraph, seed: u64) -> Option<Vec<[f64; 2]>> {
    let n = g.n_rows();
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|r| {
            let d = g.row_sum(r);
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let vectors = if n <= DENSE_LIMIT {
        dense_top_eigenvectors(g, &inv_sqrt_deg)
    } else {
        subspace_top_eigenvectors(g, &inv_sqrt_deg, seed)?
    };
    // D^-1/2 v solves the generalized problem L u = lambda D u
    let vectors: Vec<Vec<f64>> = vectors
        .into_iter()
        .map(|v| v.iter().zip(&inv_sqrt_deg).map(|(x, s)| x * s).collect())
        .collect();
    // fix the sign so that the largest-magnitude entry is positive
    let mut out = vec![[0.0; 2]; n];
    for (j, v) in vectors.iter().enumerate() {
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (o, x) in out.iter_mut().zip(v) {
            o[j] = sign * x;
        }
    }
    Some(out)
}

/// Eigenvectors for the 2nd and 3rd largest eigenvalues of the normalized
/// adjacency, i.e. the 2nd and 3rd smallest of the normalized Laplacian.
fn dense_top_eigenvectors(g: &SparseGraph, inv_sqrt_deg: &[f64]) -> Vec<Vec<f64>> {
    let n = g.n_rows();
    let mut m = DMatrix::zeros(n, n);
    for (r, c, v) in g.entries() {
        m[(r, c)] = v * inv_sqrt_deg[r] * inv_sqrt_deg[c];
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    order[1..3].iter().map(|&j| eig.eigenvectors.column(j).iter().copied().collect()).collect()
}

fn subspace_top_eigenvectors(g: &SparseGraph, inv_sqrt_deg: &[f64], seed: u64) -> Option<Vec<Vec<f64>>> {
    let n = g.n_rows();
    let mut rng = seed::stream(seed, "spectral-subspace", 0);
    let mut x = DMatrix::from_fn(n, BLOCK, |_, _| rng.random_range(-1.0..1.0));
    // the trivial eigenvector is known exactly: D^1/2 1
    for r in 0..n {
        x[(r, 0)] = if inv_sqrt_deg[r] > 0.0 { 1.0 / inv_sqrt_deg[r] } else { 0.0 };
    }
    x = x.qr().q();
    // (I + N) / 2 has the same eigenvectors with a non-negative spectrum
    let apply = |x: &DMatrix<f64>| (normalized_adjacency_mul(g, inv_sqrt_deg, x) + x) * 0.5;
    for it in 0..MAX_ITER {
        let y = apply(&x);
        if it % 10 == 9 {
            let h = x.transpose() * &y;
            let h = (&h + h.transpose()) * 0.5;
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..BLOCK).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let ritz = &x * &eig.eigenvectors;
            let bx = &y * &eig.eigenvectors;
            let converged = order[..3].iter().all(|&j| {
                let r = bx.column(j) - ritz.column(j) * eig.eigenvalues[j];
                r.norm() < RESIDUAL_TOL
            });
            if converged {
                return Some(order[1..3].iter().map(|&j| ritz.column(j).iter().copied().collect()).collect());
            }
        }
        x = y.qr().q();
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    None
}
