use crate::error::{HumapError, Result};
use crate::sparse::SparseGraph;

/// Fuzzy union `P + Pᵀ - P∘Pᵀ` of a directed strength graph.
pub fn symmetrize(strengths: &SparseGraph) -> Result<SparseGraph> {
    if strengths.n_rows() != strengths.n_cols() {
        return Err(HumapError::param("symmetrization needs a square matrix"));
    }
    let transposed = strengths.transpose();
    let rows = (0..strengths.n_rows())
        .map(|r| {
            let (ca, wa) = strengths.row(r);
            let (cb, wb) = transposed.row(r);
            let mut out = Vec::with_capacity(ca.len() + cb.len());
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let (c, a, b) = match (ca.get(i), cb.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        (x, wa[i - 1], wb[j - 1])
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        (x, wa[i - 1], 0.0)
                    }
                    (Some(&x), None) => {
                        i += 1;
                        (x, wa[i - 1], 0.0)
                    }
                    (_, Some(&y)) => {
                        j += 1;
                        (y, 0.0, wb[j - 1])
                    }
                    (None, None) => unreachable!(),
                };
                out.push((c, fuzzy_union(a, b)));
            }
            out
        })
        .collect();
    SparseGraph::from_rows(strengths.n_cols(), rows)
}

/// `a + b - a*b`, written so that swapping the arguments is bit-exact.
#[inline]
pub fn fuzzy_union(a: f64, b: f64) -> f64 {
    (a + b) - a * b
}
