use rand::Rng;

use crate::sparse::SparseGraph;

/// One step of the chain: sample a successor of `state` from its row.
/// States without outgoing edges stay put.
#[inline]
pub(crate) fn step<R: Rng>(transitions: &SparseGraph, state: usize, rng: &mut R) -> usize {
    let (cols, probs) = transitions.row(state);
    if cols.is_empty() {
        return state;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (&c, &p) in cols.iter().zip(probs) {
        acc += p;
        if u < acc {
            return c;
        }
    }
    // rounding left the cumulative sum a hair under 1
    *cols.last().unwrap()
}
