//! Stochastic gradient layout with negative sampling.
//!
//! Each stored edge is sampled in proportion to its weight; every sample
//! pulls both endpoints together and pushes the head away from a few random
//! points. Points flagged as fixed have every displacement multiplied by
//! `theta`, so with `theta = 0` they never move.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{fit_curve_params, DEFAULT_MIN_DIST, DEFAULT_SPREAD};
use super::Embedding;
use crate::error::{HumapError, Result};
use crate::exec::ExecMode;
use crate::seed;
use crate::sparse::SparseGraph;

pub const GRADIENT_CLIP: f64 = 4.0;
pub const DEFAULT_NEGATIVE_SAMPLE_RATE: usize = 5;
pub const DEFAULT_LEARNING_RATE: f64 = 1.0;
pub const SMALL_DATA_EPOCHS: usize = 500;
pub const LARGE_DATA_EPOCHS: usize = 200;
pub const LARGE_DATA_THRESHOLD: usize = 10_000;
const PARALLEL_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// `None` picks 500 epochs up to 10,000 points and 200 beyond.
    pub n_epochs: Option<usize>,
    pub min_dist: f64,
    pub spread: f64,
    pub negative_sample_rate: usize,
    /// Initial step size; decays linearly to zero.
    pub learning_rate: f64,
    pub seed: u64,
    pub mode: ExecMode,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            n_epochs: None,
            min_dist: DEFAULT_MIN_DIST,
            spread: DEFAULT_SPREAD,
            negative_sample_rate: DEFAULT_NEGATIVE_SAMPLE_RATE,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            mode: ExecMode::Deterministic,
        }
    }
}

impl LayoutParams {
    pub fn epochs_for(&self, n_points: usize) -> usize {
        self.n_epochs.unwrap_or(if n_points > LARGE_DATA_THRESHOLD {
            LARGE_DATA_EPOCHS
        } else {
            SMALL_DATA_EPOCHS
        })
    }
}

#[inline]
fn clip(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-GRADIENT_CLIP, GRADIENT_CLIP)
    }
}

/// Coordinate storage the edge kernel writes through.
trait Coords {
    fn get(&self, i: usize) -> [f64; 2];
    fn set(&mut self, i: usize, p: [f64; 2]);
}

impl Coords for Vec<[f64; 2]> {
    #[inline]
    fn get(&self, i: usize) -> [f64; 2] {
        self[i]
    }

    #[inline]
    fn set(&mut self, i: usize, p: [f64; 2]) {
        self[i] = p;
    }
}

/// Shared coordinates for lock-free parallel epochs. Concurrent writers may
/// overwrite each other's updates; every individual load and store is
/// atomic.
struct SharedCoords<'a>(&'a [AtomicU64]);

impl Coords for SharedCoords<'_> {
    #[inline]
    fn get(&self, i: usize) -> [f64; 2] {
        [
            f64::from_bits(self.0[2 * i].load(Ordering::Relaxed)),
            f64::from_bits(self.0[2 * i + 1].load(Ordering::Relaxed)),
        ]
    }

    #[inline]
    fn set(&mut self, i: usize, p: [f64; 2]) {
        self.0[2 * i].store(p[0].to_bits(), Ordering::Relaxed);
        self.0[2 * i + 1].store(p[1].to_bits(), Ordering::Relaxed);
    }
}

struct EdgeSchedule {
    heads: Vec<usize>,
    tails: Vec<usize>,
    epochs_per_sample: Vec<f64>,
}

impl EdgeSchedule {
    fn new(sym: &SparseGraph, n_epochs: usize) -> Self {
        let max = sym.weights().iter().copied().fold(0.0f64, f64::max);
        let cutoff = max / n_epochs as f64;
        let mut s = EdgeSchedule { heads: Vec::new(), tails: Vec::new(), epochs_per_sample: Vec::new() };
        for (r, c, w) in sym.entries() {
            if w >= cutoff && w > 0.0 && r != c {
                s.heads.push(r);
                s.tails.push(c);
                s.epochs_per_sample.push(max / w);
            }
        }
        s
    }

    fn len(&self) -> usize {
        self.heads.len()
    }
}

struct Kernel<'a> {
    a: f64,
    b: f64,
    n_points: usize,
    negative_rate: f64,
    /// Per-point multiplier on displacements.
    step_scale: &'a [f64],
}

struct EdgeState<'a> {
    next_sample: &'a mut [f64],
    next_negative: &'a mut [f64],
}

impl Kernel<'_> {
    #[allow(clippy::too_many_arguments)]
    fn run_edges<C: Coords, R: Rng>(
        &self,
        coords: &mut C,
        schedule: &EdgeSchedule,
        range: std::ops::Range<usize>,
        state: EdgeState<'_>,
        epoch: usize,
        alpha: f64,
        rng: &mut R,
    ) {
        let e = epoch as f64;
        let (a, b) = (self.a, self.b);
        for (local, idx) in range.enumerate() {
            if state.next_sample[local] > e {
                continue;
            }
            let (j, k) = (schedule.heads[idx], schedule.tails[idx]);
            let mut cur = coords.get(j);
            let mut other = coords.get(k);
            let dist_sq = (cur[0] - other[0]).powi(2) + (cur[1] - other[1]).powi(2);
            let coeff = if dist_sq > 0.0 {
                -2.0 * a * b * dist_sq.powf(b - 1.0) / (a * dist_sq.powf(b) + 1.0)
            } else {
                0.0
            };
            let (sj, sk) = (self.step_scale[j], self.step_scale[k]);
            for d in 0..2 {
                let g = clip(coeff * (cur[d] - other[d])) * alpha;
                if sj != 0.0 {
                    cur[d] += g * sj;
                }
                if sk != 0.0 {
                    other[d] -= g * sk;
                }
            }
            if sj != 0.0 {
                coords.set(j, cur);
            }
            if sk != 0.0 {
                coords.set(k, other);
            }

            let eps = schedule.epochs_per_sample[idx];
            state.next_sample[local] += eps;

            let eps_neg = eps / self.negative_rate;
            let n_neg = ((e - state.next_negative[local]) / eps_neg).floor().max(0.0) as usize;
            for _ in 0..n_neg {
                let k = rng.random_range(0..self.n_points);
                if k == j {
                    continue;
                }
                let mut cur = coords.get(j);
                let other = coords.get(k);
                let dist_sq = (cur[0] - other[0]).powi(2) + (cur[1] - other[1]).powi(2);
                let coeff = if dist_sq > 0.0 {
                    2.0 * b / ((0.001 + dist_sq) * (a * dist_sq.powf(b) + 1.0))
                } else {
                    0.0
                };
                if sj == 0.0 {
                    continue;
                }
                for d in 0..2 {
                    let g = if coeff > 0.0 { clip(coeff * (cur[d] - other[d])) } else { GRADIENT_CLIP };
                    cur[d] += g * alpha * sj;
                }
                coords.set(j, cur);
            }
            state.next_negative[local] += n_neg as f64 * eps_neg;
        }
    }
}

/// Optimize a layout of `sym` starting from `init`.
///
/// `fixed_mask` may be empty (no fixed points) or have one flag per point.
/// `progress` receives the completed fraction after every epoch.
pub fn optimize_layout(
    sym: &SparseGraph,
    init: Vec<[f64; 2]>,
    fixed_mask: &[bool],
    theta: f64,
    params: &LayoutParams,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<Embedding> {
    let n = sym.n_rows();
    if sym.n_cols() != n || init.len() != n {
        return Err(HumapError::param(format!(
            "layout needs a square graph and one start point per node ({} x {}, {} points)",
            sym.n_rows(),
            sym.n_cols(),
            init.len()
        )));
    }
    if !fixed_mask.is_empty() && fixed_mask.len() != n {
        return Err(HumapError::param("fixed mask length does not match point count"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(HumapError::param(format!("theta must be in [0, 1], got {theta}")));
    }
    if init.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HumapError::input("initial coordinates must be finite"));
    }
    if params.negative_sample_rate == 0 || params.learning_rate.is_nan() || params.learning_rate <= 0.0 {
        return Err(HumapError::param("negative sample rate and learning rate must be positive"));
    }
    let (a, b) = fit_curve_params(params.min_dist, params.spread)?;
    let n_epochs = params.epochs_for(n);
    let fixed: Vec<bool> = if fixed_mask.is_empty() { vec![false; n] } else { fixed_mask.to_vec() };
    let step_scale: Vec<f64> = fixed.iter().map(|&f| if f { theta } else { 1.0 }).collect();
    let schedule = EdgeSchedule::new(sym, n_epochs.max(1));
    let kernel = Kernel {
        a,
        b,
        n_points: n,
        negative_rate: params.negative_sample_rate as f64,
        step_scale: &step_scale,
    };
    let m = schedule.len();
    let mut next_sample = schedule.epochs_per_sample.clone();
    let mut next_negative: Vec<f64> = schedule
        .epochs_per_sample
        .iter()
        .map(|e| e / params.negative_sample_rate as f64)
        .collect();

    let coords = match params.mode {
        ExecMode::Deterministic => {
            let mut coords = init;
            for epoch in 0..n_epochs {
                let alpha = params.learning_rate * (1.0 - epoch as f64 / n_epochs as f64);
                let mut rng = seed::stream(params.seed, "layout-epoch", epoch as u64);
                kernel.run_edges(
                    &mut coords,
                    &schedule,
                    0..m,
                    EdgeState { next_sample: &mut next_sample, next_negative: &mut next_negative },
                    epoch,
                    alpha,
                    &mut rng,
                );
                if let Some(p) = progress {
                    p((epoch + 1) as f64 / n_epochs as f64);
                }
            }
            coords
        }
        ExecMode::Parallel => {
            let shared: Vec<AtomicU64> =
                init.iter().flat_map(|p| [AtomicU64::new(p[0].to_bits()), AtomicU64::new(p[1].to_bits())]).collect();
            for epoch in 0..n_epochs {
                let alpha = params.learning_rate * (1.0 - epoch as f64 / n_epochs as f64);
                next_sample
                    .par_chunks_mut(PARALLEL_CHUNK)
                    .zip(next_negative.par_chunks_mut(PARALLEL_CHUNK))
                    .enumerate()
                    .for_each(|(chunk, (ns, nn))| {
                        let start = chunk * PARALLEL_CHUNK;
                        let mut rng = seed::stream(
                            params.seed,
                            "layout-chunk",
                            ((epoch as u64) << 32) | chunk as u64,
                        );
                        let mut view = SharedCoords(&shared);
                        kernel.run_edges(
                            &mut view,
                            &schedule,
                            start..start + ns.len(),
                            EdgeState { next_sample: ns, next_negative: nn },
                            epoch,
                            alpha,
                            &mut rng,
                        );
                    });
                if let Some(p) = progress {
                    p((epoch + 1) as f64 / n_epochs as f64);
                }
            }
            let view = SharedCoords(&shared);
            (0..n).map(|i| view.get(i)).collect()
        }
    };
    if coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HumapError::Degenerate("layout produced non-finite coordinates".into()));
    }
    Ok(Embedding {
        coords,
        fixed_mask: fixed,
        theta,
        level: 0,
        point_ids: (0..n).collect(),
        spectral_fallback: false,
    })
}
