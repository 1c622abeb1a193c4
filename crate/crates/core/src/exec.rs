use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How work is scheduled.
///
/// `Deterministic` runs on the calling thread and is bit-reproducible for a
/// fixed seed. `Parallel` uses the ambient rayon pool. Every stage except
/// layout optimization produces identical output in both modes; the layout
/// optimizer applies unsynchronized concurrent updates in parallel mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    #[default]
    Deterministic,
    Parallel,
}

impl ExecMode {
    pub fn is_parallel(self) -> bool {
        self == ExecMode::Parallel
    }
}

impl std::str::FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deterministic" => Ok(ExecMode::Deterministic),
            "parallel" => Ok(ExecMode::Parallel),
            other => Err(format!("unknown thread mode '{other}'")),
        }
    }
}

/// Evaluate `f` for every index in `0..n`, in order.
pub(crate) fn map_indices<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        ExecMode::Deterministic => (0..n).map(f).collect(),
        ExecMode::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}
