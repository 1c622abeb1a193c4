//! Serializable metric reports.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{demap_with, neighborhood_preservation_curve, rank_quality_curve, DEMAP_MAX_POINTS};
use crate::data::DataMatrix;
use crate::error::{HumapError, Result};

pub const DEFAULT_K_RANGE: RangeInclusive<usize> = 1..=30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NeighborhoodPreservation,
    Demap,
    Continuity,
    Trustworthiness,
    Disparity,
}

impl Metric {
    /// Parse a comma-separated list such as `np,demap,tc,disparity`. `tc`
    /// expands to both continuity and trustworthiness.
    pub fn parse_list(spec: &str) -> Result<Vec<Metric>> {
        let mut out = Vec::new();
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match name {
                "np" | "neighborhood_preservation" => out.push(Metric::NeighborhoodPreservation),
                "demap" => out.push(Metric::Demap),
                "continuity" => out.push(Metric::Continuity),
                "trustworthiness" | "trust" => out.push(Metric::Trustworthiness),
                "tc" => out.extend([Metric::Trustworthiness, Metric::Continuity]),
                "disparity" | "procrustes" => out.push(Metric::Disparity),
                other => return Err(HumapError::param(format!("unknown metric '{other}'"))),
            }
        }
        if out.is_empty() {
            return Err(HumapError::param("no metrics requested"));
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
    pub n_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighborhood_preservation: Option<BTreeMap<usize, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuity: Option<BTreeMap<usize, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trustworthiness: Option<BTreeMap<usize, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demap_k: Option<usize>,
}

impl LevelReport {
    /// Evaluate the requested per-level metrics. Curves cover every `k` in
    /// `ks` that is valid for the point count.
    pub fn compute(
        high: &DataMatrix,
        low: &[[f64; 2]],
        level: usize,
        metrics: &[Metric],
        ks: RangeInclusive<usize>,
        demap_k: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = high.n_points();
        let mut r = LevelReport {
            level,
            subset: None,
            n_points: n,
            neighborhood_preservation: None,
            continuity: None,
            trustworthiness: None,
            demap: None,
            demap_k: None,
        };
        if metrics.contains(&Metric::NeighborhoodPreservation) {
            let valid: Vec<usize> = ks.clone().filter(|&k| k >= 1 && k < n).collect();
            let curve = neighborhood_preservation_curve(high, low, &valid)?;
            r.neighborhood_preservation = Some(valid.into_iter().zip(curve).collect());
        }
        let want_c = metrics.contains(&Metric::Continuity);
        let want_t = metrics.contains(&Metric::Trustworthiness);
        if want_c || want_t {
            let valid: Vec<usize> = ks.clone().filter(|&k| k >= 1 && 2 * k < n).collect();
            let curve = rank_quality_curve(high, low, &valid)?;
            if want_c {
                r.continuity = Some(curve.iter().map(|q| (q.k, q.continuity)).collect());
            }
            if want_t {
                r.trustworthiness = Some(curve.iter().map(|q| (q.k, q.trustworthiness)).collect());
            }
        }
        if metrics.contains(&Metric::Demap) {
            r.demap = Some(demap_with(high, low, demap_k, DEMAP_MAX_POINTS, seed)?);
            r.demap_k = Some(demap_k);
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub upper_level: usize,
    pub lower_level: usize,
    pub shared_points: usize,
    pub disparity: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub levels: Vec<LevelReport>,
    pub pairs: Vec<PairReport>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Long-format CSV: `level,metric,k,value`. Scalars use an empty `k`;
    /// disparities use `level` = `upper-lower`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,metric,k,value\n");
        for l in &self.levels {
            let curves = [
                ("neighborhood_preservation", &l.neighborhood_preservation),
                ("continuity", &l.continuity),
                ("trustworthiness", &l.trustworthiness),
            ];
            for (name, curve) in curves {
                for (k, v) in curve.iter().flatten() {
                    out.push_str(&format!("{},{name},{k},{v}\n", l.level));
                }
            }
            if let Some(d) = l.demap {
                out.push_str(&format!("{},demap,,{d}\n", l.level));
            }
        }
        for p in &self.pairs {
            out.push_str(&format!("{}-{},disparity,,{}\n", p.upper_level, p.lower_level, p.disparity));
        }
        out
    }
}
