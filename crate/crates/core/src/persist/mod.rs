//! On-disk hierarchy directories and embedding files.
//!
//! A hierarchy directory holds `hierarchy.json` (parameters, level sizes,
//! derived seeds, blob names) and one `level_<i>.bin` blob per level.

mod embedding;
mod frame;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use embedding::{
    decode_embedding_csv, embedding_to_binary, embedding_to_csv, parse_selection,
};

use self::frame::{Reader, Writer};
use crate::embed::LayoutParams;
use crate::error::{HumapError, Result};
use crate::exec::ExecMode;
use crate::hierarchy::{
    AssociationMap, AssociationStage, Hierarchy, HierarchyParams, LandmarkSet, Level, LevelLink,
    RnhMatrix,
};
use crate::knn::NeighborGraph;
use crate::seed::derive_seed;
use crate::sparse::SparseGraph;

pub const MANIFEST_FILE: &str = "hierarchy.json";
pub const LEVEL_MAGIC: &[u8; 8] = b"HMAPLVL1";
pub const FORMAT_NAME: &str = "humap-hierarchy";
pub const FORMAT_VERSION: u32 = 1;
/// Run configuration written next to the manifest by the command line tool.
pub const CONFIG_FILE: &str = "config.json";

const TAG_GLOBAL: &[u8; 8] = b"GLOBALID";
const TAG_KNN: &[u8; 8] = b"KNNGRAPH";
const TAG_STRENGTH: &[u8; 8] = b"STRENGTH";
const TAG_LANDMARK: &[u8; 8] = b"LANDMARK";
const TAG_RNH: &[u8; 8] = b"RNHBITS_";
const TAG_DISSIM: &[u8; 8] = b"DISSIMIL";
const TAG_ASSOC: &[u8; 8] = b"ASSOCMAP";

pub fn level_file_name(level: usize) -> String {
    format!("level_{level}.bin")
}

/// Cached full-level embedding inside a hierarchy directory.
pub fn embedding_file_name(level: usize) -> String {
    format!("embedding_level_{level}.csv")
}

/// Order-insensitive hash of a landmark selection: SHA-256 over the sorted,
/// deduplicated ids as little-endian u64, hex encoded.
pub fn selection_digest(ids: &[usize]) -> String {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut hasher = Sha256::new();
    for id in sorted {
        hasher.update((id as u64).to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Default, Deserialize)]
struct LayoutConfig {
    epochs: Option<usize>,
    mode: Option<ExecMode>,
}

/// Layout parameters for projecting a stored hierarchy. The seed comes from
/// the manifest; `epochs` and `mode` are read from `config.json` when the
/// directory has one.
pub fn layout_params(dir: &Path, h: &Hierarchy) -> Result<LayoutParams> {
    let config = match fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => serde_json::from_str::<LayoutConfig>(&text)
            .map_err(|e| HumapError::format(format!("{CONFIG_FILE}: {e}")))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => LayoutConfig::default(),
        Err(e) => return Err(e.into()),
    };
    Ok(LayoutParams {
        n_epochs: config.epochs,
        seed: h.params.seed,
        mode: config.mode.unwrap_or_default(),
        ..Default::default()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub index: usize,
    pub size: usize,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landmark_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rnh_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub params: HierarchyParams,
    pub level_sizes: Vec<usize>,
    pub levels: Vec<LevelEntry>,
}

impl Manifest {
    pub fn for_hierarchy(h: &Hierarchy) -> Self {
        Manifest {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            params: h.params,
            level_sizes: h.level_sizes(),
            levels: h
                .levels
                .iter()
                .map(|l| LevelEntry {
                    index: l.index,
                    size: l.len(),
                    file: level_file_name(l.index),
                    landmark_seed: (l.index > 0)
                        .then(|| derive_seed(h.params.seed, "landmarks", l.index as u64)),
                    rnh_seed: (l.index > 0).then(|| derive_seed(h.params.seed, "rnh", l.index as u64)),
                })
                .collect(),
        }
    }

    pub fn decode(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)
            .map_err(|e| HumapError::format(format!("{MANIFEST_FILE}: {e}")))?;
        if m.format != FORMAT_NAME || m.version != FORMAT_VERSION {
            return Err(HumapError::format(format!(
                "unsupported hierarchy format {} v{}",
                m.format, m.version
            )));
        }
        if m.levels.len() != m.level_sizes.len()
            || m.levels.iter().enumerate().any(|(i, l)| l.index != i || l.size != m.level_sizes[i])
        {
            return Err(HumapError::format("level table disagrees with level sizes"));
        }
        if m.level_sizes.is_empty() || m.level_sizes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(HumapError::format("level sizes must be non-empty and strictly decreasing"));
        }
        let p = &m.params;
        if !(0.0..=1.0).contains(&p.theta) || !(0.0..=1.0).contains(&p.rnh.beta) || p.k == 0 {
            return Err(HumapError::format("stored parameters are out of range"));
        }
        for l in &m.levels {
            let p = Path::new(&l.file);
            if p.components().count() != 1 || p.is_absolute() || l.file.contains("..") {
                return Err(HumapError::format(format!("level file '{}' must be a plain name", l.file)));
            }
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

fn csr_section(g: &SparseGraph, with_weights: bool) -> Writer {
    let mut w = Writer::default();
    w.u64(g.n_rows() as u64);
    w.u64(g.n_cols() as u64);
    w.usizes(g.offsets());
    w.usizes(g.indices());
    if with_weights {
        w.f64s(g.weights());
    }
    w
}

fn read_csr(r: &mut Reader<'_>, with_weights: bool) -> Result<SparseGraph> {
    let n_rows = r.usize()?;
    let n_cols = r.usize()?;
    let offsets = r.usizes()?;
    let indices = r.usizes()?;
    let weights = if with_weights { r.f64s()? } else { vec![1.0; indices.len()] };
    r.expect_end()?;
    SparseGraph::from_csr(n_rows, n_cols, offsets, indices, weights)
}

/// Serialize one level.
pub fn encode_level(level: &Level) -> Vec<u8> {
    let mut out = Writer::new(LEVEL_MAGIC);
    let mut head = Writer::default();
    head.u64(level.index as u64);
    head.usizes(&level.global_ids);
    out.section(TAG_GLOBAL, head);

    let mut knn = Writer::default();
    knn.u64(level.graph.k() as u64);
    knn.usizes(level.graph.offsets());
    knn.usizes(level.graph.indices());
    knn.f64s(level.graph.distances());
    out.section(TAG_KNN, knn);
    out.section(TAG_STRENGTH, csr_section(&level.strengths, true));

    if let Some(link) = &level.link {
        let mut lm = Writer::default();
        lm.usizes(&link.landmarks.landmark_ids);
        lm.u64(link.landmarks.visit_counts.len() as u64);
        for &c in &link.landmarks.visit_counts {
            lm.u64(c);
        }
        out.section(TAG_LANDMARK, lm);
        out.section(TAG_RNH, csr_section(link.rnh.graph(), false));
        out.section(TAG_DISSIM, csr_section(&link.dissimilarity, true));
        let mut assoc = Writer::default();
        assoc.usizes(&link.association.landmark_of);
        assoc.bytes(&link.association.stage.iter().map(|&s| s as u8).collect::<Vec<_>>());
        out.section(TAG_ASSOC, assoc);
    }
    out.finish()
}

/// Parse one level blob. Only the blob's internal consistency is checked
/// here; [`Hierarchy`]-wide checks happen in [`assemble`].
pub fn decode_level(bytes: &[u8]) -> Result<Level> {
    let mut r = Reader::with_magic(bytes, LEVEL_MAGIC)?;
    let mut index_ids = None;
    let mut graph = None;
    let mut strengths = None;
    let mut landmarks = None;
    let mut rnh = None;
    let mut dissim = None;
    let mut assoc = None;

    fn once<T>(slot: &mut Option<T>, v: T, tag: &[u8; 8]) -> Result<()> {
        if slot.replace(v).is_some() {
            return Err(HumapError::format(format!(
                "duplicate section {}",
                String::from_utf8_lossy(tag)
            )));
        }
        Ok(())
    }

    while !r.is_empty() {
        let (tag, mut body) = r.section()?;
        match &tag {
            TAG_GLOBAL => {
                let index = body.usize()?;
                let ids = body.usizes()?;
                body.expect_end()?;
                once(&mut index_ids, (index, ids), &tag)?;
            }
            TAG_KNN => {
                let k = body.usize()?;
                let offsets = body.usizes()?;
                let indices = body.usizes()?;
                let distances = body.f64s()?;
                body.expect_end()?;
                once(&mut graph, NeighborGraph::from_parts(k, offsets, indices, distances)?, &tag)?;
            }
            TAG_STRENGTH => once(&mut strengths, read_csr(&mut body, true)?, &tag)?,
            TAG_LANDMARK => {
                let ids = body.usizes()?;
                let n = body.usize()?;
                if n.checked_mul(8).is_none_or(|b| b != body.remaining()) {
                    return Err(HumapError::format("visit count length mismatch"));
                }
                let visits = (0..n).map(|_| body.u64()).collect::<Result<Vec<_>>>()?;
                once(&mut landmarks, (ids, visits), &tag)?;
            }
            TAG_RNH => once(&mut rnh, RnhMatrix::from_graph(read_csr(&mut body, false)?)?, &tag)?,
            TAG_DISSIM => once(&mut dissim, read_csr(&mut body, true)?, &tag)?,
            TAG_ASSOC => {
                let landmark_of = body.usizes()?;
                let stages = body
                    .bytes()?
                    .iter()
                    .map(|&b| AssociationStage::from_u8(b).ok_or_else(|| HumapError::format("bad association stage")))
                    .collect::<Result<Vec<_>>>()?;
                body.expect_end()?;
                if stages.len() != landmark_of.len() {
                    return Err(HumapError::format("association arrays differ in length"));
                }
                once(&mut assoc, AssociationMap { landmark_of, stage: stages }, &tag)?;
            }
            other => {
                return Err(HumapError::format(format!(
                    "unknown section {}",
                    String::from_utf8_lossy(other)
                )))
            }
        }
    }

    let missing = |name: &str| HumapError::format(format!("level blob lacks {name} section"));
    let (index, global_ids) = index_ids.ok_or_else(|| missing("GLOBALID"))?;
    let graph = graph.ok_or_else(|| missing("KNNGRAPH"))?;
    let strengths = strengths.ok_or_else(|| missing("STRENGTH"))?;
    let n = global_ids.len();
    if graph.n_points() != n || strengths.n_rows() != n || strengths.n_cols() != n {
        return Err(HumapError::format("level arrays disagree on the point count"));
    }
    let link = match (landmarks, rnh, dissim, assoc) {
        (None, None, None, None) => None,
        (Some((landmark_ids, visit_counts)), Some(rnh), Some(dissimilarity), Some(association)) => {
            if landmark_ids.len() != n
                || rnh.n_landmarks() != n
                || dissimilarity.n_rows() != n
                || dissimilarity.n_cols() != n
            {
                return Err(HumapError::format("landmark arrays disagree on the point count"));
            }
            Some(LevelLink {
                landmarks: LandmarkSet { level: index, landmark_ids, visit_counts },
                rnh,
                dissimilarity,
                association,
            })
        }
        _ => return Err(HumapError::format("level blob has an incomplete landmark link")),
    };
    if (index == 0) != link.is_none() {
        return Err(HumapError::format("only level 0 may lack a landmark link"));
    }
    Ok(Level { index, global_ids, graph, strengths, link })
}

/// Check cross-level consistency and assemble a hierarchy.
pub fn assemble(manifest: &Manifest, levels: Vec<Level>) -> Result<Hierarchy> {
    if levels.len() != manifest.level_sizes.len() {
        return Err(HumapError::format("level count disagrees with manifest"));
    }
    for (i, l) in levels.iter().enumerate() {
        if l.index != i || l.len() != manifest.level_sizes[i] {
            return Err(HumapError::format(format!("level {i} disagrees with manifest")));
        }
    }
    let n0 = manifest.level_sizes[0];
    if levels[0].global_ids.iter().enumerate().any(|(i, &g)| g != i) {
        return Err(HumapError::format("level 0 ids must be the identity"));
    }
    for i in 1..levels.len() {
        let (below, here) = (&levels[i - 1], &levels[i]);
        let link = here.link.as_ref().expect("checked in decode_level");
        let ids = &link.landmarks.landmark_ids;
        if ids.windows(2).any(|w| w[0] >= w[1]) || ids.last().is_some_and(|&m| m >= below.len()) {
            return Err(HumapError::format(format!("level {i} landmark ids invalid")));
        }
        if link.landmarks.visit_counts.len() != below.len() || link.rnh.graph().n_cols() != below.len() {
            return Err(HumapError::format(format!("level {i} arrays disagree with level {}", i - 1)));
        }
        if ids.iter().zip(&here.global_ids).any(|(&id, &g)| below.global_ids[id] != g) {
            return Err(HumapError::format(format!("level {i} global ids disagree with landmarks")));
        }
        let assoc = &link.association;
        if assoc.len() != below.len() || assoc.landmark_of.iter().any(|&l| l >= here.len()) {
            return Err(HumapError::format(format!("level {i} association map invalid")));
        }
        if ids.iter().enumerate().any(|(p, &id)| assoc.landmark_of[id] != p) {
            return Err(HumapError::format(format!("level {i} landmarks must represent themselves")));
        }
    }
    if levels.iter().flat_map(|l| &l.global_ids).any(|&g| g >= n0) {
        return Err(HumapError::format("global id out of range"));
    }
    Ok(Hierarchy { params: manifest.params, levels })
}

pub fn save_hierarchy(h: &Hierarchy, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest::for_hierarchy(h);
    for (level, entry) in h.levels.iter().zip(&manifest.levels) {
        fs::write(dir.join(&entry.file), encode_level(level))?;
    }
    fs::write(dir.join(MANIFEST_FILE), manifest.to_json())?;
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    Manifest::decode(&fs::read_to_string(dir.join(MANIFEST_FILE))?)
}

pub fn load_hierarchy(dir: &Path) -> Result<Hierarchy> {
    let manifest = load_manifest(dir)?;
    let levels = manifest
        .levels
        .iter()
        .map(|e| decode_level(&fs::read(dir.join(&e.file))?))
        .collect::<Result<Vec<_>>>()?;
    assemble(&manifest, levels)
}
