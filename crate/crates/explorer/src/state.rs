//! Sessions, the embedding cache and background projection jobs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};

use humap::embed::{project_level, project_subset, LayoutParams};
use humap::persist::{layout_params, load_hierarchy, selection_digest};
use humap::{Embedding, Hierarchy, HumapError};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::ApiError;

/// Level plus the digest of a drill-down selection (`None` for the whole level).
pub type CacheKey = (usize, Option<String>);

/// A finished embedding and its serialized payload.
#[derive(Debug)]
pub struct Ready {
    pub embedding: Embedding,
    pub body: Box<RawValue>,
}

#[derive(Serialize)]
struct Payload<'a> {
    level: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_digest: Option<&'a str>,
    point_ids: &'a [usize],
    /// x0, y0, x1, y1, ...
    coords: Vec<f64>,
    fixed: &'a [bool],
    /// Landmark of the level above that each point belongs to.
    parent_landmark: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<&'a str>>,
    theta: f64,
}

impl Ready {
    fn new(session: &Session, embedding: Embedding, digest: Option<&str>) -> Self {
        let h = &session.hierarchy;
        let level = embedding.level;
        let parent_landmark = h.levels.get(level + 1).and_then(|l| l.link.as_ref()).map(|link| {
            embedding.point_ids.iter().map(|&p| link.association.landmark_of[p]).collect()
        });
        let labels = session.labels.as_ref().map(|labels| {
            let global = &h.levels[level].global_ids;
            embedding.point_ids.iter().map(|&p| labels[global[p]].as_str()).collect()
        });
        let payload = Payload {
            level,
            selection_digest: digest,
            point_ids: &embedding.point_ids,
            coords: embedding.coords.iter().flatten().copied().collect(),
            fixed: &embedding.fixed_mask,
            parent_landmark,
            labels,
            theta: embedding.theta,
        };
        let body = serde_json::value::to_raw_value(&payload).expect("payload serializes");
        Ready { embedding, body }
    }
}

enum Entry {
    Pending(String),
    Ready(Arc<Ready>),
}

pub struct Session {
    pub id: String,
    pub dir: PathBuf,
    pub hierarchy: Hierarchy,
    pub layout: LayoutParams,
    pub labels: Option<Vec<String>>,
    cache: Mutex<HashMap<CacheKey, Entry>>,
    published: Condvar,
}

impl Session {
    pub fn theta(&self) -> f64 {
        self.hierarchy.params.theta
    }

    fn publish(&self, key: CacheKey, ready: Arc<Ready>) {
        self.cache.lock().unwrap().insert(key, Entry::Ready(ready));
        self.published.notify_all();
    }

    /// Drop every pending entry owned by `job`.
    fn abandon(&self, job: &str) {
        self.cache.lock().unwrap().retain(|_, e| !matches!(e, Entry::Pending(j) if j == job));
        self.published.notify_all();
    }

    /// Block until `key` is ready. Fails if the job computing it gave up.
    fn wait_ready(&self, key: &CacheKey) -> Result<Arc<Ready>, String> {
        let mut cache = self.cache.lock().unwrap();
        loop {
            match cache.get(key) {
                Some(Entry::Ready(r)) => return Ok(r.clone()),
                Some(Entry::Pending(_)) => cache = self.published.wait(cache).unwrap(),
                None => return Err(format!("level {} could not be projected", key.0)),
            }
        }
    }

    pub fn cached_levels(&self) -> Vec<usize> {
        let cache = self.cache.lock().unwrap();
        let mut out: Vec<usize> = cache
            .iter()
            .filter(|(k, e)| k.1.is_none() && matches!(e, Entry::Ready(_)))
            .map(|(k, _)| k.0)
            .collect();
        out.sort_unstable();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Done,
    Failed,
}

pub struct Job {
    pub id: String,
    pub key: CacheKey,
    progress: AtomicU64,
    outcome: Mutex<Option<Result<Arc<Ready>, String>>>,
}

impl Job {
    fn new(id: String, key: CacheKey) -> Self {
        Job { id, key, progress: AtomicU64::new(0f64.to_bits()), outcome: Mutex::new(None) }
    }

    /// Raise the progress fraction; lower values are ignored. The bit
    /// patterns of non-negative floats order like the floats.
    fn advance(&self, fraction: f64) {
        let f = fraction.clamp(0.0, 1.0);
        self.progress.fetch_max(f.to_bits(), Ordering::AcqRel);
    }

    pub fn progress(&self) -> f64 {
        f64::from_bits(self.progress.load(Ordering::Acquire))
    }

    pub fn status(&self) -> (JobStatus, Option<Arc<Ready>>, Option<String>) {
        match &*self.outcome.lock().unwrap() {
            None => (JobStatus::Running, None, None),
            Some(Ok(r)) => (JobStatus::Done, Some(r.clone()), None),
            Some(Err(e)) => (JobStatus::Failed, None, Some(e.clone())),
        }
    }

    fn finish(&self, outcome: Result<Arc<Ready>, String>) {
        if outcome.is_ok() {
            self.advance(1.0);
        }
        *self.outcome.lock().unwrap() = Some(outcome);
    }
}

pub enum LevelResponse {
    Ready(Arc<Ready>),
    Pending(String),
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    jobs: Mutex<HashMap<String, Arc<Job>>>,
    next_id: AtomicU64,
    pub ui_dir: Option<PathBuf>,
}

fn read_labels(path: &Path, n_points: usize) -> Result<Vec<String>, ApiError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ApiError::Unprocessable(format!("{}: {e}", path.display())))?;
    let mut labels: Vec<String> = text.lines().map(|l| l.trim().to_string()).collect();
    if labels.last().is_some_and(String::is_empty) {
        labels.pop();
    }
    if labels.len() == n_points + 1 {
        labels.remove(0);
    }
    if labels.len() != n_points {
        return Err(ApiError::Unprocessable(format!(
            "expected {n_points} labels, found {}",
            labels.len()
        )));
    }
    Ok(labels)
}

impl AppState {
    pub fn new(ui_dir: Option<PathBuf>) -> Self {
        AppState { ui_dir, ..Default::default() }
    }

    fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }

    /// Load a hierarchy directory into a new session. Blocking.
    pub fn open_session(&self, dir: &Path, labels: Option<&Path>) -> Result<Arc<Session>, ApiError> {
        let hierarchy = load_hierarchy(dir).map_err(|e| match e {
            HumapError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                ApiError::NotFound(format!("no hierarchy at {}", dir.display()))
            }
            other => ApiError::Unprocessable(other.to_string()),
        })?;
        let layout = layout_params(dir, &hierarchy).map_err(|e| ApiError::Unprocessable(e.to_string()))?;
        let labels = labels.map(|p| read_labels(p, hierarchy.levels[0].len())).transpose()?;
        let session = Arc::new(Session {
            id: self.fresh_id("session"),
            dir: dir.to_path_buf(),
            hierarchy,
            layout,
            labels,
            cache: Mutex::default(),
            published: Condvar::new(),
        });
        self.sessions.write().unwrap().insert(session.id.clone(), session.clone());
        Ok(session)
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session {id}")))
    }

    pub fn job(&self, id: &str) -> Result<Arc<Job>, ApiError> {
        self.jobs
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown job {id}")))
    }

    fn new_job(&self, key: CacheKey) -> Arc<Job> {
        let job = Arc::new(Job::new(self.fresh_id("job"), key));
        self.jobs.lock().unwrap().insert(job.id.clone(), job.clone());
        job
    }

    /// Cached embedding of a whole level, or the job that computes it.
    /// Missing levels above are projected first by the same job.
    pub fn request_level(&self, session: &Arc<Session>, level: usize) -> Result<LevelResponse, ApiError> {
        let top = session.hierarchy.top();
        if level > top {
            return Err(ApiError::NotFound(format!("level {level} does not exist")));
        }
        let mut cache = session.cache.lock().unwrap();
        match cache.get(&(level, None)) {
            Some(Entry::Ready(r)) => return Ok(LevelResponse::Ready(r.clone())),
            Some(Entry::Pending(j)) => return Ok(LevelResponse::Pending(j.clone())),
            None => {}
        }
        let mut chain = vec![level];
        while let Some(&l) = chain.last() {
            if l == top || cache.contains_key(&(l + 1, None)) {
                break;
            }
            chain.push(l + 1);
        }
        let job = self.new_job((level, None));
        for &l in &chain {
            cache.insert((l, None), Entry::Pending(job.id.clone()));
        }
        drop(cache);
        let (session, id) = (session.clone(), job.id.clone());
        spawn_job(session, job, move |session, job| run_levels(session, job, &chain));
        Ok(LevelResponse::Pending(id))
    }

    /// Project the points of `level` associated with `landmark_ids` of
    /// `level + 1`. The parent is the whole level above, or an earlier
    /// drill-down of it when `parent_digest` is given.
    pub fn request_drill(
        &self,
        session: &Arc<Session>,
        level: usize,
        landmark_ids: &[usize],
        parent_digest: Option<String>,
    ) -> Result<LevelResponse, ApiError> {
        let h = &session.hierarchy;
        if level >= h.top() {
            return Err(ApiError::Unprocessable(format!("level {level} has no level above to drill from")));
        }
        if landmark_ids.is_empty() {
            return Err(ApiError::Unprocessable("selection is empty".into()));
        }
        let upper = h.levels[level + 1].len();
        let mut selection = landmark_ids.to_vec();
        selection.sort_unstable();
        selection.dedup();
        if let Some(bad) = selection.iter().find(|&&s| s >= upper) {
            return Err(ApiError::Unprocessable(format!("{bad} is not a landmark of level {}", level + 1)));
        }
        let mut cache = session.cache.lock().unwrap();
        let parent = match cache.get(&(level + 1, parent_digest.clone())) {
            Some(Entry::Ready(r)) => r.clone(),
            _ => {
                return Err(ApiError::Conflict(format!("level {} has not been projected", level + 1)));
            }
        };
        if let Some(bad) = selection.iter().find(|&&s| parent.embedding.row_of(s).is_none()) {
            return Err(ApiError::Unprocessable(format!("landmark {bad} is not part of the parent embedding")));
        }
        if selection.len() == upper {
            drop(cache);
            return self.request_level(session, level);
        }
        let key = (level, Some(selection_digest(&selection)));
        match cache.get(&key) {
            Some(Entry::Ready(r)) => return Ok(LevelResponse::Ready(r.clone())),
            Some(Entry::Pending(j)) => return Ok(LevelResponse::Pending(j.clone())),
            None => {}
        }
        let job = self.new_job(key.clone());
        cache.insert(key.clone(), Entry::Pending(job.id.clone()));
        drop(cache);
        let (session, id) = (session.clone(), job.id.clone());
        spawn_job(session, job, move |session, job| {
            let report = |f: f64| job.advance(f);
            let result = project_subset(
                &session.hierarchy,
                level,
                &selection,
                &parent.embedding,
                session.theta(),
                &session.layout,
                Some(&report),
            );
            match result {
                Ok(e) => {
                    let ready = Arc::new(Ready::new(session, e, key.1.as_deref()));
                    session.publish(key, ready.clone());
                    job.finish(Ok(ready));
                }
                Err(e) => {
                    session.abandon(&job.id);
                    job.finish(Err(e.to_string()));
                }
            }
        });
        Ok(LevelResponse::Pending(id))
    }
}

/// Run `work` on the blocking pool. A panic fails the job instead of
/// leaving it running forever.
fn spawn_job<F>(session: Arc<Session>, job: Arc<Job>, work: F)
where
    F: FnOnce(&Session, &Job) + Send + 'static,
{
    tokio::task::spawn_blocking(move || {
        let run = std::panic::AssertUnwindSafe(|| work(&session, &job));
        if std::panic::catch_unwind(run).is_err() {
            session.abandon(&job.id);
            job.finish(Err("internal error while projecting".into()));
        }
    });
}

/// Project `chain` (a requested level followed by its missing ancestors)
/// from the top down.
fn run_levels(session: &Session, job: &Job, chain: &[usize]) {
    let h = &session.hierarchy;
    let steps = chain.len() as f64;
    let mut last = None;
    for (i, &level) in chain.iter().rev().enumerate() {
        let parent = if level == h.top() { Ok(None) } else { session.wait_ready(&(level + 1, None)).map(Some) };
        let report = |f: f64| job.advance((i as f64 + f) / steps);
        let result = parent.and_then(|parent| {
            project_level(h, level, parent.as_ref().map(|p| &p.embedding), session.theta(), &session.layout, Some(&report))
                .map_err(|e| e.to_string())
        });
        match result {
            Ok(e) => {
                let ready = Arc::new(Ready::new(session, e, None));
                session.publish((level, None), ready.clone());
                last = Some(ready);
            }
            Err(e) => {
                session.abandon(&job.id);
                job.finish(Err(e));
                return;
            }
        }
    }
    job.finish(Ok(last.expect("chain is never empty")));
}
