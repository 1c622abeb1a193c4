use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use humap::embed::{project_level, project_subset, LayoutParams};
use humap::hierarchy::{build_hierarchy_timed, HierarchyParams, RnhParams, WalkParams};
use humap::metrics::{shared_point_disparity, LevelReport, Metric, MetricsReport, PairReport};
use humap::persist::{
    decode_embedding_csv, embedding_file_name, embedding_to_binary, embedding_to_csv, layout_params,
    load_hierarchy, parse_selection, save_hierarchy, selection_digest, CONFIG_FILE,
};
use humap::{DataMatrix, Embedding, Hierarchy, HumapError};
use serde_json::json;

use crate::args::{DrillArgs, EvalArgs, ProjectArgs, RunConfig, ServeArgs};
use crate::error::{CliError, CliResult};
use crate::lock::DirLock;

fn emit(summary: serde_json::Value) {
    println!("{summary}");
}

fn with_path(path: &Path, e: HumapError) -> CliError {
    match e {
        HumapError::Io(io) => CliError::io("io", format!("{}: {io}", path.display())),
        other => {
            let mut err = CliError::from(other);
            err.message = format!("{}: {}", path.display(), err.message);
            err
        }
    }
}

fn load_data(path: &Path, format: Option<crate::args::InputFormat>) -> CliResult<DataMatrix> {
    DataMatrix::load(path, format.map(Into::into)).map_err(|e| with_path(path, e))
}

fn open_hierarchy(dir: &Path) -> CliResult<Hierarchy> {
    load_hierarchy(dir).map_err(|e| with_path(dir, e))
}

impl RunConfig {
    /// Checks that do not need the data.
    fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::validation("invalid_parameter", m));
        if self.level_sizes.is_empty() {
            return bad("at least one level size is required".into());
        }
        if self.level_sizes.windows(2).any(|w| w[1] >= w[0]) {
            return bad("level sizes must be strictly decreasing".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n_walks == 0 || self.walk_length == 0 {
            return bad("n-walks and walk-length must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must be in [0, 1], got {}", self.beta));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must be in [0, 1], got {}", self.theta));
        }
        Ok(())
    }

    fn hierarchy_params(&self) -> HierarchyParams {
        HierarchyParams {
            k: self.k,
            walks: WalkParams { walks_per_point: self.n_walks, walk_length: self.walk_length },
            rnh: RnhParams { omega: self.omega, upsilon: self.upsilon, beta: self.beta },
            theta: self.theta,
            seed: self.seed,
        }
    }
}

/// Remove artifacts of an earlier fit that the new one would not overwrite.
fn clear_stale(dir: &Path, n_levels: usize) -> CliResult<()> {
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        let level_of = |prefix: &str, suffix: &str| {
            name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse::<usize>().ok()
        };
        let stale = level_of("embedding_level_", ".csv").is_some()
            || level_of("level_", ".bin").is_some_and(|l| l >= n_levels)
            || (name.starts_with("drill_level_") && name.ends_with(".csv"))
            || name == "metrics.json";
        if stale {
            fs::remove_file(dir.join(name))?;
        }
    }
    Ok(())
}

pub fn fit(config: RunConfig) -> CliResult<()> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.output).map_err(|e| CliError::io("io", format!("{}: {e}", config.output.display())))?;
    let _lock = DirLock::acquire(&config.output)?;

    let clock = Instant::now();
    let data = load_data(&config.input, config.format)?;
    let load_seconds = clock.elapsed().as_secs_f64();

    let (h, timings) = build_hierarchy_timed(&data, &config.level_sizes, config.hierarchy_params(), config.mode)?;

    let clock = Instant::now();
    clear_stale(&config.output, h.n_levels())?;
    save_hierarchy(&h, &config.output)?;
    let config_json = serde_json::to_string_pretty(&config).expect("config serializes") + "\n";
    fs::write(config.output.join(CONFIG_FILE), config_json)?;
    let write_seconds = clock.elapsed().as_secs_f64();

    emit(json!({
        "command": "fit",
        "output": config.output,
        "n_points": data.n_points(),
        "n_dims": data.n_dims(),
        "level_sizes": h.level_sizes(),
        "load_seconds": load_seconds,
        "timings": timings,
        "write_seconds": write_seconds,
        "total_seconds": start.elapsed().as_secs_f64(),
    }));
    Ok(())
}

fn level_exists(h: &Hierarchy, level: usize) -> CliResult<()> {
    if level >= h.n_levels() {
        return Err(CliError::validation(
            "invalid_parameter",
            format!("level {level} does not exist; the hierarchy has levels 0..={}", h.top()),
        ));
    }
    Ok(())
}

fn read_cached(dir: &Path, h: &Hierarchy, level: usize) -> CliResult<Option<Embedding>> {
    let path = dir.join(embedding_file_name(level));
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(CliError::io("io", format!("{}: {e}", path.display()))),
    };
    let e = decode_embedding_csv(&bytes, h.params.theta).map_err(|e| with_path(&path, e))?;
    if e.level != level || e.len() != h.levels[level].len() {
        return Err(CliError::io(
            "malformed_data",
            format!("{} does not hold a full embedding of level {level}", path.display()),
        ));
    }
    Ok(Some(e))
}

/// Embedding of `level`, computing and caching it and any missing level above.
fn ensure_level(dir: &Path, h: &Hierarchy, params: &LayoutParams, level: usize) -> CliResult<Embedding> {
    let mut parent: Option<Embedding> = None;
    for l in (level..=h.top()).rev() {
        let e = match read_cached(dir, h, l)? {
            Some(e) => e,
            None => {
                let e = project_level(h, l, parent.as_ref(), h.params.theta, params, None)?;
                fs::write(dir.join(embedding_file_name(l)), embedding_to_csv(&e))?;
                e
            }
        };
        parent = Some(e);
    }
    Ok(parent.expect("at least one level"))
}

fn write_embedding(path: &Path, e: &Embedding, binary: bool) -> CliResult<()> {
    let bytes = if binary { embedding_to_binary(e) } else { embedding_to_csv(e).into_bytes() };
    fs::write(path, bytes).map_err(|err| CliError::io("io", format!("{}: {err}", path.display())))
}

fn cached_levels(dir: &Path, h: &Hierarchy) -> Vec<usize> {
    (0..h.n_levels()).filter(|&l| dir.join(embedding_file_name(l)).exists()).collect()
}

pub fn project(args: ProjectArgs) -> CliResult<()> {
    if let Some(selection) = args.selection {
        return drill(DrillArgs {
            hierarchy: args.hierarchy,
            level: args.level,
            selection,
            output: args.output,
            binary: args.binary,
        });
    }
    let dir = &args.hierarchy;
    let h = open_hierarchy(dir)?;
    level_exists(&h, args.level)?;
    let params = layout_params(dir, &h)?;
    let _lock = DirLock::acquire(dir)?;
    let e = ensure_level(dir, &h, &params, args.level)?;
    let path = match &args.output {
        Some(p) => {
            write_embedding(p, &e, args.binary)?;
            p.clone()
        }
        None if args.binary => {
            let p = dir.join(embedding_file_name(args.level)).with_extension("bin");
            write_embedding(&p, &e, true)?;
            p
        }
        None => dir.join(embedding_file_name(args.level)),
    };
    emit(json!({
        "command": "project",
        "level": args.level,
        "rows": e.len(),
        "fixed": e.fixed_mask.iter().filter(|&&f| f).count(),
        "path": path,
        "cached_levels": cached_levels(dir, &h),
    }));
    Ok(())
}

pub fn drill(args: DrillArgs) -> CliResult<()> {
    let dir = &args.hierarchy;
    let h = open_hierarchy(dir)?;
    level_exists(&h, args.level)?;
    if args.level == h.top() {
        return Err(CliError::validation(
            "invalid_parameter",
            format!("level {} is the top level; there are no landmarks above it", args.level),
        ));
    }
    let text = fs::read_to_string(&args.selection)
        .map_err(|e| CliError::io("io", format!("{}: {e}", args.selection.display())))?;
    let selection = parse_selection(&text).map_err(|e| with_path(&args.selection, e))?;
    let params = layout_params(dir, &h)?;
    let _lock = DirLock::acquire(dir)?;
    let parent = ensure_level(dir, &h, &params, args.level + 1)?;
    let e = project_subset(&h, args.level, &selection, &parent, h.params.theta, &params, None)?;
    let digest = selection_digest(&selection);
    let path = args.output.clone().unwrap_or_else(|| {
        let ext = if args.binary { "bin" } else { "csv" };
        dir.join(format!("drill_level_{}_{}.{ext}", args.level, &digest[..12]))
    });
    write_embedding(&path, &e, args.binary)?;
    emit(json!({
        "command": "drill",
        "level": args.level,
        "selected": selection.len(),
        "rows": e.len(),
        "digest": digest,
        "path": path,
    }));
    Ok(())
}

fn recorded_input(dir: &Path) -> CliResult<PathBuf> {
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::io("io", format!("{}: {e}; pass --input", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::io("malformed_data", format!("{}: {e}", path.display())))?;
    Ok(config.input)
}

pub fn eval(args: EvalArgs) -> CliResult<()> {
    let dir = &args.hierarchy;
    let metrics = Metric::parse_list(&args.metrics)?;
    let h = open_hierarchy(dir)?;
    let levels = match &args.levels {
        Some(ls) => {
            let mut ls = ls.clone();
            ls.sort_unstable();
            ls.dedup();
            for &l in &ls {
                level_exists(&h, l)?;
            }
            ls
        }
        None => cached_levels(dir, &h),
    };
    if levels.is_empty() {
        return Err(CliError::validation(
            "missing_embedding",
            "no projected levels; run `humap project` first",
        ));
    }
    let _lock = DirLock::acquire(dir)?;
    let mut embeddings = Vec::new();
    for &l in &levels {
        match read_cached(dir, &h, l)? {
            Some(e) => embeddings.push(e),
            None => {
                return Err(CliError::validation(
                    "missing_embedding",
                    format!("level {l} has no embedding; run `humap project --level {l}` first"),
                ));
            }
        }
    }

    let mut report = MetricsReport { seed: h.params.seed, ..Default::default() };
    if metrics.contains(&Metric::Disparity) {
        if levels.len() < 2 {
            return Err(CliError::validation("undefined_metric", "disparity needs ≥ 2 projected levels"));
        }
        for pair in embeddings.windows(2) {
            let (lower, upper) = (&pair[0], &pair[1]);
            if upper.level != lower.level + 1 {
                continue;
            }
            let d = shared_point_disparity(&h, upper, lower)?;
            report.pairs.push(PairReport {
                upper_level: upper.level,
                lower_level: lower.level,
                shared_points: d.shared_points,
                disparity: d.disparity,
            });
        }
        if report.pairs.is_empty() {
            return Err(CliError::validation(
                "undefined_metric",
                "disparity needs ≥ 2 projected levels that are adjacent",
            ));
        }
    }

    let per_level: Vec<Metric> = metrics.iter().copied().filter(|m| *m != Metric::Disparity).collect();
    if !per_level.is_empty() {
        let input = match &args.input {
            Some(p) => p.clone(),
            None => recorded_input(dir)?,
        };
        let data = load_data(&input, args.format)?;
        if data.n_points() != h.levels[0].len() {
            return Err(CliError::validation(
                "invalid_input",
                format!(
                    "{} has {} points but the hierarchy was built on {}",
                    input.display(),
                    data.n_points(),
                    h.levels[0].len()
                ),
            ));
        }
        for e in &embeddings {
            let high = data.select_rows(&h.levels[e.level].global_ids)?;
            let r = LevelReport::compute(&high, &e.coords, e.level, &per_level, 1..=args.k_max, h.params.k, h.params.seed)?;
            report.levels.push(r);
        }
    }

    let path = args.output.clone().unwrap_or_else(|| dir.join("metrics.json"));
    let is_csv = path.extension().is_some_and(|e| e == "csv");
    let text = if is_csv { report.to_csv() } else { report.to_json() + "\n" };
    fs::write(&path, text).map_err(|e| CliError::io("io", format!("{}: {e}", path.display())))?;
    emit(json!({
        "command": "eval",
        "path": path,
        "levels": levels,
        "metrics": metrics,
        "pairs": report.pairs.len(),
    }));
    Ok(())
}

pub fn serve(args: ServeArgs) -> CliResult<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .map_err(|e| CliError::io("io", format!("cannot bind {}: {e}", args.bind)))?;
        let addr = listener.local_addr()?;
        emit(json!({ "command": "serve", "listening": addr.to_string() }));
        humap_explorer::serve(listener, args.ui_dir).await?;
        Ok(())
    })
}
