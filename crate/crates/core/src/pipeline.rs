//! End-to-end run: load or synthesize one grid per day, localize peaks on
//! each day in parallel, then pool, cluster, quantify and write results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Utc};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geo::Bounds;
use crate::grid::{load_grid, ScalarGrid, DEFAULT_MISSING};
use crate::gso::{self, GsoParams};
use crate::hotspots::{assign_names, form_hotspots, load_regions, HotSpot};
use crate::io_render::{
    write_deltas_csv, write_geojson, write_hotspots_csv, write_peaks_csv, write_quantification_csv, write_regional_csv,
    write_svg, ResultSet, TraceWriter,
};
use crate::peaks::{extract_peaks, Peak};
use crate::quantify::{fill_period_averages, regional_aot, RegionalAverage};
use crate::synth::render_mixture;

pub const MANIFEST: &str = "manifest.json";
pub const RESULTS_GEOJSON: &str = "results.geojson";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Swarm seed for one day. Depends only on the run seed and the date, so a
/// day's result does not depend on which other days are in the run.
pub fn day_seed(seed: u64, date: NaiveDate) -> u64 {
    splitmix64(seed ^ splitmix64(date.num_days_from_ce() as u64))
}

/// Reads every grid file in the input directory, sorted by date.
pub fn load_inputs(cfg: &RunConfig) -> Result<Vec<ScalarGrid>> {
    let Some(dir) = &cfg.input_dir else {
        return Ok(Vec::new());
    };
    let dir = cfg.resolve(dir);
    let format = cfg.format();
    let mut files = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
        let path = entry.map_err(|e| Error::io(&dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| format.extensions().contains(&e.as_str())) {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::NoInput(dir));
    }
    files.sort();
    let grids = files
        .par_iter()
        .map(|p| load_grid(p, format, cfg.geometry.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    sort_unique_dates(grids, &files)
}

fn sort_unique_dates(grids: Vec<ScalarGrid>, sources: &[PathBuf]) -> Result<Vec<ScalarGrid>> {
    let mut by_date: BTreeMap<NaiveDate, (ScalarGrid, &PathBuf)> = BTreeMap::new();
    for (g, src) in grids.into_iter().zip(sources) {
        if let Some((_, first)) = by_date.get(&g.date()) {
            return Err(Error::parse(
                src.display().to_string(),
                0,
                format!("date {} already loaded from {}", g.date(), first.display()),
            ));
        }
        by_date.insert(g.date(), (g, src));
    }
    Ok(by_date.into_values().map(|(g, _)| g).collect())
}

/// Renders the synthetic days, sorted by date.
pub fn synthesize(cfg: &RunConfig) -> Result<Vec<ScalarGrid>> {
    let (Some(syn), Some(geometry)) = (&cfg.synthetic, &cfg.geometry) else {
        return Ok(Vec::new());
    };
    let mut grids = syn
        .days
        .par_iter()
        .map(|d| render_mixture(&d.mixture(), geometry, d.date))
        .collect::<Result<Vec<_>>>()?;
    grids.sort_by_key(ScalarGrid::date);
    Ok(grids)
}

pub fn input_grids(cfg: &RunConfig) -> Result<Vec<ScalarGrid>> {
    if cfg.synthetic.is_some() {
        synthesize(cfg)
    } else {
        load_inputs(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub date: NaiveDate,
    pub n_glowworms: usize,
    /// Canonically ordered, with `regional_value` filled in.
    pub peaks: Vec<Peak>,
    pub regional: Vec<RegionalAverage>,
}

/// Swarm, peak extraction and regional averages for one day.
pub fn process_day(grid: &ScalarGrid, cfg: &RunConfig, trace: Option<&Path>) -> Result<DayResult> {
    let params = GsoParams {
        seed: day_seed(cfg.gso.seed, grid.date()),
        ..cfg.gso
    };
    let state = match trace {
        Some(path) => {
            let mut writer = TraceWriter::create(path)?;
            let mut failure = None;
            let state = gso::run_traced(grid, &params, |s| {
                if failure.is_none() {
                    failure = writer.record(s).err();
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            writer.finish()?;
            state
        }
        None => gso::run(grid, &params)?,
    };
    let mut peaks = extract_peaks(&state, grid.date(), cfg.peaks.link_radius, cfg.peaks.min_support);
    let regional = peaks
        .iter()
        .map(|p| regional_aot(p, grid, cfg.quantify.radius))
        .collect::<Result<Vec<_>>>()?;
    for (p, r) in peaks.iter_mut().zip(&regional) {
        p.regional_value = r.value;
    }
    Ok(DayResult {
        date: grid.date(),
        n_glowworms: state.len(),
        peaks,
        regional,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub config_hash: String,
    pub days: Vec<DayResult>,
    pub hotspots: Vec<HotSpot>,
}

impl RunSummary {
    pub fn peaks(&self) -> Vec<Peak> {
        self.days.iter().flat_map(|d| d.peaks.iter().cloned()).collect()
    }
}

fn union_bounds(grids: &[ScalarGrid]) -> Option<Bounds> {
    let mut it = grids.iter().map(|g| *g.bounds());
    let first = it.next()?;
    Some(it.fold(first, |a, b| Bounds {
        lon_min: a.lon_min.min(b.lon_min),
        lon_max: a.lon_max.max(b.lon_max),
        lat_min: a.lat_min.min(b.lat_min),
        lat_max: a.lat_max.max(b.lat_max),
    }))
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Validates, processes every day, and writes all outputs. Progress goes to
/// standard error unless `quiet`.
pub fn run_pipeline(cfg: &RunConfig, quiet: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let grids = input_grids(cfg)?;
    if grids.is_empty() {
        return Err(Error::NoInput(cfg.input_dir.clone().unwrap_or_default()));
    }
    let out_dir = cfg.output_path();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let trace_dir = out_dir.join("trace");
    if cfg.trace {
        fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    }

    let days = grids
        .par_iter()
        .map(|g| {
            let trace = cfg.trace.then(|| trace_dir.join(format!("{}.csv", g.date())));
            let day = process_day(g, cfg, trace.as_deref())?;
            if !quiet {
                eprintln!("{}: {} peaks", day.date, day.peaks.len());
            }
            Ok(day)
        })
        .collect::<Result<Vec<_>>>()?;

    let peaks: Vec<Peak> = days.iter().flat_map(|d| d.peaks.iter().cloned()).collect();
    let regional: Vec<RegionalAverage> = days.iter().flat_map(|d| d.regional.iter().copied()).collect();
    let mut hotspots = form_hotspots(&peaks, cfg.hotspots.radius, cfg.hotspots.min_days);
    let regions = cfg.regions.as_ref().map(|p| load_regions(&cfg.resolve(p))).transpose()?;
    assign_names(&mut hotspots, regions.as_deref());
    for h in &mut hotspots {
        fill_period_averages(h, cfg.quantify.period);
    }

    write_peaks_csv(&out_dir.join("peaks.csv"), &peaks)?;
    write_regional_csv(&out_dir.join("regional.csv"), &peaks, &regional)?;
    write_hotspots_csv(&out_dir.join("hotspots.csv"), &hotspots)?;
    write_quantification_csv(&out_dir.join("quantification.csv"), &hotspots)?;
    write_deltas_csv(&out_dir.join("deltas.csv"), &hotspots, cfg.quantify.period)?;
    let results = ResultSet::new(&peaks, &hotspots);
    write_geojson(&out_dir.join(RESULTS_GEOJSON), &results)?;
    let bounds = union_bounds(&grids);
    for spec in &cfg.render {
        write_svg(&out_dir.join(&spec.file), spec, &results, bounds.as_ref())?;
    }

    let config_hash = cfg.semantic_hash();
    let manifest = json!({
        "config_hash": config_hash,
        "seed": cfg.gso.seed,
        "generated_at": Utc::now().to_rfc3339(),
        "bounds": bounds,
        "period": cfg.quantify.period,
        "days": days.iter().map(|d| json!({
            "date": d.date.to_string(),
            "n_glowworms": d.n_glowworms,
            "n_peaks": d.peaks.len(),
        })).collect::<Vec<_>>(),
        "n_peaks": peaks.len(),
        "n_hotspots": hotspots.len(),
    });
    let manifest_path = out_dir.join(MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    if !quiet {
        eprintln!("{} peaks, {} hot-spots -> {}", peaks.len(), hotspots.len(), out_dir.display());
    }

    Ok(RunSummary {
        output_dir: out_dir,
        config_hash,
        days,
        hotspots,
    })
}

/// Writes each synthetic day as a dense grid named `YYYY-MM-DD.asc`.
pub fn write_synthetic(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.synthetic.is_none() {
        return Err(Error::invalid("synthetic", "synth needs a [[synthetic.days]] list"));
    }
    let out_dir = cfg.output_path();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut written = Vec::new();
    for g in synthesize(cfg)? {
        let path = out_dir.join(format!("{}.asc", g.date()));
        g.write_dense(&path, DEFAULT_MISSING)?;
        written.push(path);
    }
    Ok(written)
}

/// Bounds recorded in a run's manifest, if any.
pub fn manifest_bounds(results_dir: &Path) -> Result<Option<Bounds>> {
    let path = results_dir.join(MANIFEST);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
    match value.get("bounds") {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(b) => serde_json::from_value(b.clone())
            .map(Some)
            .map_err(|e| Error::parse(path.display().to_string(), 0, e.to_string())),
    }
}
