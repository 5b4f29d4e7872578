//! Result files: CSV tables, a GeoJSON feature collection and static SVG
//! maps.
//!
//! Every writer is deterministic: numbers use Rust's shortest round-trip
//! formatting (CSV, GeoJSON) or fixed three-decimal pixels (SVG), and rows
//! follow the order of the inputs, which callers keep canonical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result, Violation};
use crate::geo::{Bounds, LonLat};
use crate::gso::SwarmState;
use crate::hotspots::{assignment, HotSpot, PeriodAverage};
use crate::peaks::Peak;
use crate::quantify::{temporal_delta, Period, RegionalAverage};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `date,lon,lat,support,regional_value`
pub fn write_peaks_csv(path: &Path, peaks: &[Peak]) -> Result<()> {
    write_rows(
        path,
        &["date", "lon", "lat", "support", "regional_value"],
        peaks.iter().map(|p| {
            [
                p.date.to_string(),
                p.lon.to_string(),
                p.lat.to_string(),
                p.support.to_string(),
                fmt_opt(p.regional_value),
            ]
        }),
    )
}

/// `date,lon,lat,regional_value,m`
pub fn write_regional_csv(path: &Path, peaks: &[Peak], regional: &[RegionalAverage]) -> Result<()> {
    write_rows(
        path,
        &["date", "lon", "lat", "regional_value", "m"],
        peaks.iter().zip(regional).map(|(p, r)| {
            [
                p.date.to_string(),
                p.lon.to_string(),
                p.lat.to_string(),
                fmt_opt(r.value),
                r.m.to_string(),
            ]
        }),
    )
}

/// `id,name,centroid_lon,centroid_lat,n_peaks,n_days`
pub fn write_hotspots_csv(path: &Path, hotspots: &[HotSpot]) -> Result<()> {
    write_rows(
        path,
        &["id", "name", "centroid_lon", "centroid_lat", "n_peaks", "n_days"],
        hotspots.iter().map(|h| {
            [
                h.id.to_string(),
                h.name.clone().unwrap_or_default(),
                h.centroid.lon.to_string(),
                h.centroid.lat.to_string(),
                h.members.len().to_string(),
                h.n_days().to_string(),
            ]
        }),
    )
}

/// `hotspot_id,period,avg_value,n_peaks`, one row per hot-spot and period.
pub fn write_quantification_csv(path: &Path, hotspots: &[HotSpot]) -> Result<()> {
    write_rows(
        path,
        &["hotspot_id", "period", "avg_value", "n_peaks"],
        hotspots.iter().flat_map(|h| {
            h.per_period
                .iter()
                .map(move |(label, avg)| [h.id.to_string(), label.clone(), fmt_opt(avg.value), avg.n_peaks.to_string()])
        }),
    )
}

/// `hotspot_id,period_a,period_b,delta,trend` for each pair of consecutive
/// periods that both have data.
pub fn write_deltas_csv(path: &Path, hotspots: &[HotSpot], period: Period) -> Result<()> {
    let mut rows = Vec::new();
    for h in hotspots {
        let labels: Vec<&String> = h.per_period.iter().filter(|(_, a)| a.value.is_some()).map(|(l, _)| l).collect();
        for pair in labels.windows(2) {
            if let Some(d) = temporal_delta(h, pair[0], pair[1], period) {
                rows.push([
                    h.id.to_string(),
                    pair[0].clone(),
                    pair[1].clone(),
                    d.delta.to_string(),
                    d.trend.to_string(),
                ]);
            }
        }
    }
    write_rows(path, &["hotspot_id", "period_a", "period_b", "delta", "trend"], rows)
}

/// Streams per-iteration swarm snapshots as
/// `iteration,worm_id,lon,lat,luciferin,range`.
pub struct TraceWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "iteration,worm_id,lon,lat,luciferin,range").map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
        })
    }

    pub fn record(&mut self, state: &SwarmState) -> Result<()> {
        for i in 0..state.len() {
            let p = state.positions[i];
            writeln!(
                self.out,
                "{},{},{},{},{},{}",
                state.iteration, state.ids[i], p.lon, p.lat, state.luciferin[i], state.ranges[i]
            )
            .map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Hot-spot as stored in the results GeoJSON (members reduced to counts).
#[derive(Debug, Clone, PartialEq)]
pub struct HotSpotSummary {
    pub id: u32,
    pub name: Option<String>,
    pub centroid: LonLat,
    pub n_peaks: usize,
    pub n_days: usize,
    pub per_period: BTreeMap<String, PeriodAverage>,
}

impl From<&HotSpot> for HotSpotSummary {
    fn from(h: &HotSpot) -> Self {
        Self {
            id: h.id,
            name: h.name.clone(),
            centroid: h.centroid,
            n_peaks: h.members.len(),
            n_days: h.n_days(),
            per_period: h.per_period.clone(),
        }
    }
}

/// Everything a map needs: peaks with their hot-spot ids, and hot-spots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultSet {
    pub peaks: Vec<Peak>,
    pub peak_hotspot: Vec<Option<u32>>,
    pub hotspots: Vec<HotSpotSummary>,
}

impl ResultSet {
    pub fn new(peaks: &[Peak], hotspots: &[HotSpot]) -> Self {
        Self {
            peaks: peaks.to_vec(),
            peak_hotspot: assignment(peaks, hotspots),
            hotspots: hotspots.iter().map(HotSpotSummary::from).collect(),
        }
    }
}

fn opt_num(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

pub fn to_geojson(results: &ResultSet) -> Value {
    let mut features = Vec::with_capacity(results.peaks.len() + results.hotspots.len());
    for (p, h) in results.peaks.iter().zip(&results.peak_hotspot) {
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
            "properties": {
                "kind": "peak",
                "date": p.date.to_string(),
                "support": p.support,
                "regional_value": opt_num(p.regional_value),
                "hotspot_id": h.map_or(Value::Null, |id| json!(id)),
            }
        }));
    }
    for h in &results.hotspots {
        let averages: Map<String, Value> = h.per_period.iter().map(|(l, a)| (l.clone(), opt_num(a.value))).collect();
        let counts: Map<String, Value> = h.per_period.iter().map(|(l, a)| (l.clone(), json!(a.n_peaks))).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [h.centroid.lon, h.centroid.lat]},
            "properties": {
                "kind": "hotspot",
                "id": h.id,
                "name": h.name.as_ref().map_or(Value::Null, |n| json!(n)),
                "n_peaks": h.n_peaks,
                "n_days": h.n_days,
                "period_averages": averages,
                "period_counts": counts,
            }
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

pub fn write_geojson(path: &Path, results: &ResultSet) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&to_geojson(results)).expect("GeoJSON values serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_geojson(path: &Path) -> Result<ResultSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_geojson(&text, &path.display().to_string())
}

/// Inverse of [`to_geojson`].
pub fn parse_geojson(text: &str, source: &str) -> Result<ResultSet> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))?;
    let bad = |msg: String| Error::parse(source, 0, msg);
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("not a FeatureCollection".into()))?;
    let mut out = ResultSet::default();
    for (k, f) in features.iter().enumerate() {
        let coords = f
            .pointer("/geometry/coordinates")
            .and_then(Value::as_array)
            .and_then(|c| Some(LonLat::new(c.first()?.as_f64()?, c.get(1)?.as_f64()?)))
            .ok_or_else(|| bad(format!("feature {k}: missing point coordinates")))?;
        let props = f.get("properties").ok_or_else(|| bad(format!("feature {k}: no properties")))?;
        let get_u64 = |key: &str| {
            props
                .get(key)
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(format!("feature {k}: missing integer `{key}`")))
        };
        match props.get("kind").and_then(Value::as_str) {
            Some("peak") => {
                let date = props
                    .get("date")
                    .and_then(Value::as_str)
                    .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
                    .ok_or_else(|| bad(format!("feature {k}: missing date")))?;
                out.peaks.push(Peak {
                    date,
                    lon: coords.lon,
                    lat: coords.lat,
                    support: get_u64("support")? as usize,
                    regional_value: props.get("regional_value").and_then(Value::as_f64),
                });
                out.peak_hotspot
                    .push(props.get("hotspot_id").and_then(Value::as_u64).map(|v| v as u32));
            }
            Some("hotspot") => {
                let averages = props.get("period_averages").and_then(Value::as_object);
                let counts = props.get("period_counts").and_then(Value::as_object);
                let per_period = averages
                    .into_iter()
                    .flatten()
                    .map(|(l, v)| {
                        let n = counts.and_then(|c| c.get(l)).and_then(Value::as_u64).unwrap_or(0) as usize;
                        (
                            l.clone(),
                            PeriodAverage {
                                value: v.as_f64(),
                                n_peaks: n,
                            },
                        )
                    })
                    .collect();
                out.hotspots.push(HotSpotSummary {
                    id: get_u64("id")? as u32,
                    name: props.get("name").and_then(Value::as_str).map(str::to_string),
                    centroid: coords,
                    n_peaks: get_u64("n_peaks")? as usize,
                    n_days: get_u64("n_days")? as usize,
                    per_period,
                });
            }
            _ => return Err(bad(format!("feature {k}: unknown `kind`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    /// Peaks colored by hot-spot, unassigned peaks black.
    PeaksByHotspotColor,
    /// Peaks colored by regional value on a continuous ramp.
    PeaksByRegionalValue,
    /// One marker per hot-spot centroid.
    HotspotCentroids,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColorMap {
    /// 11-class qualitative palette keyed by hot-spot id.
    Qualitative,
    /// Continuous five-stop viridis ramp.
    Viridis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSpec {
    /// Defaults to the grid bounds when rendered from a run.
    #[serde(default)]
    pub bounds: Option<Bounds>,
    #[serde(default = "default_size")]
    pub width: u32,
    #[serde(default = "default_size")]
    pub height: u32,
    pub layer: Layer,
    #[serde(default)]
    pub color_map: Option<ColorMap>,
    /// Output file name, relative to the output directory.
    pub file: String,
}

fn default_size() -> u32 {
    600
}

impl RenderSpec {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.width < 64 {
            out.push(Violation::new(format!("{prefix}width"), format!("must be >= 64 (got {})", self.width)));
        }
        if self.height < 64 {
            out.push(Violation::new(format!("{prefix}height"), format!("must be >= 64 (got {})", self.height)));
        }
        if let Some(b) = &self.bounds {
            out.extend(b.violations(&format!("{prefix}bounds.")));
        }
        let wants_ramp = self.layer == Layer::PeaksByRegionalValue;
        match (self.color_map, wants_ramp) {
            (Some(ColorMap::Qualitative), true) => out.push(Violation::new(
                format!("{prefix}color_map"),
                "peaks-by-regional-value needs a continuous ramp (viridis)",
            )),
            (Some(ColorMap::Viridis), false) => out.push(Violation::new(
                format!("{prefix}color_map"),
                "hot-spot layers need the qualitative palette",
            )),
            _ => {}
        }
        if self.file.is_empty() || Path::new(&self.file).components().count() != 1 {
            out.push(Violation::new(format!("{prefix}file"), "must be a plain file name"));
        }
        out
    }
}

pub const QUALITATIVE: [&str; 11] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78",
];

const VIRIDIS: [(u8, u8, u8); 5] = [(0x44, 0x01, 0x54), (0x3b, 0x52, 0x8b), (0x21, 0x91, 0x8c), (0x5e, 0xc9, 0x62), (0xfd, 0xe7, 0x25)];

const UNASSIGNED: &str = "#000000";
const NO_DATA: &str = "#999999";
const LEGEND_WIDTH: u32 = 200;

pub fn hotspot_color(id: u32) -> &'static str {
    QUALITATIVE[(id.max(1) as usize - 1) % QUALITATIVE.len()]
}

/// Color for `t` in [0, 1] on the viridis ramp.
pub fn ramp_color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let k = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (VIRIDIS[k], VIRIDIS[k + 1]);
    let mix = |u: u8, v: u8| (f64::from(u) + f * (f64::from(v) - f64::from(u))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Equirectangular map from `bounds` onto a `width` x `height` pixel box,
/// north up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub bounds: Bounds,
    pub width: f64,
    pub height: f64,
}

impl Projection {
    pub fn project(&self, p: LonLat) -> (f64, f64) {
        let b = &self.bounds;
        (
            (p.lon - b.lon_min) / b.width() * self.width,
            (b.lat_max - p.lat) / b.height() * self.height,
        )
    }

    pub fn unproject(&self, x: f64, y: f64) -> LonLat {
        let b = &self.bounds;
        LonLat::new(b.lon_min + x / self.width * b.width(), b.lat_max - y / self.height * b.height())
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders one layer as SVG text. `default_bounds` applies when the spec
/// has none.
pub fn render_svg(spec: &RenderSpec, results: &ResultSet, default_bounds: Option<&Bounds>) -> Result<String> {
    let violations = spec.violations("");
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let bounds = spec
        .bounds
        .or(default_bounds.copied())
        .ok_or_else(|| Error::invalid("bounds", "no bounds given and none available from the run"))?;
    let proj = Projection {
        bounds,
        width: f64::from(spec.width),
        height: f64::from(spec.height),
    };
    let total_w = spec.width + LEGEND_WIDTH;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w}" height="{h}" viewBox="0 0 {total_w} {h}">"#,
        h = spec.height
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{total_w}" height="{}" fill="#ffffff"/>"##, spec.height);
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="none" stroke="#444444" stroke-width="1"/>"##,
        spec.width, spec.height
    );
    let circle = |svg: &mut String, p: LonLat, r: f64, fill: &str| {
        let (x, y) = proj.project(p);
        let _ = writeln!(svg, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r}" fill="{fill}"/>"#);
    };
    let legend_x = spec.width + 12;
    let mut legend: Vec<(String, String)> = Vec::new();

    match spec.layer {
        Layer::PeaksByHotspotColor => {
            let _ = writeln!(svg, r#"<g id="peaks">"#);
            for (p, h) in results.peaks.iter().zip(&results.peak_hotspot) {
                if bounds.contains(p.location()) {
                    circle(&mut svg, p.location(), 3.0, h.map_or(UNASSIGNED, hotspot_color));
                }
            }
            let _ = writeln!(svg, "</g>");
            for h in &results.hotspots {
                legend.push((hotspot_color(h.id).to_string(), hotspot_label(h)));
            }
            legend.push((UNASSIGNED.to_string(), "not assigned".to_string()));
        }
        Layer::PeaksByRegionalValue => {
            let values: Vec<f64> = results.peaks.iter().filter_map(|p| p.regional_value).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let _ = writeln!(svg, r#"<g id="peaks">"#);
            for p in &results.peaks {
                if bounds.contains(p.location()) {
                    let fill = p.regional_value.map_or(NO_DATA.to_string(), |v| ramp_color(scale(v)));
                    circle(&mut svg, p.location(), 3.0, &fill);
                }
            }
            let _ = writeln!(svg, "</g>");
            if !values.is_empty() {
                for k in 0..5 {
                    let t = k as f64 / 4.0;
                    legend.push((ramp_color(t), format!("{:.3}", lo + t * (hi - lo))));
                }
            }
            legend.push((NO_DATA.to_string(), "no data".to_string()));
        }
        Layer::HotspotCentroids => {
            let _ = writeln!(svg, r#"<g id="hotspots">"#);
            for h in &results.hotspots {
                if bounds.contains(h.centroid) {
                    circle(&mut svg, h.centroid, 6.0, hotspot_color(h.id));
                    let (x, y) = proj.project(h.centroid);
                    let _ = writeln!(
                        svg,
                        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11">{}</text>"#,
                        x + 8.0,
                        y + 4.0,
                        h.id
                    );
                }
            }
            let _ = writeln!(svg, "</g>");
            for h in &results.hotspots {
                legend.push((hotspot_color(h.id).to_string(), hotspot_label(h)));
            }
        }
    }

    let _ = writeln!(svg, r#"<g id="legend" font-family="sans-serif" font-size="11">"#);
    for (k, (color, label)) in legend.iter().enumerate() {
        let y = 16 + 16 * k as u32;
        let _ = writeln!(svg, r#"<rect x="{legend_x}" y="{}" width="10" height="10" fill="{color}"/>"#, y - 9);
        let _ = writeln!(svg, r#"<text x="{}" y="{y}">{}</text>"#, legend_x + 16, xml_escape(label));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

fn hotspot_label(h: &HotSpotSummary) -> String {
    match &h.name {
        Some(n) => format!("{} {}", h.id, n),
        None => h.id.to_string(),
    }
}

pub fn write_svg(path: &Path, spec: &RenderSpec, results: &ResultSet, default_bounds: Option<&Bounds>) -> Result<()> {
    let svg = render_svg(spec, results, default_bounds)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
