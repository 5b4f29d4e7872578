//! Georeferenced 2-D scalar fields (daily AOT) and their text formats.
//!
//! Two input formats are understood:
//!
//! * **dense-grid**: eight `key value` header lines (`ncols`, `nrows`,
//!   `lonmin`, `lonmax`, `latmin`, `latmax`, `missing`, `date`) followed by
//!   `nrows` whitespace-separated rows of `ncols` values, north row first.
//! * **point-list**: CSV with header `date,lon,lat,value`; points are binned
//!   to the nearest cell center of a caller-supplied geometry and duplicate
//!   points in one cell are averaged. An empty `value` field is a missing
//!   sample.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{Bounds, GridGeometry, LonLat};

/// Sentinel written for missing cells when none is specified.
pub const DEFAULT_MISSING: f64 = -9999.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridFormat {
    DenseGrid,
    PointList,
}

impl GridFormat {
    /// File extensions picked up when scanning an input directory.
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            GridFormat::DenseGrid => &["asc", "grid", "txt"],
            GridFormat::PointList => &["csv"],
        }
    }
}

impl FromStr for GridFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dense-grid" => Ok(GridFormat::DenseGrid),
            "point-list" => Ok(GridFormat::PointList),
            other => Err(format!("unknown grid format `{other}` (expected dense-grid or point-list)")),
        }
    }
}

/// A daily scalar field with a validity mask. Immutable once built.
///
/// Missing cells store `0.0` in `values` so that equality and re-serialization
/// are well defined; always consult `mask` first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    geometry: GridGeometry,
    values: Vec<f64>,
    mask: Vec<bool>,
    date: NaiveDate,
}

impl ScalarGrid {
    /// Builds a grid, enforcing every invariant: valid geometry, matching
    /// lengths, finite non-negative valid samples, at least one valid cell.
    pub fn new(geometry: GridGeometry, values: Vec<f64>, mask: Vec<bool>, date: NaiveDate) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.len() || mask.len() != geometry.len() {
            return Err(Error::invalid(
                "values",
                format!(
                    "expected {} samples for a {}x{} grid, got {} values and {} mask entries",
                    geometry.len(),
                    geometry.n_cols,
                    geometry.n_rows,
                    values.len(),
                    mask.len()
                ),
            ));
        }
        let mut values = values;
        for (i, (v, &ok)) in values.iter_mut().zip(&mask).enumerate() {
            if ok {
                if !v.is_finite() || *v < 0.0 {
                    return Err(Error::Domain {
                        source_name: "<memory>".into(),
                        line: i,
                        value: *v,
                    });
                }
            } else {
                *v = 0.0;
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyGrid);
        }
        Ok(Self {
            geometry,
            values,
            mask,
            date,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn bounds(&self) -> &Bounds {
        &self.geometry.bounds
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_cols(&self) -> usize {
        self.geometry.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.geometry.n_rows
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let i = self.geometry.index(col, row);
        self.mask[i].then(|| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Valid cells in row-major order as `(col, row, center, value)`.
    pub fn valid_cells(&self) -> impl Iterator<Item = (usize, usize, LonLat, f64)> + '_ {
        let g = self.geometry;
        (0..g.n_rows).flat_map(move |row| {
            (0..g.n_cols).filter_map(move |col| {
                let i = g.index(col, row);
                self.mask[i].then(|| (col, row, g.cell_center(col, row), self.values[i]))
            })
        })
    }

    /// Largest valid sample.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Bilinear interpolation over the four surrounding cell centers, using
    /// only valid corners with their weights renormalized. `None` outside the
    /// box of cell centers or when no valid corner carries weight.
    pub fn value_at(&self, p: LonLat) -> Option<f64> {
        if !self.bounds().contains(p) {
            return None;
        }
        let g = &self.geometry;
        let (fx, fy) = g.fractional_index(p);
        let c0 = (fx.floor().max(0.0) as usize).min(g.n_cols - 2);
        let r0 = (fy.floor().max(0.0) as usize).min(g.n_rows - 2);
        let tx = (fx - c0 as f64).clamp(0.0, 1.0);
        let ty = (fy - r0 as f64).clamp(0.0, 1.0);
        let corners = [
            (c0, r0, (1.0 - tx) * (1.0 - ty)),
            (c0 + 1, r0, tx * (1.0 - ty)),
            (c0, r0 + 1, (1.0 - tx) * ty),
            (c0 + 1, r0 + 1, tx * ty),
        ];
        let mut acc = 0.0;
        let mut wsum = 0.0;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (col, row, w) in corners {
            if w <= 0.0 {
                continue;
            }
            let i = g.index(col, row);
            if self.mask[i] {
                let v = self.values[i];
                acc += w * v;
                wsum += w;
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (wsum > 0.0).then(|| (acc / wsum).clamp(lo, hi))
    }

    /// Dense-grid text with the given missing sentinel. Values use the
    /// shortest representation that parses back to the same bits.
    pub fn to_dense_string(&self, missing: f64) -> String {
        let g = &self.geometry;
        let b = &g.bounds;
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", g.n_cols);
        let _ = writeln!(out, "nrows {}", g.n_rows);
        let _ = writeln!(out, "lonmin {}", b.lon_min);
        let _ = writeln!(out, "lonmax {}", b.lon_max);
        let _ = writeln!(out, "latmin {}", b.lat_min);
        let _ = writeln!(out, "latmax {}", b.lat_max);
        let _ = writeln!(out, "missing {missing}");
        let _ = writeln!(out, "date {}", self.date.format("%Y-%m-%d"));
        for row in 0..g.n_rows {
            for col in 0..g.n_cols {
                if col > 0 {
                    out.push(' ');
                }
                let i = g.index(col, row);
                if self.mask[i] {
                    let _ = write!(out, "{}", self.values[i]);
                } else {
                    let _ = write!(out, "{missing}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write_dense(&self, path: &Path, missing: f64) -> Result<()> {
        fs::write(path, self.to_dense_string(missing)).map_err(|e| Error::io(path, e))
    }
}

/// Loads one day's grid from disk. `geometry` is required for point lists.
pub fn load_grid(path: &Path, format: GridFormat, geometry: Option<&GridGeometry>) -> Result<ScalarGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    match format {
        GridFormat::DenseGrid => parse_dense(&text, &name),
        GridFormat::PointList => {
            let geometry = geometry.ok_or_else(|| Error::invalid("geometry", "point-list input requires a grid geometry"))?;
            parse_point_list(&text, &name, geometry)
        }
    }
}

#[derive(Default)]
struct DenseHeader {
    ncols: Option<usize>,
    nrows: Option<usize>,
    lonmin: Option<f64>,
    lonmax: Option<f64>,
    latmin: Option<f64>,
    latmax: Option<f64>,
    missing: Option<f64>,
    date: Option<NaiveDate>,
}

const HEADER_KEYS: [&str; 8] = ["ncols", "nrows", "lonmin", "lonmax", "latmin", "latmax", "missing", "date"];

pub fn parse_dense(text: &str, name: &str) -> Result<ScalarGrid> {
    let mut header = DenseHeader::default();
    let mut lines = text.lines().enumerate().peekable();

    // Header: keyword lines until the first line that does not start with one.
    while let Some(&(idx, line)) = lines.peek() {
        let line_no = idx + 1;
        let mut tokens = line.split_whitespace();
        let Some(key) = tokens.next() else {
            lines.next();
            continue;
        };
        let key = key.to_ascii_lowercase();
        if !HEADER_KEYS.contains(&key.as_str()) {
            break;
        }
        lines.next();
        let value = tokens
            .next()
            .ok_or_else(|| Error::parse(name, line_no, format!("header `{key}` has no value")))?;
        if tokens.next().is_some() {
            return Err(Error::parse(name, line_no, format!("header `{key}` has trailing tokens")));
        }
        let bad = |what: &str| Error::parse(name, line_no, format!("header `{key}`: cannot parse `{value}` as {what}"));
        match key.as_str() {
            "ncols" => header.ncols = Some(value.parse().map_err(|_| bad("a count"))?),
            "nrows" => header.nrows = Some(value.parse().map_err(|_| bad("a count"))?),
            "lonmin" => header.lonmin = Some(value.parse().map_err(|_| bad("a number"))?),
            "lonmax" => header.lonmax = Some(value.parse().map_err(|_| bad("a number"))?),
            "latmin" => header.latmin = Some(value.parse().map_err(|_| bad("a number"))?),
            "latmax" => header.latmax = Some(value.parse().map_err(|_| bad("a number"))?),
            "missing" => header.missing = Some(value.parse().map_err(|_| bad("a number"))?),
            "date" => {
                header.date = Some(NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| bad("a YYYY-MM-DD date"))?)
            }
            _ => unreachable!(),
        }
    }

    let header_line = lines.peek().map_or(text.lines().count(), |&(i, _)| i + 1);
    let need = |field: &str| Error::parse(name, header_line, format!("missing header `{field}`"));
    let geometry = GridGeometry {
        bounds: Bounds {
            lon_min: header.lonmin.ok_or_else(|| need("lonmin"))?,
            lon_max: header.lonmax.ok_or_else(|| need("lonmax"))?,
            lat_min: header.latmin.ok_or_else(|| need("latmin"))?,
            lat_max: header.latmax.ok_or_else(|| need("latmax"))?,
        },
        n_cols: header.ncols.ok_or_else(|| need("ncols"))?,
        n_rows: header.nrows.ok_or_else(|| need("nrows"))?,
    };
    let date = header.date.ok_or_else(|| need("date"))?;
    let missing = header.missing.unwrap_or(DEFAULT_MISSING);
    if let Some(v) = geometry.violations("").into_iter().next() {
        return Err(Error::parse(name, header_line, v.to_string()));
    }

    let mut values = Vec::with_capacity(geometry.len());
    let mut mask = Vec::with_capacity(geometry.len());
    let mut rows = 0;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if rows == geometry.n_rows {
            return Err(Error::parse(name, line_no, format!("more than {} data rows", geometry.n_rows)));
        }
        let mut cols = 0;
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| Error::parse(name, line_no, format!("cannot parse `{token}` as a number")))?;
            cols += 1;
            if v == missing || (v.is_nan() && missing.is_nan()) {
                values.push(0.0);
                mask.push(false);
            } else if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain {
                    source_name: name.to_string(),
                    line: line_no,
                    value: v,
                });
            } else {
                values.push(v);
                mask.push(true);
            }
        }
        if cols != geometry.n_cols {
            return Err(Error::parse(
                name,
                line_no,
                format!("expected {} values, found {cols}", geometry.n_cols),
            ));
        }
        rows += 1;
    }
    if rows != geometry.n_rows {
        return Err(Error::parse(
            name,
            text.lines().count(),
            format!("expected {} data rows, found {rows}", geometry.n_rows),
        ));
    }
    ScalarGrid::new(geometry, values, mask, date)
}

pub fn parse_point_list(text: &str, name: &str, geometry: &GridGeometry) -> Result<ScalarGrid> {
    geometry.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(name, 1, e.to_string()))?
        .clone();
    let expected = ["date", "lon", "lat", "value"];
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| !h.eq_ignore_ascii_case(e)) {
        return Err(Error::parse(name, 1, "header must be `date,lon,lat,value`"));
    }

    let mut sums = vec![0.0; geometry.len()];
    let mut counts = vec![0u32; geometry.len()];
    let mut date: Option<NaiveDate> = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(name, line, e.to_string())
        })?;
        let line_no = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::parse(name, line_no, format!("expected 4 fields, found {}", record.len())));
        }
        let d = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|_| Error::parse(name, line_no, format!("cannot parse `{}` as a YYYY-MM-DD date", &record[0])))?;
        match date {
            None => date = Some(d),
            Some(first) if first != d => {
                return Err(Error::parse(name, line_no, format!("point list mixes dates {first} and {d}")))
            }
            _ => {}
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::parse(name, line_no, format!("cannot parse `{}` as a number", &record[i])))
        };
        let lon = num(1)?;
        let lat = num(2)?;
        if record[3].is_empty() {
            continue;
        }
        let value = num(3)?;
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain {
                source_name: name.to_string(),
                line: line_no,
                value,
            });
        }
        if let Some((col, row)) = geometry.nearest_cell(LonLat::new(lon, lat)) {
            let i = geometry.index(col, row);
            sums[i] += value;
            counts[i] += 1;
        }
    }
    let date = date.ok_or(Error::EmptyGrid)?;
    let mask: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / f64::from(c) } else { 0.0 })
        .collect();
    ScalarGrid::new(*geometry, values, mask, date)
}
