//! Planar lon/lat geometry shared by every module.
//!
//! Distances are Euclidean in decimal degrees. At city scale the error
//! against great-circle distance stays below one percent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    /// Euclidean distance in degrees. Every range and radius test in the
    /// crate goes through this one function so that indexed and brute-force
    /// searches agree bit for bit.
    #[inline]
    pub fn distance(self, other: LonLat) -> f64 {
        let dx = other.lon - self.lon;
        let dy = other.lat - self.lat;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Axis-aligned lon/lat box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl Bounds {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [
            ("lon_min", self.lon_min),
            ("lon_max", self.lon_max),
            ("lat_min", self.lat_min),
            ("lat_max", self.lat_max),
        ] {
            if !v.is_finite() {
                out.push(Violation::new(format!("{prefix}{name}"), "must be finite"));
            }
        }
        if !(self.lon_min < self.lon_max) {
            out.push(Violation::new(
                format!("{prefix}lon_min"),
                format!("must be < lon_max (got {} >= {})", self.lon_min, self.lon_max),
            ));
        }
        if !(self.lat_min < self.lat_max) {
            out.push(Violation::new(
                format!("{prefix}lat_min"),
                format!("must be < lat_max (got {} >= {})", self.lat_min, self.lat_max),
            ));
        }
        out
    }

    pub fn width(&self) -> f64 {
        self.lon_max - self.lon_min
    }

    pub fn height(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    pub fn contains(&self, p: LonLat) -> bool {
        p.lon >= self.lon_min && p.lon <= self.lon_max && p.lat >= self.lat_min && p.lat <= self.lat_max
    }

    pub fn clamp(&self, p: LonLat) -> LonLat {
        LonLat {
            lon: p.lon.clamp(self.lon_min, self.lon_max),
            lat: p.lat.clamp(self.lat_min, self.lat_max),
        }
    }

    pub fn center(&self) -> LonLat {
        LonLat::new(
            0.5 * (self.lon_min + self.lon_max),
            0.5 * (self.lat_min + self.lat_max),
        )
    }
}

/// Node-registered raster geometry: cell centers are uniformly spaced with
/// the first column on `lon_min`, the last on `lon_max`, row 0 on `lat_max`
/// (north-up) and the last row on `lat_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    #[serde(flatten)]
    pub bounds: Bounds,
    pub n_cols: usize,
    pub n_rows: usize,
}

/// Fractional indices closer than this to an integer are snapped onto it, so
/// cell centers computed by [`GridGeometry::cell_center`] map back exactly.
const NODE_SNAP: f64 = 1e-9;

impl GridGeometry {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = self.bounds.violations(prefix);
        if self.n_cols < 2 {
            out.push(Violation::new(format!("{prefix}n_cols"), format!("must be >= 2 (got {})", self.n_cols)));
        }
        if self.n_rows < 2 {
            out.push(Violation::new(format!("{prefix}n_rows"), format!("must be >= 2 (got {})", self.n_rows)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations("");
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spacing between adjacent cell centers, (lon, lat).
    pub fn spacing(&self) -> (f64, f64) {
        (
            self.bounds.width() / (self.n_cols - 1) as f64,
            self.bounds.height() / (self.n_rows - 1) as f64,
        )
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.n_cols + col
    }

    pub fn cell_center(&self, col: usize, row: usize) -> LonLat {
        let b = &self.bounds;
        let fx = col as f64 / (self.n_cols - 1) as f64;
        let fy = row as f64 / (self.n_rows - 1) as f64;
        // The far edge is pinned so edge centers are exactly on the bounds.
        let lon = if col + 1 == self.n_cols { b.lon_max } else { b.lon_min + fx * b.width() };
        let lat = if row + 1 == self.n_rows { b.lat_min } else { b.lat_max - fy * b.height() };
        LonLat::new(lon, lat)
    }

    /// Continuous (col, row) index of a position; integers are cell centers.
    pub fn fractional_index(&self, p: LonLat) -> (f64, f64) {
        let b = &self.bounds;
        let fx = (p.lon - b.lon_min) / b.width() * (self.n_cols - 1) as f64;
        let fy = (b.lat_max - p.lat) / b.height() * (self.n_rows - 1) as f64;
        (snap(fx), snap(fy))
    }

    /// Nearest cell center, or `None` when the position is more than half a
    /// cell outside the grid.
    pub fn nearest_cell(&self, p: LonLat) -> Option<(usize, usize)> {
        let (fx, fy) = self.fractional_index(p);
        let col = fx.round();
        let row = fy.round();
        if !(col >= 0.0 && row >= 0.0 && col < self.n_cols as f64 && row < self.n_rows as f64) {
            return None;
        }
        Some((col as usize, row as usize))
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < NODE_SNAP {
        r
    } else {
        x
    }
}
