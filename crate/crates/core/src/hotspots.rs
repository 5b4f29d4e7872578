//! Hot-spots: places where peaks recur across many days.
//!
//! Peaks from every day are pooled and grouped by single linkage at
//! `radius`; a group survives when its peaks span at least `min_days`
//! distinct dates. Optional named polygons label the survivors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result, Violation};
use crate::geo::LonLat;
use crate::peaks::{centroid, Peak};
use crate::union_find::single_linkage;

/// Per-period hot-spot average; `value` is `None` when no member peak in the
/// period has data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodAverage {
    pub value: Option<f64>,
    pub n_peaks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HotSpot {
    /// 1-based, in order of descending total support.
    pub id: u32,
    pub name: Option<String>,
    pub centroid: LonLat,
    /// Member peaks in canonical order.
    pub members: Vec<Peak>,
    pub per_period: BTreeMap<String, PeriodAverage>,
}

impl HotSpot {
    pub fn total_support(&self) -> usize {
        self.members.iter().map(|p| p.support).sum()
    }

    pub fn n_days(&self) -> usize {
        self.members.iter().map(|p| p.date).collect::<BTreeSet<_>>().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotSpotParams {
    /// Linking distance between pooled peaks, degrees.
    pub radius: f64,
    /// Minimum number of distinct dates a hot-spot must span.
    pub min_days: usize,
}

impl Default for HotSpotParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            min_days: 5,
        }
    }
}

impl HotSpotParams {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            out.push(Violation::new(format!("{prefix}radius"), format!("must be >= 0 (got {})", self.radius)));
        }
        if self.min_days < 1 {
            out.push(Violation::new(format!("{prefix}min_days"), "must be >= 1 (got 0)"));
        }
        out
    }
}

/// Groups pooled peaks into hot-spots. The result does not depend on the
/// order of `peaks`.
pub fn form_hotspots(peaks: &[Peak], radius: f64, min_days: usize) -> Vec<HotSpot> {
    let mut pooled = peaks.to_vec();
    pooled.sort_by(Peak::canonical_cmp);
    let locations: Vec<LonLat> = pooled.iter().map(Peak::location).collect();

    let mut spots: Vec<HotSpot> = single_linkage(&locations, radius)
        .into_iter()
        .filter_map(|members| {
            let members: Vec<Peak> = members.into_iter().map(|i| pooled[i].clone()).collect();
            let days: BTreeSet<_> = members.iter().map(|p| p.date).collect();
            if days.len() < min_days {
                return None;
            }
            Some(HotSpot {
                id: 0,
                name: None,
                centroid: centroid(members.iter().map(Peak::location)),
                members,
                per_period: BTreeMap::new(),
            })
        })
        .collect();
    spots.sort_by(|a, b| {
        b.total_support()
            .cmp(&a.total_support())
            .then_with(|| b.centroid.lat.total_cmp(&a.centroid.lat))
            .then_with(|| a.centroid.lon.total_cmp(&b.centroid.lon))
    });
    for (k, s) in spots.iter_mut().enumerate() {
        s.id = k as u32 + 1;
    }
    spots
}

/// For every input peak, the id of the hot-spot containing it, if any.
pub fn assignment(peaks: &[Peak], hotspots: &[HotSpot]) -> Vec<Option<u32>> {
    let key = |p: &Peak| (p.date, p.lon.to_bits(), p.lat.to_bits());
    let index: BTreeMap<_, u32> = hotspots
        .iter()
        .flat_map(|h| h.members.iter().map(move |p| (key(p), h.id)))
        .collect();
    peaks.iter().map(|p| index.get(&key(p)).copied()).collect()
}

/// A named polygon with optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub exterior: Vec<LonLat>,
    pub holes: Vec<Vec<LonLat>>,
}

fn ring_area(ring: &[LonLat]) -> f64 {
    let n = ring.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a.lon * b.lat - b.lon * a.lat
        })
        .sum();
    0.5 * twice.abs()
}

/// Even-odd ray casting.
fn ring_contains(ring: &[LonLat], p: LonLat) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
            if p.lon < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl Region {
    pub fn area(&self) -> f64 {
        ring_area(&self.exterior) - self.holes.iter().map(|h| ring_area(h)).sum::<f64>()
    }

    pub fn contains(&self, p: LonLat) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }
}

pub fn load_regions(path: &Path) -> Result<Vec<Region>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_regions(&text, &path.display().to_string())
}

/// Parses a GeoJSON FeatureCollection of Polygon features carrying a
/// `name` property.
pub fn parse_regions(text: &str, source: &str) -> Result<Vec<Region>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::parse(source, e.line(), e.to_string()))?;
    let bad = |msg: String| Error::parse(source, 0, msg);
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("top-level object must be a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("FeatureCollection has no `features` array".into()))?;
    let mut regions = Vec::with_capacity(features.len());
    for (k, f) in features.iter().enumerate() {
        let name = f
            .pointer("/properties/name")
            .and_then(Value::as_str)
            .ok_or_else(|| bad(format!("feature {k} has no string `name` property")))?;
        let geometry = f.get("geometry").ok_or_else(|| bad(format!("feature {k} has no geometry")))?;
        if geometry.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(bad(format!("feature {k} ({name}) is not a Polygon")));
        }
        let rings = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .filter(|r| !r.is_empty())
            .ok_or_else(|| bad(format!("feature {k} ({name}) has no coordinate rings")))?;
        let mut parsed = Vec::with_capacity(rings.len());
        for ring in rings {
            let positions = ring.as_array().ok_or_else(|| bad(format!("feature {k} ({name}): ring is not an array")))?;
            let mut pts = Vec::with_capacity(positions.len());
            for pos in positions {
                let xy = pos
                    .as_array()
                    .filter(|a| a.len() >= 2)
                    .and_then(|a| Some(LonLat::new(a[0].as_f64()?, a[1].as_f64()?)))
                    .ok_or_else(|| bad(format!("feature {k} ({name}): malformed position {pos}")))?;
                pts.push(xy);
            }
            if pts.len() >= 2 && pts.first() == pts.last() {
                pts.pop();
            }
            if pts.len() < 3 {
                return Err(bad(format!("feature {k} ({name}): ring needs at least 3 distinct positions")));
            }
            parsed.push(pts);
        }
        let exterior = parsed.remove(0);
        regions.push(Region {
            name: name.to_string(),
            exterior,
            holes: parsed,
        });
    }
    Ok(regions)
}

/// Names each hot-spot after the region containing its centroid. When
/// several regions contain it the smallest by area wins (first in file order
/// on equal area); outside every region the name stays empty.
pub fn assign_names(hotspots: &mut [HotSpot], regions: Option<&[Region]>) {
    let Some(regions) = regions else {
        for h in hotspots.iter_mut() {
            h.name = None;
        }
        return;
    };
    for h in hotspots.iter_mut() {
        h.name = regions
            .iter()
            .filter(|r| r.contains(h.centroid))
            .fold(None::<&Region>, |best, r| match best {
                Some(b) if b.area() <= r.area() => Some(b),
                _ => Some(r),
            })
            .map(|r| r.name.clone());
    }
}
