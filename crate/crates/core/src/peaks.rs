//! Per-day aerosol peaks: centroids of converged glowworm clusters.

use std::cmp::Ordering;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Violation;
use crate::geo::LonLat;
use crate::gso::SwarmState;
use crate::union_find::single_linkage;

/// One local maximum found on one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub date: NaiveDate,
    pub lon: f64,
    pub lat: f64,
    /// Number of glowworms in the cluster.
    pub support: usize,
    /// Regional mean around the peak, once quantified. `None` is no-data.
    pub regional_value: Option<f64>,
}

impl Peak {
    pub fn location(&self) -> LonLat {
        LonLat::new(self.lon, self.lat)
    }

    /// Canonical order: date, then support descending, then north to south,
    /// then west to east.
    pub fn canonical_cmp(&self, other: &Peak) -> Ordering {
        self.date
            .cmp(&other.date)
            .then_with(|| other.support.cmp(&self.support))
            .then_with(|| other.lat.total_cmp(&self.lat))
            .then_with(|| self.lon.total_cmp(&other.lon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    /// Two worms are linked when at most this far apart, degrees.
    pub link_radius: f64,
    /// Smallest cluster kept as a peak.
    pub min_support: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            link_radius: 0.03,
            min_support: 3,
        }
    }
}

impl PeakParams {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.link_radius >= 0.0 && self.link_radius.is_finite()) {
            out.push(Violation::new(format!("{prefix}link_radius"), format!("must be >= 0 (got {})", self.link_radius)));
        }
        if self.min_support < 1 {
            out.push(Violation::new(format!("{prefix}min_support"), "must be >= 1 (got 0)"));
        }
        out
    }
}

/// Single-linkage clusters of worm positions with their member indices,
/// each member list ascending, clusters ordered by smallest member.
pub fn clusters(positions: &[LonLat], link_radius: f64) -> Vec<Vec<usize>> {
    single_linkage(positions, link_radius)
}

/// Arithmetic mean, accumulated as offsets from the first point so that a
/// cluster of coincident points has exactly that point as its centroid.
pub(crate) fn centroid(mut points: impl Iterator<Item = LonLat>) -> LonLat {
    let Some(origin) = points.next() else {
        return LonLat::new(f64::NAN, f64::NAN);
    };
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 1usize);
    for p in points {
        sx += p.lon - origin.lon;
        sy += p.lat - origin.lat;
        n += 1;
    }
    LonLat::new(origin.lon + sx / n as f64, origin.lat + sy / n as f64)
}

/// Clusters the final swarm and turns every component with at least
/// `min_support` worms into a [`Peak`] at the component's mean position.
/// Output is sorted by support descending, then latitude descending, then
/// longitude ascending.
pub fn extract_peaks(state: &SwarmState, date: NaiveDate, link_radius: f64, min_support: usize) -> Vec<Peak> {
    // Sum members in id order so the centroid bits do not depend on how the
    // state's arrays happen to be ordered.
    let mut peaks: Vec<Peak> = clusters(&state.positions, link_radius)
        .into_iter()
        .filter(|c| c.len() >= min_support.max(1))
        .map(|mut members| {
            members.sort_unstable_by_key(|&i| state.ids[i]);
            let c = centroid(members.iter().map(|&i| state.positions[i]));
            Peak {
                date,
                lon: c.lon,
                lat: c.lat,
                support: members.len(),
                regional_value: None,
            }
        })
        .collect();
    peaks.sort_by(Peak::canonical_cmp);
    peaks
}
