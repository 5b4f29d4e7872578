//! Regional AOT around peaks and average AOT over hot-spots.
//!
//! * regional value of a peak: mean of the valid samples whose cell center
//!   lies within `radius` (inclusive) of the peak on the peak's own day;
//! * hot-spot average for a period: unweighted mean of the regional values of
//!   the member peaks dated in that period.
//!
//! No-data is carried as `None` and never folded into a mean as zero.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::grid::ScalarGrid;
use crate::hotspots::{HotSpot, PeriodAverage};
use crate::peaks::Peak;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Year,
    Quarter,
    Month,
}

impl Period {
    /// `2017`, `2017-Q3` or `2017-08`. Labels sort chronologically.
    pub fn label(self, date: NaiveDate) -> String {
        match self {
            Period::Year => format!("{:04}", date.year()),
            Period::Quarter => format!("{:04}-Q{}", date.year(), date.month0() / 3 + 1),
            Period::Month => format!("{:04}-{:02}", date.year(), date.month()),
        }
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "year" => Ok(Period::Year),
            "quarter" => Ok(Period::Quarter),
            "month" => Ok(Period::Month),
            other => Err(format!("unknown period `{other}` (expected year, quarter or month)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantifyParams {
    /// Averaging radius around a peak, degrees.
    pub radius: f64,
    pub period: Period,
}

impl Default for QuantifyParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            period: Period::Year,
        }
    }
}

impl QuantifyParams {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        if self.radius >= 0.0 && self.radius.is_finite() {
            Vec::new()
        } else {
            vec![Violation::new(format!("{prefix}radius"), format!("must be >= 0 (got {})", self.radius))]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionalAverage {
    pub radius: f64,
    /// Number of valid samples inside the radius.
    pub m: usize,
    /// `None` when `m == 0`.
    pub value: Option<f64>,
}

/// Mean of the valid samples within `radius` of the peak. Only the cells in
/// the radius' bounding box are visited, in row-major order.
pub fn regional_aot(peak: &Peak, grid: &ScalarGrid, radius: f64) -> Result<RegionalAverage> {
    if grid.date() != peak.date {
        return Err(Error::DateMismatch {
            grid: grid.date(),
            peak: peak.date,
        });
    }
    let g = grid.geometry();
    let center = peak.location();
    let (fx0, fy0) = g.fractional_index(crate::geo::LonLat::new(center.lon - radius, center.lat + radius));
    let (fx1, fy1) = g.fractional_index(crate::geo::LonLat::new(center.lon + radius, center.lat - radius));
    let clamp_idx = |v: f64, n: usize| -> usize {
        if v <= 0.0 {
            0
        } else {
            (v as usize).min(n - 1)
        }
    };
    let c0 = clamp_idx(fx0.floor() - 1.0, g.n_cols);
    let c1 = clamp_idx(fx1.ceil() + 1.0, g.n_cols);
    let r0 = clamp_idx(fy0.floor() - 1.0, g.n_rows);
    let r1 = clamp_idx(fy1.ceil() + 1.0, g.n_rows);

    let mut sum = 0.0;
    let mut m = 0usize;
    if fx1 >= -1.0 && fy1 >= -1.0 && fx0 <= g.n_cols as f64 && fy0 <= g.n_rows as f64 {
        for row in r0..=r1 {
            for col in c0..=c1 {
                if let Some(v) = grid.get(col, row) {
                    if center.distance(g.cell_center(col, row)) <= radius {
                        sum += v;
                        m += 1;
                    }
                }
            }
        }
    }
    Ok(RegionalAverage {
        radius,
        m,
        value: (m > 0).then(|| sum / m as f64),
    })
}

/// Unweighted mean of the member peaks' regional values in `period_label`.
/// Members without a regional value are skipped. Values are summed in
/// sorted order so member order cannot change the result.
pub fn hotspot_average(hotspot: &HotSpot, period_label: &str, period: Period) -> PeriodAverage {
    let mut values: Vec<f64> = hotspot
        .members
        .iter()
        .filter(|p| period.label(p.date) == period_label)
        .filter_map(|p| p.regional_value)
        .collect();
    values.sort_by(f64::total_cmp);
    PeriodAverage {
        value: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
        n_peaks: values.len(),
    }
}

/// Fills `per_period` for every period in which the hot-spot has members.
pub fn fill_period_averages(hotspot: &mut HotSpot, period: Period) {
    let labels: std::collections::BTreeSet<String> = hotspot.members.iter().map(|p| period.label(p.date)).collect();
    hotspot.per_period = labels
        .into_iter()
        .map(|l| {
            let avg = hotspot_average(hotspot, &l, period);
            (l, avg)
        })
        .collect();
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increase,
    Decrease,
    NoChange,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Increase => "increase",
            Trend::Decrease => "decrease",
            Trend::NoChange => "no-change",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalDelta {
    pub delta: f64,
    pub trend: Trend,
}

/// `average(b) - average(a)`, or `None` when either period has no data.
pub fn temporal_delta(hotspot: &HotSpot, period_a: &str, period_b: &str, period: Period) -> Option<TemporalDelta> {
    let a = hotspot_average(hotspot, period_a, period).value?;
    let b = hotspot_average(hotspot, period_b, period).value?;
    let delta = b - a;
    let trend = if delta > 0.0 {
        Trend::Increase
    } else if delta < 0.0 {
        Trend::Decrease
    } else {
        Trend::NoChange
    };
    Some(TemporalDelta { delta, trend })
}
