//! Uniform bucket index for fixed-radius neighbor queries over 2-D points.
//!
//! Buckets are stored in compressed (CSR) form. Within a bucket, points are
//! ordered by a caller-supplied key, and buckets are visited in row-major
//! order, so the candidate sequence for a query depends only on positions and
//! keys, never on the order in which points were supplied.

use crate::geo::LonLat;

/// Buckets per axis are capped so a tiny radius over a wide extent cannot
/// allocate an enormous table; queries widen their ring to compensate.
const MAX_BUCKETS_PER_AXIS: usize = 2048;

#[derive(Debug, Clone)]
pub struct SpatialHash {
    origin: LonLat,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    entries: Vec<u32>,
}

impl SpatialHash {
    /// Indexes `points` with buckets of side at least `cell` degrees.
    /// `key` fixes the within-bucket visiting order.
    pub fn build<K: Ord>(points: &[LonLat], cell: f64, key: impl Fn(usize) -> K) -> Self {
        let (mut lo, mut hi) = (LonLat::new(f64::INFINITY, f64::INFINITY), LonLat::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo.lon = lo.lon.min(p.lon);
            lo.lat = lo.lat.min(p.lat);
            hi.lon = hi.lon.max(p.lon);
            hi.lat = hi.lat.max(p.lat);
        }
        if points.is_empty() {
            lo = LonLat::default();
            hi = LonLat::default();
        }
        let extent = (hi.lon - lo.lon).max(hi.lat - lo.lat);
        let mut cell = if cell.is_finite() && cell > 0.0 { cell } else { extent };
        cell = cell.max(extent / MAX_BUCKETS_PER_AXIS as f64);
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let nx = (((hi.lon - lo.lon) / cell).floor() as usize + 1).min(MAX_BUCKETS_PER_AXIS + 1);
        let ny = (((hi.lat - lo.lat) / cell).floor() as usize + 1).min(MAX_BUCKETS_PER_AXIS + 1);

        let mut hash = Self {
            origin: lo,
            cell,
            nx,
            ny,
            starts: Vec::new(),
            entries: Vec::new(),
        };
        let mut tagged: Vec<(usize, K, u32)> = points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (bx, by) = hash.bucket_of(p);
                (by * nx + bx, key(i), i as u32)
            })
            .collect();
        tagged.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

        let mut starts = vec![0u32; nx * ny + 1];
        for (b, _, _) in &tagged {
            starts[b + 1] += 1;
        }
        for b in 0..nx * ny {
            starts[b + 1] += starts[b];
        }
        hash.entries = tagged.into_iter().map(|(_, _, i)| i).collect();
        hash.starts = starts;
        hash
    }

    fn bucket_of(&self, p: LonLat) -> (usize, usize) {
        let fx = ((p.lon - self.origin.lon) / self.cell).floor();
        let fy = ((p.lat - self.origin.lat) / self.cell).floor();
        let bx = if fx > 0.0 { (fx as usize).min(self.nx - 1) } else { 0 };
        let by = if fy > 0.0 { (fy as usize).min(self.ny - 1) } else { 0 };
        (bx, by)
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    /// Point indices in bucket order; [`Self::for_each_slot_run`] yields
    /// ranges into this slice.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Calls `f` for every indexed point that may lie within `radius` of `p`
    /// (a superset; callers apply the exact distance predicate).
    pub fn for_each_candidate(&self, p: LonLat, radius: f64, mut f: impl FnMut(usize)) {
        self.for_each_slot_run(p, radius, |run| {
            for &e in &self.entries[run] {
                f(e as usize);
            }
        });
    }

    /// Like [`Self::for_each_candidate`] but hands out contiguous ranges of
    /// [`Self::entries`], one per bucket row, so callers can scan data they
    /// have laid out in the same order.
    pub fn for_each_slot_run(&self, p: LonLat, radius: f64, mut f: impl FnMut(std::ops::Range<usize>)) {
        if self.entries.is_empty() || !(radius >= 0.0) {
            return;
        }
        let ring = (radius / self.cell + 1e-12).ceil() as usize;
        let (bx, by) = self.bucket_of(p);
        let x0 = bx.saturating_sub(ring);
        let x1 = (bx + ring).min(self.nx - 1);
        let y0 = by.saturating_sub(ring);
        let y1 = (by + ring).min(self.ny - 1);
        for y in y0..=y1 {
            let row = y * self.nx;
            // Buckets along a row are contiguous in the CSR layout.
            let start = self.starts[row + x0] as usize;
            let end = self.starts[row + x1 + 1] as usize;
            if start < end {
                f(start..end);
            }
        }
    }
}
