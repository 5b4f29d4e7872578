//! Glowworm swarm optimization over one day's scalar field.
//!
//! Every valid grid cell seeds one glowworm. Each iteration runs three
//! phases against a start-of-iteration snapshot:
//!
//! 1. luciferin update: `l(t+1) = (1 - rho) l(t) + gamma y(x(t))`
//! 2. movement: each worm picks a brighter neighbor inside its decision range
//!    with probability proportional to the luciferin difference and steps
//!    `s` degrees toward it
//! 3. decision-range update: `r(t+1) = min(r_s, max(0, r(t) + beta (n_t - |N|)))`
//!
//! Neighborhoods and movement targets are all taken from the snapshot, so
//! the result of an iteration does not depend on the order worms are
//! visited. Random draws come from a per-worm stream keyed by
//! `(seed, worm id, iteration)`, which keeps runs bit-reproducible under any
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::geo::{Bounds, LonLat};
use crate::grid::ScalarGrid;
use crate::spatial::SpatialHash;

/// Algorithm constants. Field names follow their role; the conventional
/// GSO symbols are accepted as config aliases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GsoParams {
    /// Luciferin decay constant, rho, in (0, 1).
    #[serde(alias = "rho")]
    pub luciferin_decay: f64,
    /// Luciferin enhancement constant, gamma.
    #[serde(alias = "gamma")]
    pub luciferin_gain: f64,
    /// Decision-range rate, beta, in degrees per neighbor.
    #[serde(alias = "beta")]
    pub range_gain: f64,
    /// Desired neighbor count, n_t.
    #[serde(alias = "n_t")]
    pub neighbor_threshold: u32,
    /// Step size s, degrees.
    #[serde(alias = "s")]
    pub step: f64,
    /// Initial luciferin l_0.
    #[serde(alias = "l_0")]
    pub initial_luciferin: f64,
    /// Hard-limited sensor range r_s, degrees.
    #[serde(alias = "r_s")]
    pub sensor_range: f64,
    /// Initial decision range r_0, degrees.
    #[serde(alias = "r_0")]
    pub initial_range: f64,
    pub iterations: u32,
    pub seed: u64,
}

impl GsoParams {
    pub const DEFAULT: GsoParams = GsoParams {
        luciferin_decay: 0.2,
        luciferin_gain: 0.6,
        range_gain: 0.08,
        neighbor_threshold: 5,
        step: 0.03,
        initial_luciferin: 2.0,
        sensor_range: 0.2,
        initial_range: 0.2,
        iterations: 200,
        seed: 0,
    };

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &str, symbol: &str, bound: &str, value: String| {
            if !ok {
                out.push(Violation::new(
                    format!("{prefix}{field}"),
                    format!("{symbol} must be {bound} (got {value})"),
                ));
            }
        };
        let rho = self.luciferin_decay;
        check(rho > 0.0 && rho < 1.0, "luciferin_decay", "rho", "in (0, 1)", rho.to_string());
        let gamma = self.luciferin_gain;
        check(gamma > 0.0 && gamma.is_finite(), "luciferin_gain", "gamma", "> 0", gamma.to_string());
        let beta = self.range_gain;
        check(beta >= 0.0 && beta.is_finite(), "range_gain", "beta", ">= 0", beta.to_string());
        check(
            self.neighbor_threshold >= 1,
            "neighbor_threshold",
            "n_t",
            ">= 1",
            self.neighbor_threshold.to_string(),
        );
        check(self.step > 0.0 && self.step.is_finite(), "step", "s", "> 0", self.step.to_string());
        let l0 = self.initial_luciferin;
        check(l0 >= 0.0 && l0.is_finite(), "initial_luciferin", "l_0", ">= 0", l0.to_string());
        let rs = self.sensor_range;
        check(rs > 0.0 && rs.is_finite(), "sensor_range", "r_s", "> 0", rs.to_string());
        let r0 = self.initial_range;
        check(
            r0 > 0.0 && r0 <= rs,
            "initial_range",
            "r_0",
            &format!("in (0, r_s = {rs}]"),
            r0.to_string(),
        );
        check(self.iterations >= 1, "iterations", "iterations", ">= 1", self.iterations.to_string());
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
}

impl Default for GsoParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Positions, luciferin and decision ranges of the whole swarm at one
/// iteration. `ids` is each worm's stable identity (its index at
/// initialization) and keys its random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub positions: Vec<LonLat>,
    pub luciferin: Vec<f64>,
    pub ranges: Vec<f64>,
    pub ids: Vec<u32>,
    pub iteration: u32,
}

impl SwarmState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// One worm per valid cell, at the cell center, with `l_0` and `r_0`.
pub fn init_swarm(grid: &ScalarGrid, params: &GsoParams) -> Result<SwarmState> {
    params.validate()?;
    let positions: Vec<LonLat> = grid.valid_cells().map(|(_, _, p, _)| p).collect();
    if positions.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = positions.len();
    Ok(SwarmState {
        positions,
        luciferin: vec![params.initial_luciferin; n],
        ranges: vec![params.initial_range; n],
        ids: (0..n as u32).collect(),
        iteration: 0,
    })
}

/// Luciferin phase. The objective is sampled at each worm's current
/// position; a missing sample counts as zero.
pub fn update_luciferin(state: &SwarmState, grid: &ScalarGrid, params: &GsoParams) -> SwarmState {
    let keep = 1.0 - params.luciferin_decay;
    let luciferin = state
        .positions
        .par_iter()
        .zip(&state.luciferin)
        .map(|(&p, &l)| keep * l + params.luciferin_gain * grid.value_at(p).unwrap_or(0.0))
        .collect();
    SwarmState {
        luciferin,
        ..state.clone()
    }
}

/// Brute-force neighborhood: every other worm strictly inside worm `i`'s
/// decision range and strictly brighter.
pub fn neighbors(state: &SwarmState, i: usize) -> Vec<usize> {
    let p = state.positions[i];
    let (r, l) = (state.ranges[i], state.luciferin[i]);
    (0..state.len())
        .filter(|&j| j != i && p.distance(state.positions[j]) < r && state.luciferin[j] > l)
        .collect()
}

/// Movement probabilities of worm `i` toward each member of its
/// neighborhood: `(l_j - l_i) / sum_k (l_k - l_i)`.
pub fn movement_probabilities(state: &SwarmState, i: usize) -> Vec<(usize, f64)> {
    let nbrs = neighbors(state, i);
    let li = state.luciferin[i];
    let total: f64 = nbrs.iter().map(|&j| state.luciferin[j] - li).sum();
    nbrs.into_iter().map(|j| (j, (state.luciferin[j] - li) / total)).collect()
}

/// Worm data copied into bucket order for cache-friendly scans.
#[derive(Clone, Copy)]
struct Packed {
    pos: LonLat,
    luciferin: f64,
    index: u32,
}

/// Indexed view of a snapshot for neighborhood scans.
struct Snapshot<'a> {
    state: &'a SwarmState,
    hash: SpatialHash,
    packed: Vec<Packed>,
}

impl<'a> Snapshot<'a> {
    fn new(state: &'a SwarmState) -> Self {
        let max_range = state.ranges.iter().copied().fold(0.0, f64::max);
        // Inflated so a full-range query touches only the 3x3 block.
        let hash = SpatialHash::build(&state.positions, max_range * (1.0 + 1e-9), |i| state.ids[i]);
        let packed = hash
            .entries()
            .iter()
            .map(|&e| Packed {
                pos: state.positions[e as usize],
                luciferin: state.luciferin[e as usize],
                index: e,
            })
            .collect();
        Self { state, hash, packed }
    }

    /// Pushes worm `i`'s neighbors, as `(index, luciferin difference)`, onto
    /// `out` in the index's canonical order.
    fn gather(&self, i: usize, out: &mut Vec<(u32, f64)>) {
        out.clear();
        let s = self.state;
        let r = s.ranges[i];
        if r <= 0.0 {
            return;
        }
        let p = s.positions[i];
        let l = s.luciferin[i];
        self.hash.for_each_slot_run(p, r, |run| {
            for w in &self.packed[run] {
                if w.luciferin > l && w.index as usize != i && p.distance(w.pos) < r {
                    out.push((w.index, w.luciferin - l));
                }
            }
        });
    }
}

/// Roulette selection over luciferin differences with uniform draw `u` in
/// [0, 1). Only called for two or more candidates.
fn roulette(candidates: &[(u32, f64)], u: f64) -> usize {
    let total: f64 = candidates.iter().map(|c| c.1).sum();
    let target = u * total;
    let mut acc = 0.0;
    for &(j, diff) in candidates {
        acc += diff;
        if acc > target {
            return j as usize;
        }
    }
    // Rounding can leave acc a hair below target.
    candidates[candidates.len() - 1].0 as usize
}

/// The uniform draw for worm `id` at `iteration`.
pub(crate) fn stream_uniform(seed: u64, id: u32, iteration: u32) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(id));
    rng.set_word_pos(u128::from(iteration) * 16);
    rng.gen::<f64>()
}

/// Result of a movement phase: the moved swarm plus each worm's neighbor
/// count `|N_i(t)|` from the same snapshot, needed by the range update.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    pub state: SwarmState,
    pub neighbor_counts: Vec<u32>,
}

/// Movement phase. Worms with an empty neighborhood, or whose chosen
/// neighbor coincides with them, stay put. New positions are clamped to
/// `bounds`. Ranges and luciferin are carried over unchanged.
pub fn move_step(state: &SwarmState, params: &GsoParams, bounds: &Bounds) -> MoveOutcome {
    let snap = Snapshot::new(state);
    let s = params.step;
    let moves: Vec<(LonLat, u32)> = (0..state.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            snap.gather(i, buf);
            let count = buf.len() as u32;
            let target = match buf.len() {
                0 => None,
                1 => Some(buf[0].0 as usize),
                _ => Some(roulette(buf, stream_uniform(params.seed, state.ids[i], state.iteration))),
            };
            let p = state.positions[i];
            let next = match target {
                Some(j) => {
                    let q = state.positions[j];
                    let d = p.distance(q);
                    if d > 0.0 {
                        bounds.clamp(LonLat::new(p.lon + s * (q.lon - p.lon) / d, p.lat + s * (q.lat - p.lat) / d))
                    } else {
                        p
                    }
                }
                None => p,
            };
            (next, count)
        })
        .collect();
    let (positions, neighbor_counts) = moves.into_iter().unzip();
    MoveOutcome {
        state: SwarmState {
            positions,
            ..state.clone()
        },
        neighbor_counts,
    }
}

/// Neighbor counts of every worm, from the indexed search.
pub fn neighbor_counts(state: &SwarmState) -> Vec<u32> {
    let snap = Snapshot::new(state);
    (0..state.len())
        .into_par_iter()
        .map_init(Vec::new, |buf, i| {
            snap.gather(i, buf);
            buf.len() as u32
        })
        .collect()
}

/// Decision-range phase given the snapshot's neighbor counts.
pub fn update_ranges_with_counts(state: &SwarmState, counts: &[u32], params: &GsoParams) -> SwarmState {
    let nt = f64::from(params.neighbor_threshold);
    let ranges = state
        .ranges
        .iter()
        .zip(counts)
        .map(|(&r, &n)| (r + params.range_gain * (nt - f64::from(n))).max(0.0).min(params.sensor_range))
        .collect();
    SwarmState {
        ranges,
        ..state.clone()
    }
}

/// Decision-range phase with neighborhoods taken from `state` itself.
pub fn update_ranges(state: &SwarmState, params: &GsoParams) -> SwarmState {
    update_ranges_with_counts(state, &neighbor_counts(state), params)
}

/// One full iteration: luciferin, movement, ranges. The range update uses
/// the neighbor counts from the post-luciferin snapshot that drove movement.
pub fn iterate(state: &SwarmState, grid: &ScalarGrid, params: &GsoParams) -> SwarmState {
    let lit = update_luciferin(state, grid, params);
    let MoveOutcome {
        state: moved,
        neighbor_counts,
    } = move_step(&lit, params, grid.bounds());
    let mut next = update_ranges_with_counts(&moved, &neighbor_counts, params);
    next.iteration = state.iteration + 1;
    next
}

/// Runs the configured number of iterations from a fresh swarm.
pub fn run(grid: &ScalarGrid, params: &GsoParams) -> Result<SwarmState> {
    run_traced(grid, params, |_| {})
}

/// Like [`run`], calling `observe` on the initial state and after every
/// iteration.
pub fn run_traced(grid: &ScalarGrid, params: &GsoParams, mut observe: impl FnMut(&SwarmState)) -> Result<SwarmState> {
    let mut state = init_swarm(grid, params)?;
    observe(&state);
    for _ in 0..params.iterations {
        state = iterate(&state, grid, params);
        observe(&state);
    }
    Ok(state)
}
