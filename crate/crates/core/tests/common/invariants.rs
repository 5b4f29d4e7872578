//! Property checks shared by the `properties` test target and the
//! acceptance gate. Each check drives its own proptest runner for
//! [`CASES`] generated cases and returns the failure, if any, as text.

use std::collections::BTreeMap;

use aerosol_gso::grid::{parse_dense, ScalarGrid};
use aerosol_gso::gso::{
    self, move_step, movement_probabilities, neighbors, update_luciferin, update_ranges, update_ranges_with_counts,
    GsoParams, SwarmState,
};
use aerosol_gso::hotspots::{form_hotspots, HotSpot, PeriodAverage};
use aerosol_gso::io_render::Projection;
use aerosol_gso::peaks::{clusters, extract_peaks, Peak};
use aerosol_gso::quantify::{hotspot_average, regional_aot, Period};
use aerosol_gso::synth::{render_mixture, GaussianMixtureSpec, Mode};
use aerosol_gso::{Bounds, GridGeometry, LonLat};
use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;

pub type Check = fn() -> Result<(), String>;

/// Every invariant, by name.
pub fn suite() -> Vec<(&'static str, Check)> {
    vec![
        ("probability normalization", probability_normalization),
        ("probability positivity", probability_positivity),
        ("step length in {0, s}", step_length),
        ("range clamp", range_clamp),
        ("luciferin bound", luciferin_bound),
        ("flat-field monotone decay", flat_field_monotone_decay),
        ("swarm permutation invariance", swarm_permutation_invariance),
        ("partition property", partition_property),
        ("centroid containment", centroid_containment),
        ("link-radius merge monotonicity", merge_monotonicity),
        ("hot-spot date-span filter", hotspot_date_span),
        ("hot-spot label stability", hotspot_label_stability),
        ("hot-spot recurrence oracle", hotspot_recurrence_oracle),
        ("mean bounds", mean_bounds),
        ("metric permutation invariance", metric_permutation_invariance),
        ("radius monotonicity of m", radius_monotonicity),
        ("regional average brute-force equivalence", regional_brute_force),
        ("grid round trip", grid_round_trip),
        ("interpolation node identity", interpolation_node_identity),
        ("interpolation convex bounds", interpolation_convex_bounds),
        ("synthetic determinism", synth_determinism),
        ("projection corners and inverse", projection_inverse),
    ]
}

fn check<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config).run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- fixtures

fn luciferin_value() -> impl Strategy<Value = f64> {
    // Discrete levels produce ties; the continuous arm covers the rest.
    prop_oneof![(0u8..6).prop_map(|k| f64::from(k) * 0.37), 0.0..5.0f64]
}

fn swarm(max: usize) -> impl Strategy<Value = SwarmState> {
    (
        prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, luciferin_value(), 0.0..0.35f64), 1..max),
        0u32..1000,
    )
        .prop_map(|(worms, iteration)| SwarmState {
            positions: worms.iter().map(|w| LonLat::new(w.0, w.1)).collect(),
            luciferin: worms.iter().map(|w| w.2).collect(),
            ranges: worms.iter().map(|w| w.3).collect(),
            ids: (0..worms.len() as u32).collect(),
            iteration,
        })
}

fn wide_bounds() -> Bounds {
    Bounds {
        lon_min: -10.0,
        lon_max: 11.0,
        lat_min: -10.0,
        lat_max: 11.0,
    }
}

fn geometry() -> impl Strategy<Value = GridGeometry> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.1..3.0f64, 0.1..3.0f64, 2usize..14, 2usize..14).prop_map(
        |(lon_min, lat_min, w, h, n_cols, n_rows)| GridGeometry {
            bounds: Bounds {
                lon_min,
                lon_max: lon_min + w,
                lat_min,
                lat_max: lat_min + h,
            },
            n_cols,
            n_rows,
        },
    )
}

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 6, 1).unwrap()
}

/// A grid with random values in `[0, 10)` and roughly 80% valid cells, at
/// least one valid.
fn grid() -> impl Strategy<Value = ScalarGrid> {
    geometry().prop_flat_map(|g| {
        let n = g.len();
        (
            Just(g),
            prop::collection::vec(0.0..10.0f64, n),
            prop::collection::vec(prop::bool::weighted(0.8), n),
            0..n,
        )
            .prop_map(|(g, values, mut mask, keep)| {
                mask[keep] = true;
                ScalarGrid::new(g, values, mask, day()).unwrap()
            })
    })
}

fn point_near(b: &Bounds) -> impl Strategy<Value = LonLat> {
    let (w, h) = (b.width(), b.height());
    (b.lon_min - 0.2 * w..b.lon_max + 0.2 * w, b.lat_min - 0.2 * h..b.lat_max + 0.2 * h)
        .prop_map(|(lon, lat)| LonLat::new(lon, lat))
}

fn peak_at(p: LonLat, date: NaiveDate) -> Peak {
    Peak {
        date,
        lon: p.lon,
        lat: p.lat,
        support: 3,
        regional_value: None,
    }
}

/// Independent regional average: visits every cell of the grid.
pub fn brute_force_regional(grid: &ScalarGrid, center: LonLat, radius: f64) -> (usize, Option<f64>) {
    let within: Vec<f64> = grid
        .valid_cells()
        .filter(|(_, _, c, _)| center.distance(*c) <= radius)
        .map(|(_, _, _, v)| v)
        .collect();
    let m = within.len();
    (m, (m > 0).then(|| within.iter().sum::<f64>() / m as f64))
}

fn cross(o: LonLat, a: LonLat, b: LonLat) -> f64 {
    (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon)
}

/// Convex hull (counter-clockwise, no collinear vertices).
fn hull(points: &[LonLat]) -> Vec<LonLat> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.lon.total_cmp(&b.lon).then(a.lat.total_cmp(&b.lat)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<LonLat> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<LonLat> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn segment_distance(p: LonLat, a: LonLat, b: LonLat) -> f64 {
    let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2).clamp(0.0, 1.0)
    };
    p.distance(LonLat::new(a.lon + t * dx, a.lat + t * dy))
}

fn in_hull(p: LonLat, members: &[LonLat], eps: f64) -> bool {
    let h = hull(members);
    match h.len() {
        0 => false,
        1 => p.distance(h[0]) <= eps,
        2 => segment_distance(p, h[0], h[1]) <= eps,
        n => (0..n).all(|k| {
            let (a, b) = (h[k], h[(k + 1) % n]);
            cross(a, b, p) >= -eps * a.distance(b) || segment_distance(p, a, b) <= eps
        }),
    }
}

// ------------------------------------------------------------------- swarm

fn probability_normalization() -> Result<(), String> {
    check(swarm(40), |state| {
        for i in 0..state.len() {
            let probs = movement_probabilities(&state, i);
            if !probs.is_empty() {
                let total: f64 = probs.iter().map(|p| p.1).sum();
                prop_assert!((total - 1.0).abs() <= 1e-12, "worm {i}: sum {total}");
            }
        }
        Ok(())
    })
}

fn probability_positivity() -> Result<(), String> {
    check(swarm(40), |state| {
        for i in 0..state.len() {
            for (j, p) in movement_probabilities(&state, i) {
                prop_assert!(p > 0.0 && p <= 1.0, "p[{i}][{j}] = {p}");
            }
        }
        Ok(())
    })
}

fn step_length() -> Result<(), String> {
    check((swarm(40), 0.001..0.1f64, any::<u64>()), |(state, step, seed)| {
        let params = GsoParams {
            step,
            seed,
            ..GsoParams::default()
        };
        let moved = move_step(&state, &params, &wide_bounds());
        for i in 0..state.len() {
            let d = state.positions[i].distance(moved.state.positions[i]);
            prop_assert!(d == 0.0 || (d - step).abs() <= 1e-12, "worm {i} moved {d}, step {step}");
            if neighbors(&state, i).is_empty() {
                prop_assert!(d == 0.0, "worm {i} has no neighbors but moved");
            }
        }
        Ok(())
    })
}

fn range_clamp() -> Result<(), String> {
    let params = (0.0..0.5f64, 0u32..12, 0.01..0.5f64).prop_map(|(range_gain, neighbor_threshold, sensor_range)| GsoParams {
        range_gain,
        neighbor_threshold,
        sensor_range,
        ..GsoParams::default()
    });
    check((swarm(40), params, prop::collection::vec(0u32..20, 40)), |(state, params, counts)| {
        let counts = &counts[..state.len()];
        for next in [update_ranges_with_counts(&state, counts, &params), update_ranges(&state, &params)] {
            for &r in &next.ranges {
                prop_assert!((0.0..=params.sensor_range).contains(&r), "range {r} outside [0, {}]", params.sensor_range);
            }
        }
        Ok(())
    })
}

fn small_grid() -> impl Strategy<Value = (ScalarGrid, f64)> {
    (2usize..6, 0.01..5.0f64).prop_flat_map(|(n, y_max)| {
        (
            prop::collection::vec(0.0..=1.0f64, n * n),
            prop::collection::vec(prop::bool::weighted(0.85), n * n),
        )
            .prop_map(move |(unit, mut mask)| {
                mask[0] = true;
                let geometry = GridGeometry {
                    bounds: Bounds {
                        lon_min: 0.0,
                        lon_max: 0.5,
                        lat_min: 0.0,
                        lat_max: 0.5,
                    },
                    n_cols: n,
                    n_rows: n,
                };
                let values = unit.iter().map(|u| u * y_max).collect();
                (ScalarGrid::new(geometry, values, mask, day()).unwrap(), y_max)
            })
    })
}

fn dynamics_params() -> impl Strategy<Value = GsoParams> {
    (0.05..0.95f64, 0.05..2.0f64, 0.0..5.0f64, any::<u64>()).prop_map(|(rho, gamma, l0, seed)| GsoParams {
        luciferin_decay: rho,
        luciferin_gain: gamma,
        initial_luciferin: l0,
        seed,
        ..GsoParams::default()
    })
}

fn luciferin_bound() -> Result<(), String> {
    check((small_grid(), dynamics_params()), |((grid, y_max), params)| {
        let bound = params
            .initial_luciferin
            .max(params.luciferin_gain * y_max / params.luciferin_decay);
        let mut state = gso::init_swarm(&grid, &params).unwrap();
        for _ in 0..25 {
            state = gso::iterate(&state, &grid, &params);
            for &l in &state.luciferin {
                prop_assert!(l <= bound * (1.0 + 1e-12), "luciferin {l} above bound {bound}");
            }
        }
        Ok(())
    })
}

fn flat_field_monotone_decay() -> Result<(), String> {
    check((0.0..3.0f64, 2usize..5, dynamics_params()), |(c, n, params)| {
        let geometry = GridGeometry {
            bounds: Bounds {
                lon_min: 0.0,
                lon_max: 1.0,
                lat_min: 0.0,
                lat_max: 1.0,
            },
            n_cols: n,
            n_rows: n,
        };
        let grid = ScalarGrid::new(geometry, vec![c; n * n], vec![true; n * n], day()).unwrap();
        let target = params.luciferin_gain * c / params.luciferin_decay;
        let tol = 1e-12 * (1.0 + target.abs());
        let mut state = gso::init_swarm(&grid, &params).unwrap();
        for _ in 0..60 {
            let next = update_luciferin(&state, &grid, &params);
            for (&before, &after) in state.luciferin.iter().zip(&next.luciferin) {
                let (e0, e1) = (before - target, after - target);
                prop_assert!(e1.abs() <= e0.abs() + tol, "moved away: {before} -> {after}, target {target}");
                prop_assert!(e0 * e1 >= -tol * tol, "overshot: {before} -> {after}, target {target}");
            }
            state = next;
        }
        Ok(())
    })
}

fn permute(state: &SwarmState, perm: &[usize]) -> SwarmState {
    SwarmState {
        positions: perm.iter().map(|&k| state.positions[k]).collect(),
        luciferin: perm.iter().map(|&k| state.luciferin[k]).collect(),
        ranges: perm.iter().map(|&k| state.ranges[k]).collect(),
        ids: perm.iter().map(|&k| state.ids[k]).collect(),
        iteration: state.iteration,
    }
}

fn swarm_permutation_invariance() -> Result<(), String> {
    let strategy = (swarm(40), any::<u64>()).prop_flat_map(|(state, seed)| {
        let n = state.len();
        (Just(state), Just(seed), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    });
    check(strategy, |(state, seed, perm)| {
        let params = GsoParams {
            seed,
            ..GsoParams::default()
        };
        let bounds = Bounds {
            lon_min: 0.0,
            lon_max: 1.0,
            lat_min: 0.0,
            lat_max: 1.0,
        };
        let direct = move_step(&state, &params, &bounds);
        let shuffled = move_step(&permute(&state, &perm), &params, &bounds);
        prop_assert_eq!(&shuffled.state, &permute(&direct.state, &perm));
        let counts: Vec<u32> = perm.iter().map(|&k| direct.neighbor_counts[k]).collect();
        prop_assert_eq!(&shuffled.neighbor_counts, &counts);
        Ok(())
    })
}

// ------------------------------------------------------------------- peaks

fn clumped_points(max: usize) -> impl Strategy<Value = Vec<LonLat>> {
    prop::collection::vec((0.0..0.4f64, 0.0..0.4f64), 1..max)
        .prop_map(|v| v.into_iter().map(|(x, y)| LonLat::new(x, y)).collect())
}

fn partition_property() -> Result<(), String> {
    check((clumped_points(80), 0.0..0.15f64), |(points, radius)| {
        let comps = clusters(&points, radius);
        let mut owner = vec![usize::MAX; points.len()];
        for (c, members) in comps.iter().enumerate() {
            for &i in members {
                prop_assert_eq!(owner[i], usize::MAX, "worm {} in two components", i);
                owner[i] = c;
            }
        }
        prop_assert!(owner.iter().all(|&o| o != usize::MAX), "a worm is in no component");
        // Linked pairs share a component.
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i].distance(points[j]) <= radius {
                    prop_assert_eq!(owner[i], owner[j]);
                }
            }
        }
        Ok(())
    })
}

fn centroid_containment() -> Result<(), String> {
    check((clumped_points(80), 0.0..0.15f64), |(points, radius)| {
        let n = points.len();
        let state = SwarmState {
            positions: points.clone(),
            luciferin: vec![0.0; n],
            ranges: vec![0.0; n],
            ids: (0..n as u32).collect(),
            iteration: 0,
        };
        let comps = clusters(&points, radius);
        let peaks = extract_peaks(&state, day(), radius, 1);
        prop_assert_eq!(peaks.len(), comps.len());
        for p in &peaks {
            let inside = comps.iter().any(|c| {
                let members: Vec<LonLat> = c.iter().map(|&i| points[i]).collect();
                c.len() == p.support && in_hull(p.location(), &members, 1e-12)
            });
            prop_assert!(inside, "peak {:?} outside its members' hull", p.location());
        }
        Ok(())
    })
}

fn merge_monotonicity() -> Result<(), String> {
    check((clumped_points(80), 0.0..0.15f64, 0.0..0.15f64), |(points, a, b)| {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(clusters(&points, large).len() <= clusters(&points, small).len());
        Ok(())
    })
}

// ---------------------------------------------------------------- hotspots

fn pooled_peaks() -> impl Strategy<Value = Vec<Peak>> {
    prop::collection::vec((0.0..0.5f64, 0.0..0.5f64, 0u64..12, 1usize..30, prop::option::of(0.0..3.0f64)), 0..60).prop_map(
        |v| {
            v.into_iter()
                .map(|(lon, lat, d, support, regional_value)| Peak {
                    date: NaiveDate::from_ymd_opt(2017, 12, 25).unwrap().checked_add_days(Days::new(d)).unwrap(),
                    lon,
                    lat,
                    support,
                    regional_value,
                })
                .collect()
        },
    )
}

fn hotspot_date_span() -> Result<(), String> {
    check((pooled_peaks(), 0.0..0.1f64, 1usize..6), |(peaks, radius, min_days)| {
        let spots = form_hotspots(&peaks, radius, min_days);
        for h in &spots {
            prop_assert!(h.n_days() >= min_days);
        }
        let members: usize = spots.iter().map(|h| h.members.len()).sum();
        prop_assert!(members <= peaks.len());
        Ok(())
    })
}

fn hotspot_label_stability() -> Result<(), String> {
    let strategy = (pooled_peaks(), 0.0..0.1f64, 1usize..6).prop_flat_map(|(peaks, r, d)| {
        let shuffled = Just(peaks.clone()).prop_shuffle();
        (Just(peaks), shuffled, Just(r), Just(d))
    });
    check(strategy, |(peaks, shuffled, radius, min_days)| {
        prop_assert_eq!(form_hotspots(&peaks, radius, min_days), form_hotspots(&shuffled, radius, min_days));
        Ok(())
    })
}

fn hotspot_recurrence_oracle() -> Result<(), String> {
    // Sites on a 0.5-degree lattice, peaks jittered by at most 0.01.
    let strategy = (1usize..5, 1usize..4, 0usize..4).prop_flat_map(|(k, min_days, extra_days)| {
        let days = min_days + extra_days;
        (
            Just(k),
            Just(min_days),
            prop::collection::vec((-0.01..0.01f64, -0.01..0.01f64), k * days),
            Just(days),
        )
    });
    check(strategy, |(k, min_days, jitter, days)| {
        let base = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap();
        let mut peaks = Vec::new();
        for site in 0..k {
            for d in 0..days {
                let (jx, jy) = jitter[site * days + d];
                let date = base.checked_add_days(Days::new(d as u64)).unwrap();
                peaks.push(peak_at(LonLat::new(0.5 * site as f64 + jx, jy), date));
            }
        }
        let spots = form_hotspots(&peaks, 0.05, min_days);
        prop_assert_eq!(spots.len(), k);
        for h in &spots {
            prop_assert_eq!(h.members.len(), days);
            let site = (h.centroid.lon / 0.5).round();
            prop_assert!(h.members.iter().all(|p| (p.lon / 0.5).round() == site));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- quantify

fn hotspot_of(members: Vec<Peak>) -> HotSpot {
    HotSpot {
        id: 1,
        name: None,
        centroid: LonLat::new(0.0, 0.0),
        members,
        per_period: BTreeMap::new(),
    }
}

fn mean_bounds() -> Result<(), String> {
    let regional = grid().prop_flat_map(|g| {
        let b = *g.bounds();
        let extent = b.width().max(b.height());
        (Just(g), point_near(&b), 0.0..extent)
    });
    check((regional, pooled_peaks()), |((grid, center, radius), members)| {
        let r = regional_aot(&peak_at(center, grid.date()), &grid, radius).unwrap();
        if let Some(v) = r.value {
            let inside: Vec<f64> = grid
                .valid_cells()
                .filter(|(_, _, c, _)| center.distance(*c) <= radius)
                .map(|(_, _, _, v)| v)
                .collect();
            let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= v && v <= hi, "regional mean {v} outside [{lo}, {hi}]");
        }
        let h = hotspot_of(members);
        for period in [Period::Year, Period::Quarter, Period::Month] {
            let labels: std::collections::BTreeSet<String> = h.members.iter().map(|p| period.label(p.date)).collect();
            for label in labels {
                let values: Vec<f64> = h
                    .members
                    .iter()
                    .filter(|p| period.label(p.date) == label)
                    .filter_map(|p| p.regional_value)
                    .collect();
                let avg = hotspot_average(&h, &label, period);
                prop_assert_eq!(avg.n_peaks, values.len());
                if let Some(v) = avg.value {
                    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(lo <= v && v <= hi, "period mean {v} outside [{lo}, {hi}]");
                }
            }
        }
        Ok(())
    })
}

fn metric_permutation_invariance() -> Result<(), String> {
    let strategy = pooled_peaks().prop_flat_map(|p| (Just(p.clone()), Just(p).prop_shuffle()));
    check(strategy, |(members, shuffled)| {
        let (a, b) = (hotspot_of(members), hotspot_of(shuffled));
        for label in ["2017", "2018"] {
            let (x, y): (PeriodAverage, PeriodAverage) =
                (hotspot_average(&a, label, Period::Year), hotspot_average(&b, label, Period::Year));
            prop_assert_eq!(x.n_peaks, y.n_peaks);
            prop_assert_eq!(x.value.map(f64::to_bits), y.value.map(f64::to_bits));
        }
        Ok(())
    })
}

fn radius_monotonicity() -> Result<(), String> {
    let strategy = grid().prop_flat_map(|g| {
        let b = *g.bounds();
        let extent = b.width().max(b.height());
        (Just(g), point_near(&b), 0.0..extent, 0.0..extent)
    });
    check(strategy, |(grid, center, a, b)| {
        let (small, large) = if a <= b { (a, b) } else { (b, a) };
        let peak = peak_at(center, grid.date());
        let m_small = regional_aot(&peak, &grid, small).unwrap().m;
        let m_large = regional_aot(&peak, &grid, large).unwrap().m;
        prop_assert!(m_small <= m_large, "m({small}) = {m_small} > m({large}) = {m_large}");
        Ok(())
    })
}

fn regional_brute_force() -> Result<(), String> {
    let strategy = grid().prop_flat_map(|g| {
        let b = *g.bounds();
        let extent = b.width().max(b.height());
        (Just(g), point_near(&b), 0.0..extent)
    });
    check(strategy, |(grid, center, radius)| {
        let fast = regional_aot(&peak_at(center, grid.date()), &grid, radius).unwrap();
        let (m, value) = brute_force_regional(&grid, center, radius);
        prop_assert_eq!(fast.m, m);
        match (fast.value, value) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}"),
            (a, b) => prop_assert_eq!(a, b),
        }
        Ok(())
    })
}

// -------------------------------------------------------------------- grid

fn grid_round_trip() -> Result<(), String> {
    check(grid(), |grid| {
        let text = grid.to_dense_string(-9999.0);
        let back = parse_dense(&text, "generated").unwrap();
        prop_assert_eq!(&back, &grid);
        prop_assert_eq!(back.to_dense_string(-9999.0), text);
        Ok(())
    })
}

fn interpolation_node_identity() -> Result<(), String> {
    check(grid(), |grid| {
        for (col, row, center, v) in grid.valid_cells() {
            let got = grid.value_at(center);
            prop_assert_eq!(got.map(f64::to_bits), Some(v.to_bits()), "cell ({}, {})", col, row);
        }
        Ok(())
    })
}

fn interpolation_convex_bounds() -> Result<(), String> {
    let strategy = grid().prop_flat_map(|g| {
        let b = *g.bounds();
        (Just(g), prop::collection::vec((b.lon_min..=b.lon_max, b.lat_min..=b.lat_max), 1..20))
    });
    check(strategy, |(grid, points)| {
        let geo = *grid.geometry();
        for (lon, lat) in points {
            let p = LonLat::new(lon, lat);
            let Some(v) = grid.value_at(p) else { continue };
            let (fx, fy) = geo.fractional_index(p);
            let c0 = (fx.floor().max(0.0) as usize).min(geo.n_cols - 2);
            let r0 = (fy.floor().max(0.0) as usize).min(geo.n_rows - 2);
            let corners: Vec<f64> = [(c0, r0), (c0 + 1, r0), (c0, r0 + 1), (c0 + 1, r0 + 1)]
                .iter()
                .filter_map(|&(c, r)| grid.get(c, r))
                .collect();
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= v && v <= hi, "{v} outside [{lo}, {hi}] at {p:?}");
        }
        Ok(())
    })
}

// ------------------------------------------------------------ synth/render

fn synth_determinism() -> Result<(), String> {
    let spec = (
        prop::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.1..2.0f64, 0.01..0.2f64), 0..4),
        0.0..1.0f64,
        0.0..0.3f64,
        any::<u64>(),
    )
        .prop_map(|(modes, background, noise_sigma, seed)| GaussianMixtureSpec {
            modes: modes
                .into_iter()
                .map(|(lon, lat, amplitude, sigma)| Mode {
                    lon,
                    lat,
                    amplitude,
                    sigma,
                })
                .collect(),
            background,
            noise_sigma,
            seed,
            holes: Vec::new(),
        });
    check((spec, 2usize..12), |(spec, n)| {
        let g = crate::common::unit_square(n);
        let a = render_mixture(&spec, &g, day()).unwrap();
        let b = render_mixture(&spec, &g, day()).unwrap();
        let bits = |s: &ScalarGrid| s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.mask(), b.mask());
        Ok(())
    })
}

fn projection_inverse() -> Result<(), String> {
    let strategy = (geometry(), 64.0..2000.0f64, 64.0..2000.0f64).prop_flat_map(|(g, w, h)| {
        let b = g.bounds;
        (Just(b), Just(w), Just(h), (b.lon_min..=b.lon_max, b.lat_min..=b.lat_max))
    });
    check(strategy, |(bounds, width, height, (lon, lat))| {
        let proj = Projection { bounds, width, height };
        let b = bounds;
        prop_assert_eq!(proj.project(LonLat::new(b.lon_min, b.lat_max)), (0.0, 0.0));
        prop_assert_eq!(proj.project(LonLat::new(b.lon_max, b.lat_min)), (width, height));
        let p = LonLat::new(lon, lat);
        let (x, y) = proj.project(p);
        let back = proj.unproject(x, y);
        prop_assert!(back.distance(p) <= 1e-9, "{p:?} -> ({x}, {y}) -> {back:?}");
        Ok(())
    })
}
