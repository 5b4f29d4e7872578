//! Synthetic Gaussian-mixture fields with analytically known maxima.
//!
//! These are the ground truth for every accuracy check: in the
//! well-separated regime (modes at least 4 sigma apart) the local maxima of
//! the mixture sit on the mode centers.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::geo::{GridGeometry, LonLat};
use crate::grid::ScalarGrid;

/// One isotropic Gaussian bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub lon: f64,
    pub lat: f64,
    pub amplitude: f64,
    pub sigma: f64,
}

impl Mode {
    pub fn center(&self) -> LonLat {
        LonLat::new(self.lon, self.lat)
    }

    pub fn eval(&self, p: LonLat) -> f64 {
        let d = self.center().distance(p);
        self.amplitude * (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixtureSpec {
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// `[col, row]` cells to mark missing.
    #[serde(default)]
    pub holes: Vec<[usize; 2]>,
}

impl GaussianMixtureSpec {
    pub fn violations(&self, geometry: &GridGeometry, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, m) in self.modes.iter().enumerate() {
            if !(m.amplitude > 0.0 && m.amplitude.is_finite()) {
                out.push(Violation::new(format!("{prefix}modes[{k}].amplitude"), format!("must be > 0 (got {})", m.amplitude)));
            }
            if !(m.sigma > 0.0 && m.sigma.is_finite()) {
                out.push(Violation::new(format!("{prefix}modes[{k}].sigma"), format!("must be > 0 (got {})", m.sigma)));
            }
            if !geometry.bounds.contains(m.center()) {
                out.push(Violation::new(
                    format!("{prefix}modes[{k}]"),
                    format!("center ({}, {}) lies outside the grid bounds", m.lon, m.lat),
                ));
            }
        }
        if !(self.background >= 0.0 && self.background.is_finite()) {
            out.push(Violation::new(format!("{prefix}background"), format!("must be >= 0 (got {})", self.background)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            out.push(Violation::new(format!("{prefix}noise_sigma"), format!("must be >= 0 (got {})", self.noise_sigma)));
        }
        for (k, &[c, r]) in self.holes.iter().enumerate() {
            if c >= geometry.n_cols || r >= geometry.n_rows {
                out.push(Violation::new(format!("{prefix}holes[{k}]"), format!("cell [{c}, {r}] is outside the grid")));
            }
        }
        out
    }

    /// Noise-free mixture value at a position.
    pub fn eval(&self, p: LonLat) -> f64 {
        self.background + self.modes.iter().map(|m| m.eval(p)).sum::<f64>()
    }
}

/// Renders the mixture at every cell center, adds seeded per-cell Gaussian
/// noise in row-major order, then clamps at zero.
pub fn render_mixture(spec: &GaussianMixtureSpec, geometry: &GridGeometry, date: NaiveDate) -> Result<ScalarGrid> {
    let mut violations = geometry.violations("geometry.");
    if violations.is_empty() {
        violations = spec.violations(geometry, "");
    }
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("noise sigma validated"));
    let mut values = Vec::with_capacity(geometry.len());
    for row in 0..geometry.n_rows {
        for col in 0..geometry.n_cols {
            let mut v = spec.eval(geometry.cell_center(col, row));
            if let Some(n) = &noise {
                v += n.sample(&mut rng);
            }
            values.push(v.max(0.0));
        }
    }
    let mut mask = vec![true; geometry.len()];
    for &[c, r] in &spec.holes {
        mask[geometry.index(c, r)] = false;
    }
    ScalarGrid::new(*geometry, values, mask, date)
}

/// Mode centers, provided the modes are pairwise at least `4 * max(sigma)`
/// apart; otherwise the mixture's maxima are not known in closed form.
pub fn true_peaks(spec: &GaussianMixtureSpec) -> Result<Vec<LonLat>> {
    let max_sigma = spec.modes.iter().map(|m| m.sigma).fold(0.0, f64::max);
    let required = 4.0 * max_sigma;
    for (i, a) in spec.modes.iter().enumerate() {
        for (j, b) in spec.modes.iter().enumerate().skip(i + 1) {
            let distance = a.center().distance(b.center());
            if distance < required {
                return Err(Error::Separation {
                    first: i,
                    second: j,
                    distance,
                    required,
                });
            }
        }
    }
    Ok(spec.modes.iter().map(Mode::center).collect())
}
