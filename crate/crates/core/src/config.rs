//! Run configuration: one TOML document describing inputs, parameters and
//! outputs. Every parameter section is optional and falls back to the
//! defaults, so a minimal config names only an input and an output
//! directory:
//!
//! ```toml
//! input_dir = "grids"
//! output_dir = "out"
//! ```
//!
//! Synthetic runs replace `input_dir` with a `[geometry]` table and a list
//! of `[[synthetic.days]]`, each a Gaussian mixture for one date.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};
use crate::geo::GridGeometry;
use crate::grid::GridFormat;
use crate::gso::GsoParams;
use crate::hotspots::HotSpotParams;
use crate::io_render::RenderSpec;
use crate::peaks::PeakParams;
use crate::quantify::QuantifyParams;
use crate::synth::{GaussianMixtureSpec, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDay {
    #[serde(deserialize_with = "date_text_or_toml")]
    pub date: NaiveDate,
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub holes: Vec<[usize; 2]>,
}

/// Accepts both `date = "2017-01-01"` and the bare TOML date `date = 2017-01-01`.
fn date_text_or_toml<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<NaiveDate, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Toml(toml::value::Datetime),
    }
    let text = match Repr::deserialize(d)? {
        Repr::Text(s) => s,
        Repr::Toml(dt) => match (dt.date, dt.time) {
            (Some(date), None) => date.to_string(),
            _ => return Err(serde::de::Error::custom("expected a date without time")),
        },
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d").map_err(serde::de::Error::custom)
}

impl SyntheticDay {
    pub fn mixture(&self) -> GaussianMixtureSpec {
        GaussianMixtureSpec {
            modes: self.modes.clone(),
            background: self.background,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            holes: self.holes.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SyntheticInput {
    #[serde(default)]
    pub days: Vec<SyntheticDay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_format: Option<GridFormat>,
    /// Required for point-list and synthetic input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GridGeometry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticInput>,
    #[serde(default)]
    pub gso: GsoParams,
    #[serde(default)]
    pub peaks: PeakParams,
    #[serde(default)]
    pub hotspots: HotSpotParams,
    #[serde(default)]
    pub quantify: QuantifyParams,
    /// GeoJSON polygons used to name hot-spots.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<PathBuf>,
    #[serde(default)]
    pub render: Vec<RenderSpec>,
    #[serde(default)]
    pub trace: bool,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Render specs on their own, as read by the `render` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderFile {
    #[serde(default)]
    pub render: Vec<RenderSpec>,
}

fn toml_error(source: &str, text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map_or(0, |s| text[..s.start.min(text.len())].lines().count().max(1));
    Error::parse(source, line, e.message().to_string())
}

pub fn parse_render_file(text: &str, source: &str) -> Result<RenderFile> {
    toml::from_str(text).map_err(|e| toml_error(source, text, &e))
}

impl RunConfig {
    /// Minimal config with every parameter at its default.
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            output_dir: output_dir.into(),
            input_dir: None,
            input_format: None,
            geometry: None,
            synthetic: None,
            gso: GsoParams::default(),
            peaks: PeakParams::default(),
            hotspots: HotSpotParams::default(),
            quantify: QuantifyParams::default(),
            regions: None,
            render: Vec::new(),
            trace: false,
            base_dir: PathBuf::new(),
        }
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(source, text, &e))
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn format(&self) -> GridFormat {
        self.input_format.unwrap_or(GridFormat::DenseGrid)
    }

    /// Every problem with the config, without touching the filesystem.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match (&self.input_dir, &self.synthetic) {
            (Some(_), Some(_)) => out.push(Violation::new(
                "input_dir",
                "input_dir and synthetic are mutually exclusive; set exactly one",
            )),
            (None, None) => out.push(Violation::new("input_dir", "one of input_dir or synthetic is required")),
            _ => {}
        }
        let needs_geometry = self.synthetic.is_some() || self.format() == GridFormat::PointList;
        match &self.geometry {
            Some(g) => out.extend(g.violations("geometry.")),
            None if needs_geometry => out.push(Violation::new(
                "geometry",
                "required for synthetic and point-list input",
            )),
            None => {}
        }
        if let Some(syn) = &self.synthetic {
            if syn.days.is_empty() {
                out.push(Violation::new("synthetic.days", "must list at least one day"));
            }
            let mut seen = BTreeSet::new();
            for (k, day) in syn.days.iter().enumerate() {
                if !seen.insert(day.date) {
                    out.push(Violation::new(format!("synthetic.days[{k}].date"), format!("duplicate date {}", day.date)));
                }
                if let Some(g) = &self.geometry {
                    out.extend(day.mixture().violations(g, &format!("synthetic.days[{k}].")));
                    if day.holes.len() >= g.len() {
                        out.push(Violation::new(format!("synthetic.days[{k}].holes"), "every cell is a hole"));
                    }
                }
            }
        }
        out.extend(self.gso.violations("gso."));
        out.extend(self.peaks.violations("peaks."));
        out.extend(self.hotspots.violations("hotspots."));
        out.extend(self.quantify.violations("quantify."));
        let mut files = BTreeSet::new();
        for (k, r) in self.render.iter().enumerate() {
            out.extend(r.violations(&format!("render[{k}].")));
            if !files.insert(r.file.clone()) {
                out.push(Violation::new(format!("render[{k}].file"), format!("duplicate output file {}", r.file)));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// SHA-256 over every field that affects results. The output location,
    /// trace flag and the config file's own location are excluded, and
    /// synthetic days are taken in date order since list order is irrelevant.
    pub fn semantic_hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.output_dir = PathBuf::new();
        semantic.trace = false;
        semantic.input_format = Some(self.format());
        if let Some(syn) = &mut semantic.synthetic {
            syn.days.sort_by_key(|d| d.date);
        }
        let json = serde_json::to_string(&semantic).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
