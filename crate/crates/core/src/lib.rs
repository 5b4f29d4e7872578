//! Glowworm swarm optimization for locating aerosol peaks in gridded
//! aerosol optical thickness (AOT) fields, pooling them across days into
//! hot-spots and quantifying the aerosol content around them.
//!
//! The pipeline is: [`grid`] (or [`synth`]) → [`gso`] → [`peaks`] →
//! [`hotspots`] → [`quantify`] → [`io_render`], orchestrated by
//! [`pipeline`] from a [`config::RunConfig`].

pub mod config;
pub mod error;
pub mod geo;
pub mod grid;
pub mod gso;
pub mod hotspots;
pub mod io_render;
pub mod peaks;
pub mod pipeline;
pub mod quantify;
pub mod spatial;
pub mod synth;
mod union_find;

pub use error::{Error, Result, Violation};
pub use geo::{Bounds, GridGeometry, LonLat};
pub use grid::ScalarGrid;
pub use gso::{GsoParams, SwarmState};
pub use hotspots::HotSpot;
pub use peaks::Peak;
