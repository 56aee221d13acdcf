//! Directional analysis of spatial point patterns in two and three
//! dimensions: anisotropy simulation, nearest-neighbour and second-order
//! directional summaries, Fry-plot ellipse fitting, spectral and wavelet
//! methods, and isotropy tests.

pub mod archetypes;
pub mod curve;
pub mod error;
pub mod figures;
pub mod fry_ellipse;
pub mod geometry;
pub mod index;
pub mod intensity;
pub mod io;
pub mod kernel;
pub mod manifest;
pub mod nn;
pub mod pattern;
pub mod second_order;
pub mod rng;
pub mod simulate;
pub mod spectral;
pub mod wavelet;

pub use curve::{SummaryCurve, SummaryCurve2D};
pub use error::{Error, Result};
pub use geometry::{CylinderSpec, Direction, DirectionalSet, RectWindow, SectorSpec};
pub use kernel::Kernel;
pub use pattern::PointPattern;
