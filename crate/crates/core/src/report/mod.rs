//! Run artifacts: CSV/JSON files and SVG charts.

pub mod files;
pub mod svg;

pub use svg::{render_cluster_small_multiples, render_elbow, render_som_lattice};
