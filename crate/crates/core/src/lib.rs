//! Simulation of discretized sqrt(8/3)-Liouville quantum gravity surfaces.
//!
//! The pipeline: sample a Gaussian field on a lattice window, turn it into a
//! regularized LQG area measure and a first-passage-percolation metric graph,
//! sample a Poisson point process with intensity proportional to the measure,
//! tessellate the window into Voronoi cells under the graph metric, run random
//! walks on the cell adjacency graph, compute the Tutte (harmonic) embedding,
//! and check the statistical laws the construction is supposed to satisfy.

pub mod error;
pub mod field;
pub mod grid;
pub mod measure;
pub mod metric;
pub mod rng;
pub mod stats;
pub mod tutte;
pub mod verify;
pub mod voronoi;
pub mod walk;

pub use error::{Error, Result};
pub use field::{Field, FieldKind};
pub use grid::{Grid, Topology};
pub use measure::{AreaMeasure, PointProcess};
pub use metric::{MetricBall, MetricGraph};
pub use rng::RngSeed;
pub use tutte::Embedding;
pub use voronoi::{CellStats, Tessellation};
pub use walk::{PlanarCurve, WalkPath};

/// The fixed LQG coupling constant gamma = sqrt(8/3).
pub const GAMMA: f64 = 1.632993161855452_f64; // sqrt(8/3)

/// Metric weight exponent xi = 1/sqrt(6).
pub const XI: f64 = 0.4082482904638630_f64; // 1/sqrt(6)

/// Q = 2/gamma + gamma/2 = 5/sqrt(6).
pub const Q: f64 = 2.041241452319315_f64; // 5/sqrt(6)
