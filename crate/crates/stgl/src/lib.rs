//! Spatiotemporal graph learning from multichannel recordings.
//!
//! The toolkit estimates one weighted graph per analysis window (which
//! channels move together within that window) and a single graph across
//! windows (which windows resemble each other), by block coordinate descent
//! on a joint smoothness objective over valid combinatorial Laplacians.
//! Around that core sit the pieces needed to run it end to end:
//!
//! - [`graph`] — edge-weight vectors, Laplacians, signal matrices, and the
//!   smoothness quadratic form they share.
//! - [`qp`] — the simplex-constrained quadratic program both subproblems
//!   reduce to, solved by accelerated projected gradient descent.
//! - [`learn`] — subproblem assembly and the outer block-coordinate driver.
//! - [`signal`] / [`filter`] — recordings, zero-phase preprocessing
//!   (notch, bandpass, decimation), and onset-aligned windowing.
//! - [`hvg`], [`pca`], [`logreg`], [`baseline`] — a horizontal visibility
//!   graph feature pipeline with PCA and logistic regression, used as a
//!   per-electrode classification baseline.
//! - [`analysis`] — electrode scoring, top-k classification, per-class
//!   metrics, window dominance, regime contrast, and paired method
//!   comparison via the exact Wilcoxon signed-rank test in [`stats`].
//! - [`synth`] — seeded synthetic recordings with known regime graphs and
//!   a planted community, for recovery experiments.
//! - [`io`] — file formats: recording CSV/binary, annotation sidecars,
//!   Laplacian CSV (dense and edge list), and key-value config text.
//!
//! All randomness flows through explicitly seeded, portable generators;
//! equal seeds give bit-identical outputs.

pub mod analysis;
pub mod baseline;
pub mod filter;
pub mod graph;
pub mod hvg;
pub mod io;
pub mod learn;
pub mod linalg;
pub mod logreg;
pub mod pca;
pub mod qp;
pub mod signal;
pub mod stats;
pub mod synth;

pub use graph::{EdgeWeightVector, GraphLaplacian, SignalMatrix};
pub use learn::{LearnConfig, LearnResult, SweepMode};
pub use signal::{Recording, WindowLabel, WindowedRecording};
