//! Betweenness centrality estimation by progressive shortest-path sampling.
//!
//! For a graph G = (V, E) with n nodes, the betweenness centrality of v is
//!
//! ```text
//! b(v) = (1 / (n(n-1))) * sum over ordered pairs (s,t), s != v != t, of
//!        sigma_st(v) / sigma_st
//! ```
//!
//! where `sigma_st` counts shortest s-t paths and `sigma_st(v)` those passing
//! through v. Exact computation ([`graph::brandes_exact`]) takes one BFS and
//! one dependency sweep per source, which is O(nm) total; this crate instead
//! estimates every b(v) at once from a random sample of shortest paths, with
//! an explicit probabilistic accuracy certificate.
//!
//! * [`sampler`] draws a uniform ordered pair, runs a balanced bidirectional
//!   BFS, and emits a bag of shortest paths whose empirical internal-node
//!   frequencies are unbiased for b(v).
//! * [`estimator`] folds sample records into running estimates, a Monte Carlo
//!   empirical Rademacher average per variance class, and the moments the
//!   bounds need.
//! * [`bounds`] turns those statistics into sup-deviation bounds: variance-
//!   sensitive deviation `eps`, an a-priori sufficient size, and bounds on
//!   the mean internal-node count of a random shortest path.
//! * [`engine`] runs the two-phase progressive loop for a uniform additive
//!   guarantee: P(sup_v |estimate(v) - b(v)| <= eps) >= 1 - delta.
//! * [`topk`] identifies the k most central nodes to relative error eta.
//! * [`graph`] loads edge lists, houses the exact oracle, and bounds the
//!   vertex diameter.
//!
//! Every random draw flows from one master seed through per-sample RNG
//! streams, so any run is reproducible bit for bit regardless of how many
//! worker threads generate the samples.

pub mod bounds;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod sampler;
pub mod topk;

pub use engine::{run, RunConfig, RunReport, StopReason};
pub use error::{Error, Result};
pub use graph::{brandes_exact, Graph};
pub use topk::{run_topk, TopKConfig, TopKResult};
