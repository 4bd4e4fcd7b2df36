//! Synthetic benchmarks for causal structure learning.
//!
//! Simulate additive-noise structural causal models over random DAGs, run
//! reference structure learners, score their estimates with six normalized
//! graph metrics and fold those into a single distance-to-optimum score.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common use. The experiment harness works in
//! `f64`.

pub mod discovery;
pub mod dos;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod scalar;
pub mod scm;

pub use error::{Error, Result};
pub use graph::{Dag, Digraph, GraphKind, GraphSpec, NodeOrder};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Dataset64 = scm::Dataset<f64>;
pub type Dataset32 = scm::Dataset<f32>;
pub type WeightedAdjacency64 = scm::WeightedAdjacency<f64>;
pub type WeightedAdjacency32 = scm::WeightedAdjacency<f32>;
pub type MetricVector64 = metrics::MetricVector<f64>;
pub type MetricVector32 = metrics::MetricVector<f32>;
pub type DosScore64 = dos::DosScore<f64>;
pub type DiscoveryResult64 = discovery::DiscoveryResult<f64>;
