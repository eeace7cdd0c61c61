//! Index-free subgraph matching over a partitioned, labeled graph.
//!
//! A query is split into STwigs (a root plus its leaf neighbors), each STwig is
//! matched by graph exploration on every partition, candidate bindings are
//! propagated between STwigs, and the per-STwig results are joined on each
//! machine. The head STwig is never fetched remotely, so per-machine answers
//! are disjoint and their union needs no deduplication.

pub mod coordinator;
pub mod decompose;
pub mod error;
pub mod join;
pub mod matcher;
pub mod query;
pub mod score;
pub mod store;
pub mod workbench;

pub use error::{Error, Result};

/// Global data-node identifier.
pub type NodeId = u64;

/// Exact selectivity scores; the default for decomposition.
pub type ExactScore = num_rational::Ratio<u64>;
/// Floating-point selectivity scores.
pub type FloatScore = f64;
