//! Spanning tree covers for graphs of low doubling dimension, plus the
//! routing scheme and path-reporting distance oracle built on top.
//!
//! Pipeline: [`graph`] → [`hpf`] (hierarchical partition families) →
//! [`preservable`] (per-cluster path sets and sketch graphs) → [`cover`]
//! (recursive tree construction) → [`oracle`] and [`routing`].

pub mod graph;

pub use graph::{Edge, EdgeId, GraphError, Path, WeightedGraph, TOL};
pub mod hpf;
pub mod cover;
pub mod oracle;
pub mod preservable;
pub mod routing;
