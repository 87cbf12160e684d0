//! Graph-level self-supervised representation learning with a joint-embedding
//! predictive architecture.
//!
//! Graphs are split into patches by a multilevel partitioner, expanded by one
//! hop, embedded with an edge-aware GIN, and a small predictor learns to place
//! each target patch on the unit hyperbola `(cosh a, sinh a)` from a single
//! context patch plus the target's random-walk positional encoding. Frozen
//! embeddings are evaluated with linear probes.
//!
//! See the runnable programs under `examples/` for one walkthrough per
//! capability.

pub mod autodiff;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod graph;
pub mod jepa;
pub mod linalg;
pub mod nn;
pub mod partition;
pub mod posenc;
pub mod probe;
mod error;

pub use error::{Error, Result};
