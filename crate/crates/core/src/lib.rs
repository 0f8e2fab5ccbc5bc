//! Voter model and coalescing random walks on an evolving inhomogeneous
//! random graph.

pub mod coalesce;
pub mod dyngraph;
pub mod engine;
pub mod error;
pub mod fenwick;
pub mod harness;
pub mod localtree;
pub mod model;
pub mod rng;
pub mod stats;
pub mod voter;

pub use error::{Error, Result};
pub use model::{ModelParams, UpdateRate};
