//! Analogical mapping between two domains of entities.
//!
//! Relations between entity pairs are harvested from configurable sources,
//! compared through phrase embeddings, and a beam search assembles the
//! highest-scoring partial one-to-one mapping.

pub mod cardinality;
pub mod engine;
pub mod error;
pub mod eval;
pub mod mapping;
pub mod model;
pub mod relations;
pub mod render;
pub mod scoring;
pub mod similarity;
pub mod suggest;

pub use engine::{Engine, MapOutcome, RunConfig};
pub use error::{Error, Result};
