//! Temporal link prediction on co-authorship networks.
//!
//! The crate builds era-windowed graph snapshots from temporal edge lists,
//! classifies edges into continued/new/dropped, generates 2-hop candidate
//! pairs, scores them with topology heuristics, node2vec embeddings,
//! author-metadata features, and an LLM bridge, and evaluates everything
//! with stratified sampling, AUROC, calibration, and agreement analysis.
//!
//! Data-parallel inner loops (candidate generation, batch scoring, walk
//! generation, BFS profiling) run on rayon when the default `parallel`
//! feature is enabled and fall back to sequential code without it.

pub mod candidates;
pub mod community;
pub mod embeddings;
pub mod eras;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod heuristics;
pub mod llm;
pub mod metadata;
pub mod openalex;
pub mod profiles;
pub mod synthetic;

pub use error::{Error, Result};
pub use graph::{AuthorId, GraphSnapshot, IdMap, NodeId, TemporalEdge, YearRange};
