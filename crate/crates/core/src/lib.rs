//! Randomized shortest path (RSP) dissimilarities on graphs, and their
//! common multi-view extension (C-RSP).
//!
//! The crate covers the whole pipeline: graph ingest and validation
//! ([`graph`], [`io`]), the single-view dissimilarity ([`rsp`]), view
//! fusion ([`fusion`]), classical MDS ([`embed`]), spectral clustering
//! ([`cluster`]), clustering metrics ([`eval`]), synthetic generators
//! ([`datasets`]) and an end-to-end runner ([`pipeline`]).

pub mod cluster;
pub mod datasets;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod pipeline;
pub mod rsp;

pub use error::{Error, Result};
pub use cluster::ClusterLabels;
pub use graph::{CostMatrix, FeatureMatrix, MultiViewGraph, RspInputs, ViewAffinity};
pub use rsp::{DissimilarityMatrix, RspParams};
