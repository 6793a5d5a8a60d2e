//! Vertex nomination on pairs of graphs.
//!
//! Given two graphs with a partially shared vertex set and a set of vertices
//! of interest in the first graph, a nomination scheme ranks the (obfuscated)
//! vertices of the second graph so that the counterparts of the vertices of
//! interest concentrate at the top of the list.
//!
//! This crate provides:
//!
//! * graph primitives with relabeling/obfuscation and small-graph
//!   automorphism machinery ([`graph`], [`orbits`], [`scheme`]),
//! * random-graph generators: SBMs, correlated SBM pairs, nominatable pairs
//!   and block-attachment instances ([`models`]),
//! * a random edge adversary with its induced block rate law ([`adversary`]),
//! * the spectral nomination pipeline: adjacency spectral embedding, scree
//!   elbow dimension selection, seeded Procrustes alignment, Gaussian mixture
//!   clustering and Mahalanobis ranking ([`embedding`], [`gmm`],
//!   [`nomination`]),
//! * degree trimming regularization with modularity-driven parameter
//!   selection ([`regularization`]),
//! * recall/precision losses, performance curves and a Monte Carlo harness
//!   ([`evaluation`]),
//! * an exact Bayes-optimal scheme on enumerable graph-pair spaces
//!   ([`oracle`]),
//! * an experiment runner with a flat config format and replayable manifests
//!   ([`config`], [`runner`]).

pub mod adversary;
pub mod config;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod gmm;
pub mod graph;
pub mod linalg;
pub mod models;
pub mod nomination;
pub mod oracle;
pub mod orbits;
mod par;
pub mod regularization;
pub mod rng;
pub mod runner;
pub mod scheme;

pub use error::{Error, Result};
pub use graph::{Graph, Obfuscation};
