//! Sparse link-delay estimation for dynamic communication networks.
//!
//! The pipeline: find a maximum matching of the network, grow it into a
//! connected edge set whose line-graph image is a connected dominating set
//! (the hub), measure the hub once plus a batch of random supersets of it,
//! subtract the hub sum so the effective sensing matrix is random binary,
//! recover the non-hub delays with a sparse solver, and read the hub delays
//! directly. Link insertions and deletions are absorbed by a single
//! augmenting-path update instead of recomputing from scratch.

pub mod dynamic;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod hub;
pub mod matching;
pub mod measure;
pub mod recover;

pub use error::{Error, Result};
