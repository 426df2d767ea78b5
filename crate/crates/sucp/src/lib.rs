//! Geo-social point-of-interest recommendation.
//!
//! Fuses three signals into one ranking score per user and candidate POI:
//! a social score from personalized PageRank over a graph mixing explicit
//! friendships with check-in similarity, a geographic score from per-user
//! temporal activity centers, and a preference score from static plus
//! per-temporal-slice matrix factorization. Ships with the evaluation
//! harness (chronological splits, Precision/Recall/nDCG@N, paired t-tests)
//! and experiment sweeps over the mixing weight, training sparsity, and
//! friendship-overlap filtering.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geo;
pub mod mf;
pub mod pipeline;
pub mod recommend;
pub mod social;
pub mod synth;

pub use error::{Error, Result};
