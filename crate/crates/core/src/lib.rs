//! Concept-based problem embeddings for math-problem retrieval.
//!
//! The pipeline has two steps. The *abstraction* step maps a problem's raw
//! text to a set of concept labels via regex rules ([`corpus`]). The
//! *embedding* step trains skip-gram vectors over concept co-occurrence
//! ([`concept_embed`]) and composes per-problem vectors from them with
//! inverse-frequency weighting ([`prob_embed`]). Everything else supports the
//! comparison: word-averaging / SIF / SVD-PPMI baselines ([`baselines`]), the
//! triplet similarity test ([`triplet_eval`]), and an imbalanced-classification
//! laboratory with negative and one-shot pre-training ([`imbalanced`]).

pub mod baselines;
pub mod concept_embed;
pub mod corpus;
pub mod error;
pub mod imbalanced;
pub mod linalg;
pub mod prob_embed;
pub mod triplet_eval;

pub use error::{Error, Result};
