//! Online learning to rank by simulation.
//!
//! The crate provides linear rankers learned from simulated click feedback:
//! dueling bandit gradient descent and its multi-candidate relatives, and a
//! null-space variant that avoids re-exploring recently discouraged directions,
//! preselects candidates the current query can tell apart, and breaks
//! interleaving ties on historically difficult queries.
//!
//! Layout:
//!
//! - [`data`]: LETOR parsing, fold loading, synthetic corpora.
//! - [`ranking`]: linear rankers and ranked lists.
//! - [`gradient`]: direction sampling, null spaces, preselection.
//! - [`interleave`]: team-draft multileaving and credit assignment.
//! - [`click`]: cascade click simulation.
//! - [`metrics`]: NDCG variants and cosine similarity.
//! - [`engine`]: the learning loops.
//! - [`experiment`]: seeded multi-repetition runs and CSV output.

pub mod click;
pub mod data;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod gradient;
pub mod interleave;
pub mod metrics;
pub mod ranking;

pub use error::{Error, Result};
