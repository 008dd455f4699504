//! Mean-field quantum spin dynamics for the Curie-Weiss model: exact
//! finite-n evolution, permutation-symmetric fast marginals, the
//! single-particle limit, Gibbs states and chaoticity diagnostics.

pub mod binomial;
pub mod chaos_metrics;
pub mod cli;
pub mod curie_weiss;
pub mod error;
pub mod gibbs;
pub mod mean_field;
pub mod qdense;
pub mod states;

pub use error::{Error, Result};
