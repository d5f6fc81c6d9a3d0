//! Sample-complexity laboratory for learning the structure of small boolean
//! Bayesian networks under MDL/BIC scoring.
//!
//! The crate is organised bottom-up:
//!
//! - [`bn`]: DAGs, conditional tables, exact joint distributions, sampling.
//! - [`graphs`]: DAG and Markov-equivalence-class enumeration, complete graphs.
//! - [`divergence`]: entropies, mutual information, M- and I-projections.
//! - [`scoring`]: likelihoods, MDL scores, exhaustive structure search.
//! - [`errorlab`]: Monte Carlo, importance sampling and exact error probabilities.
//! - [`bounds`]: closed-form bound and asymptote evaluators.
//! - [`experiment`]: configuration, presets and result files.
//!
//! All information quantities are in bits.

pub mod bn;
pub mod bounds;
pub mod divergence;
mod error;
pub mod errorlab;
pub mod experiment;
pub mod format;
pub mod graphs;
pub mod optim;
mod par;
pub mod scoring;
pub mod stats;
mod table;

pub use bn::{BayesNet, Dag, JointDistribution, Parametrization, SampleCounts};
pub use error::{Error, Result};
