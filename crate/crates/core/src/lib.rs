//! Bayesian community detection in the two-community stochastic block
//! model with unknown community sizes.
//!
//! The crate computes exact posteriors over all `2^(n-1)` community
//! assignments (or samples them by Metropolis for larger graphs), builds
//! credible sets and their Hamming enlargements, and evaluates the
//! finite-sample bounds under which those sets are frequentist confidence
//! sets. The [`experiments`] module checks the bounds by Monte Carlo.

pub mod credconf;
pub mod error;
pub mod experiments;
pub mod mcmc;
pub mod posterior;
pub mod report;
pub mod rng;
pub mod sbm;

pub use credconf::{ConfidenceReport, CredibleSet, Criterion, EnlargedSet, Mode};
pub use error::{Error, Result};
pub use mcmc::{ChainConfig, EmpiricalPosterior};
pub use posterior::{EngineConfig, MassFunction, MassQuery, PosteriorTable};
pub use sbm::{Assignment, Graph, SbmParams, SuffStats};
