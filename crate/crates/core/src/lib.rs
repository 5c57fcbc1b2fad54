//! Sample-based log-likelihood estimation for latent-variable generative models.
//!
//! The central estimator is CSL, `log f̂_S(x) = log mean_{h′∈S} P(x | h′)`,
//! computed from latent samples `S` drawn by the model's own Markov chain. It
//! is compared against a Parzen-window baseline, annealed importance sampling,
//! and exact enumeration on models small enough to normalize.
//!
//! - [`models`]: RBM and GMM latent-conditional models with exact oracles.
//! - [`sampler`]: block Gibbs chains, i.i.d. mixture sampling, ESS, `CSLS` files.
//! - [`estimators`]: CSL, biased CSL, Parzen, AIS.
//! - [`training`]: CD/PCD/exact-gradient RBM training and GMM EM.

pub mod error;
pub mod estimators;
pub mod math;
pub mod models;
pub mod rng;
pub mod sampler;
pub mod training;

pub use error::{Error, Result};
pub use estimators::{AisConfig, BiasedCslConfig, EvalReport};
pub use models::{AnyModel, BinaryVector, GmmModel, LatentConditional, LatentState, RbmModel};
pub use sampler::{ChainConfig, ChainInit, LatentSampleSet};
pub use training::{TrainAlgorithm, TrainConfig};
