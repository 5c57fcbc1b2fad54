//! Latent-variable Markov chains producing the sample set S, plus mixing diagnostics.

mod chain;
mod ess;
pub mod format;

pub use chain::{
    gibbs_step, gmm_sample_latent, gmm_sample_observations, rbm_sample_observations, run_chain, ChainConfig, ChainInit,
    GibbsChain, LatentKind, LatentSampleSet, LatentSampler, DEFAULT_BURN_IN, DEFAULT_THIN,
};
pub use ess::{autocorrelation, effective_sample_size};

use crate::error::Result;
use crate::models::LatentConditional;

/// Effective sample size of each chain's latent-summary series.
pub fn chain_effective_sample_sizes<M: LatentConditional>(model: &M, set: &LatentSampleSet) -> Result<Vec<f64>> {
    set.summary_series(model)?
        .iter()
        .map(|s| effective_sample_size(s))
        .collect()
}
