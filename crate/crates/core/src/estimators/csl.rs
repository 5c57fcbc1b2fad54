//! The CSL estimator: `log f̂_S(x) = log mean_{h′∈S} P(x | h′)`.
//!
//! Evaluated in the log domain as `logsumexp_{h′} log P(x | h′) - log |S|`.
//! Repeated latents are grouped, so each distinct `h′` is conditioned once
//! and enters the reduction weighted by its multiplicity.

use std::collections::HashMap;

use rayon::prelude::*;
use serde_json::json;

use super::EvalReport;
use crate::error::{Error, Result};
use crate::math::logsumexp_weighted;
use crate::models::{LatentConditional, LatentState};
use crate::sampler::LatentSampleSet;

/// Distinct latents of S, conditioned once each, with their multiplicities.
pub struct ConditionedSamples<C> {
    conditionals: Vec<C>,
    counts: Vec<f64>,
    total: usize,
}

impl<C: Send + Sync> ConditionedSamples<C> {
    pub fn new<M>(model: &M, samples: &[LatentState]) -> Result<Self>
    where
        M: LatentConditional<Conditional = C>,
    {
        if samples.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        let mut index: HashMap<&LatentState, usize> = HashMap::new();
        let mut unique: Vec<&LatentState> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for h in samples {
            match index.get(h) {
                Some(&i) => counts[i] += 1.0,
                None => {
                    index.insert(h, unique.len());
                    unique.push(h);
                    counts.push(1.0);
                }
            }
        }
        let conditionals = unique
            .par_iter()
            .map(|h| model.condition_on(h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            conditionals,
            counts,
            total: samples.len(),
        })
    }

    pub fn distinct(&self) -> usize {
        self.conditionals.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// `log mean_{h′} P(x | h′)` for one observation.
    pub fn log_mean<M>(&self, model: &M, x: &M::Observation) -> Result<f64>
    where
        M: LatentConditional<Conditional = C>,
    {
        let terms = self
            .conditionals
            .iter()
            .map(|c| model.conditional_log_prob(c, x))
            .collect::<Result<Vec<f64>>>()?;
        let value = logsumexp_weighted(&terms, &self.counts) - (self.total as f64).ln();
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite(format!("CSL log mean ({value})")))
        }
    }
}

/// `log f̂_S(x)` for a single observation.
pub fn csl_log_density<M: LatentConditional>(model: &M, samples: &[LatentState], x: &M::Observation) -> Result<f64> {
    ConditionedSamples::new(model, samples)?.log_mean(model, x)
}

/// CSL estimate for every test example.
pub fn csl<M: LatentConditional>(model: &M, sample_set: &LatentSampleSet, test_set: &[M::Observation]) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let conditioned = ConditionedSamples::new(model, sample_set.samples())?;
    let per_example = test_set
        .par_iter()
        .map(|x| conditioned.log_mean(model, x))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new(
        "csl",
        per_example,
        json!({
            "estimator": "csl",
            "chain": sample_set.provenance(),
            "distinct_latents": conditioned.distinct(),
        }),
        sample_set.len(),
    )
}

/// Infinite-sample limit of CSL: `log Σ_h P(h) P(x | h)` with `P(h)` enumerated exactly.
pub fn csl_exact_expectation<M: LatentConditional>(model: &M, x: &M::Observation) -> Result<f64> {
    model.marginal_by_latent_enumeration(x)
}

/// Exact log-likelihood of every test example.
pub fn exact_log_likelihood_report<M: LatentConditional>(model: &M, test_set: &[M::Observation]) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let per_example = test_set
        .par_iter()
        .map(|x| model.exact_log_likelihood(x))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new("exact", per_example, json!({ "estimator": "exact" }), 0)
}
