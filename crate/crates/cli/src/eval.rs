//! Estimator dispatch over [`AnyModel`] and [`Dataset`].

use anyhow::Result;
use csl_core::estimators::{self, AisConfig, BiasedCslConfig, EvalReport};
use csl_core::models::ENUMERATION_LIMIT;
use csl_core::rng::derive_seed;
use csl_core::sampler::{gmm_sample_observations, rbm_sample_observations, LatentSampler};
use csl_core::{AnyModel, BinaryVector, ChainConfig, LatentSampleSet};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::validation;

/// Parzen bandwidth: fixed, or chosen on a validation set over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    Fixed(f64),
    Select { grid: Vec<f64> },
}

pub fn check_dims(model: &AnyModel, data: &Dataset, what: &str) -> Result<()> {
    let dim = model_dim(model);
    if data.dim() != dim {
        return Err(validation(format!("{what} has dimension {}, model expects {dim}", data.dim())));
    }
    Ok(())
}

pub fn model_dim(model: &AnyModel) -> usize {
    match model {
        AnyModel::Rbm(m) => m.n_visible(),
        AnyModel::Gmm(g) => g.dim(),
    }
}

/// Whether exact evaluation is possible for `model`.
pub fn is_enumerable(model: &AnyModel) -> bool {
    match model {
        AnyModel::Rbm(m) => m.n_visible().min(m.n_hidden()) <= ENUMERATION_LIMIT,
        AnyModel::Gmm(_) => true,
    }
}

pub fn sample_latents(model: &AnyModel, config: &ChainConfig) -> Result<LatentSampleSet> {
    Ok(match model {
        AnyModel::Rbm(m) => m.sample_latents(config)?,
        AnyModel::Gmm(g) => g.sample_latents(config)?,
    })
}

fn binary_test<'a>(model: &AnyModel, test: &'a Dataset) -> Result<&'a [BinaryVector]> {
    check_dims(model, test, "test set")?;
    test.binary_rows()
}

fn real_test(model: &AnyModel, test: &Dataset) -> Result<Vec<Vec<f64>>> {
    check_dims(model, test, "test set")?;
    Ok(test.as_real())
}

pub fn csl(model: &AnyModel, set: &LatentSampleSet, test: &Dataset) -> Result<EvalReport> {
    Ok(match model {
        AnyModel::Rbm(m) => estimators::csl(m, set, binary_test(model, test)?)?,
        AnyModel::Gmm(g) => estimators::csl(g, set, &real_test(model, test)?)?,
    })
}

pub fn exact(model: &AnyModel, test: &Dataset) -> Result<EvalReport> {
    Ok(match model {
        AnyModel::Rbm(m) => estimators::exact_log_likelihood_report(m, binary_test(model, test)?)?,
        AnyModel::Gmm(g) => estimators::exact_log_likelihood_report(g, &real_test(model, test)?)?,
    })
}

pub fn biased_csl(model: &AnyModel, test: &Dataset, config: &BiasedCslConfig) -> Result<EvalReport> {
    Ok(estimators::biased_csl_any(model, binary_test(model, test)?, config)?)
}

pub fn ais(model: &AnyModel, test: &Dataset, config: &AisConfig, reference: Option<&Dataset>) -> Result<EvalReport> {
    let AnyModel::Rbm(m) = model else {
        return Err(validation("AIS is implemented for RBMs only"));
    };
    let reference = match reference {
        Some(r) => {
            check_dims(model, r, "AIS reference set")?;
            Some(r.binary_rows()?)
        }
        None => None,
    };
    Ok(estimators::ais_log_likelihood(m, binary_test(model, test)?, config, reference)?)
}

/// Observations `x′ ~ P(x | h′)` for every latent sample, as real vectors.
pub fn generated_observations(model: &AnyModel, set: &LatentSampleSet, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(match model {
        AnyModel::Rbm(m) => rbm_sample_observations(m, set, seed)?
            .iter()
            .map(|b| b.bits().iter().map(|&v| v as f64).collect())
            .collect(),
        AnyModel::Gmm(g) => gmm_sample_observations(g, set, seed)?,
    })
}

/// Parzen test log density from observations generated out of `set`.
pub fn parzen(
    model: &AnyModel,
    set: &LatentSampleSet,
    test: &Dataset,
    bandwidth: &Bandwidth,
    validation_set: Option<&Dataset>,
    seed: u64,
) -> Result<EvalReport> {
    check_dims(model, test, "test set")?;
    let generated = generated_observations(model, set, derive_seed(seed, 1))?;
    let (sigma, selection) = match bandwidth {
        Bandwidth::Fixed(s) => (*s, None),
        Bandwidth::Select { grid } => {
            let val = validation_set.ok_or_else(|| validation("bandwidth selection needs a validation set"))?;
            check_dims(model, val, "validation set")?;
            let sel = estimators::select_bandwidth(&generated, &val.as_real(), grid)?;
            (sel.sigma, Some(sel))
        }
    };
    let mut report = estimators::parzen_report(&generated, sigma, &test.as_real())?;
    if let serde_json::Value::Object(map) = &mut report.config_snapshot {
        map.insert("chain".into(), serde_json::to_value(set.provenance())?);
        map.insert("observation_seed".into(), derive_seed(seed, 1).into());
        if let Some(sel) = selection {
            map.insert("bandwidth_selection".into(), serde_json::to_value(sel)?);
        }
    }
    Ok(report)
}
