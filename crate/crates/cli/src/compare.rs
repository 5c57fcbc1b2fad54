//! Ranking several models by biased CSL against an exact or AIS reference.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use csl_core::estimators::{AisConfig, BiasedCslConfig};
use csl_core::math::spearman;
use csl_core::AnyModel;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::validation;
use crate::eval;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Exact,
    Ais,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub name: String,
    pub biased_csl: f64,
    pub exact: Option<f64>,
    pub ais: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub biased_csl: BiasedCslConfig,
    pub ais: Option<AisConfig>,
    pub reference: Reference,
    pub models: Vec<ModelScore>,
    /// Spearman correlation of the biased CSL scores with the reference scores.
    pub rank_correlation: f64,
}

impl CompareReport {
    /// `model,biased_csl,exact,ais` rows, five decimals, empty cells when not computed.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.5}")).unwrap_or_default();
        let mut out = String::from("model,biased_csl,exact,ais\n");
        for m in &self.models {
            out.push_str(&format!("{},{:.5},{},{}\n", m.name, m.biased_csl, cell(m.exact), cell(m.ais)));
        }
        out
    }
}

/// Scores every model on `test`. At least one of `exact` and `ais` must be requested;
/// exact is the reference when both are.
pub fn compare_models(
    models: &[(String, AnyModel)],
    test: &Dataset,
    biased: &BiasedCslConfig,
    exact: bool,
    ais: Option<&AisConfig>,
    ais_reference: Option<&Dataset>,
) -> Result<CompareReport> {
    if models.len() < 2 {
        return Err(validation(format!("compare needs at least 2 models, got {}", models.len())));
    }
    if !exact && ais.is_none() {
        return Err(validation("compare needs a reference: request exact and/or AIS"));
    }
    biased.validate()?;
    let dim = eval::model_dim(&models[0].1);
    if let Some((name, m)) = models.iter().find(|(_, m)| eval::model_dim(m) != dim) {
        return Err(validation(format!(
            "model {name} has dimension {}, the first model has {dim}",
            eval::model_dim(m)
        )));
    }
    let mut scores = Vec::with_capacity(models.len());
    for (name, model) in models {
        let ctx = || format!("model {name}");
        let b = eval::biased_csl(model, test, biased).with_context(ctx)?;
        let e = if exact { Some(eval::exact(model, test).with_context(ctx)?.mean_loglik) } else { None };
        let a = match ais {
            Some(cfg) => Some(eval::ais(model, test, cfg, ais_reference).with_context(ctx)?.mean_loglik),
            None => None,
        };
        scores.push(ModelScore { name: name.clone(), biased_csl: b.mean_loglik, exact: e, ais: a });
    }
    let (reference, reference_scores): (Reference, Vec<f64>) = if exact {
        (Reference::Exact, scores.iter().map(|s| s.exact.expect("computed")).collect())
    } else {
        (Reference::Ais, scores.iter().map(|s| s.ais.expect("computed")).collect())
    };
    let biased_scores: Vec<f64> = scores.iter().map(|s| s.biased_csl).collect();
    Ok(CompareReport {
        biased_csl: biased.clone(),
        ais: ais.cloned(),
        reference,
        rank_correlation: spearman(&biased_scores, &reference_scores),
        models: scores,
    })
}

/// Loads models from disk, naming each by its path.
pub fn load_models(paths: &[PathBuf]) -> Result<Vec<(String, AnyModel)>> {
    paths
        .iter()
        .map(|p: &PathBuf| {
            let m = AnyModel::load(Path::new(p)).with_context(|| format!("loading model {}", p.display()))?;
            Ok((p.display().to_string(), m))
        })
        .collect()
}
