//! Latent-conditional models: anything exposing `log P(x | h)` over a latent `h`.

mod binary;
mod gmm;
mod rbm;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use binary::{BinaryVector, LatentState};
pub use gmm::{GmmModel, GmmParams};
pub use rbm::{Layer, RbmModel, RbmParams, VisibleConditional, ENUMERATION_LIMIT};

use crate::error::Result;
use crate::math::LogSumExpAcc;

/// A generative model with an explicit conditional `P(x | h)`.
///
/// Implementors are immutable and shareable across threads.
pub trait LatentConditional: Sync {
    type Observation: Sync;
    /// `P(· | h)` for one fixed latent, in a form cheap to evaluate repeatedly.
    type Conditional: Send + Sync;

    fn condition_on(&self, h: &LatentState) -> Result<Self::Conditional>;

    fn conditional_log_prob(&self, cond: &Self::Conditional, x: &Self::Observation) -> Result<f64>;

    fn log_p_x_given_h(&self, x: &Self::Observation, h: &LatentState) -> Result<f64>;

    /// Exact `log f(x)`; errors when the model is too large to normalize.
    fn exact_log_likelihood(&self, x: &Self::Observation) -> Result<f64>;

    fn validate_latent(&self, h: &LatentState) -> Result<()>;

    /// Scalar summary of a latent state used for chain diagnostics.
    fn latent_summary(&self, h: &LatentState) -> Result<f64>;

    /// Calls `visit(h, log P(h))` for every latent configuration.
    fn visit_latent_prior(&self, visit: &mut dyn FnMut(&LatentState, f64)) -> Result<()>;

    /// `log Σ_h P(h) P(x | h)` by enumeration of the latent prior.
    fn marginal_by_latent_enumeration(&self, x: &Self::Observation) -> Result<f64> {
        let mut acc = LogSumExpAcc::default();
        let mut err = None;
        self.visit_latent_prior(&mut |h, log_p| {
            if err.is_some() {
                return;
            }
            match self.log_p_x_given_h(x, h) {
                Ok(l) => acc.push(log_p + l),
                Err(e) => err = Some(e),
            }
        })?;
        match err {
            Some(e) => Err(e),
            None => Ok(acc.value()),
        }
    }
}

/// Tagged JSON model document: `{"type": "rbm" | "gmm", ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AnyModel {
    Rbm(RbmModel),
    Gmm(GmmModel),
}

impl AnyModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Rbm(_) => "rbm",
            AnyModel::Gmm(_) => "gmm",
        }
    }
}

impl From<RbmModel> for AnyModel {
    fn from(m: RbmModel) -> Self {
        AnyModel::Rbm(m)
    }
}

impl From<GmmModel> for AnyModel {
    fn from(m: GmmModel) -> Self {
        AnyModel::Gmm(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_document_round_trip() {
        let rbm = RbmModel::new(2, 1, vec![0.1, -0.30000000000000004], vec![1e-300, 2.5], vec![-7.0]).unwrap();
        let doc = AnyModel::from(rbm);
        let text = doc.to_json().unwrap();
        assert!(text.contains("\"type\": \"rbm\""));
        let back: AnyModel = serde_json::from_str(&text).unwrap();
        assert_eq!(doc, back);

        let gmm = GmmModel::new(vec![0.0], vec![vec![1.0 / 3.0]], 0.1).unwrap();
        let text = AnyModel::from(gmm.clone()).to_json().unwrap();
        assert!(text.contains("\"type\": \"gmm\""));
        assert_eq!(serde_json::from_str::<AnyModel>(&text).unwrap(), AnyModel::Gmm(gmm));
    }
}
