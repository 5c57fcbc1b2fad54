//! Mixture of isotropic Gaussians sharing one standard deviation.
//!
//! The component index is the latent variable; `P(x | k) = N(x; μ_k, σ² I)`.

use serde::{Deserialize, Serialize};

use super::{LatentConditional, LatentState};
use crate::error::{check_dim, Error, Result};
use crate::math::{isotropic_normal_log_density, logsumexp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GmmParams", into = "GmmParams")]
pub struct GmmModel {
    n_components: usize,
    dim: usize,
    log_weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    sigma: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmParams {
    pub n_components: usize,
    pub dim: usize,
    pub log_weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl TryFrom<GmmParams> for GmmModel {
    type Error = Error;
    fn try_from(p: GmmParams) -> Result<Self> {
        GmmModel::new(p.log_weights, p.means, p.sigma)
    }
}

impl From<GmmModel> for GmmParams {
    fn from(m: GmmModel) -> Self {
        GmmParams {
            n_components: m.n_components,
            dim: m.dim,
            log_weights: m.log_weights,
            means: m.means,
            sigma: m.sigma,
        }
    }
}

impl GmmModel {
    /// `log_weights` must already be log-normalized (logsumexp = 0 within 1e-10).
    pub fn new(log_weights: Vec<f64>, means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let n_components = log_weights.len();
        if n_components == 0 {
            return Err(Error::InvalidParameter("GMM needs at least one component".into()));
        }
        check_dim("GMM means", n_components, means.len())?;
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("GMM dimension must be positive".into()));
        }
        for m in &means {
            check_dim("GMM mean", dim, m.len())?;
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if means.iter().flatten().chain(&log_weights).any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::NonFinite("GMM parameters".into()));
        }
        let norm = logsumexp(&log_weights);
        if (norm).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "log weights are not normalized (logsumexp = {norm:e})"
            )));
        }
        Ok(Self {
            n_components,
            dim,
            log_weights,
            means,
            sigma,
        })
    }

    /// Builds from unnormalized positive weights.
    pub fn from_weights(weights: &[f64], means: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
        }
        let logs: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let norm = logsumexp(&logs);
        Self::new(logs.iter().map(|l| l - norm).collect(), means, sigma)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn log_p_x_given_component(&self, x: &[f64], k: usize) -> Result<f64> {
        check_dim("observation", self.dim, x.len())?;
        if k >= self.n_components {
            return Err(Error::InvalidParameter(format!(
                "component {k} out of range for {} components",
                self.n_components
            )));
        }
        Ok(isotropic_normal_log_density(x, &self.means[k], self.sigma))
    }

    /// `log Σ_k w_k N(x; μ_k, σ² I)`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim("observation", self.dim, x.len())?;
        let terms: Vec<f64> = (0..self.n_components)
            .map(|k| self.log_weights[k] + isotropic_normal_log_density(x, &self.means[k], self.sigma))
            .collect();
        Ok(logsumexp(&terms))
    }
}

impl LatentConditional for GmmModel {
    type Observation = Vec<f64>;
    type Conditional = usize;

    fn condition_on(&self, h: &LatentState) -> Result<usize> {
        self.validate_latent(h)?;
        Ok(h.as_component().expect("validated"))
    }

    fn conditional_log_prob(&self, k: &usize, x: &Vec<f64>) -> Result<f64> {
        self.log_p_x_given_component(x, *k)
    }

    fn log_p_x_given_h(&self, x: &Vec<f64>, h: &LatentState) -> Result<f64> {
        match h {
            LatentState::Component(k) => self.log_p_x_given_component(x, *k),
            LatentState::Binary(_) => Err(Error::InvalidParameter(
                "GMM requires a component index latent".into(),
            )),
        }
    }

    fn exact_log_likelihood(&self, x: &Vec<f64>) -> Result<f64> {
        self.log_density(x)
    }

    fn validate_latent(&self, h: &LatentState) -> Result<()> {
        match h {
            LatentState::Component(k) if *k < self.n_components => Ok(()),
            _ => Err(Error::InvalidParameter(format!(
                "latent {h:?} invalid for a {}-component GMM",
                self.n_components
            ))),
        }
    }

    /// Negative log mixture weight of the component.
    fn latent_summary(&self, h: &LatentState) -> Result<f64> {
        self.validate_latent(h)?;
        Ok(-self.log_weights[h.as_component().expect("validated")])
    }

    fn visit_latent_prior(&self, visit: &mut dyn FnMut(&LatentState, f64)) -> Result<()> {
        for (k, &lw) in self.log_weights.iter().enumerate() {
            visit(&LatentState::Component(k), lw);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn standard_normal_at_mode() {
        let m = GmmModel::new(vec![0.0], vec![vec![0.0]], 1.0).unwrap();
        let lp = m.log_p_x_given_h(&vec![0.0], &LatentState::Component(0)).unwrap();
        assert!((lp + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
        assert!((lp - (-0.91894)).abs() < 1e-5);
        // single component: exact likelihood is the conditional itself
        assert_eq!(m.exact_log_likelihood(&vec![0.0]).unwrap(), lp);
        assert_eq!(m.exact_log_likelihood(&vec![1.7]).unwrap(), m.log_p_x_given_component(&[1.7], 0).unwrap());
    }

    #[test]
    fn symmetric_two_component_mixture() {
        let m = GmmModel::from_weights(&[1.0, 1.0], vec![vec![-1.0], vec![1.0]], 1.0).unwrap();
        let ll = m.exact_log_likelihood(&vec![0.0]).unwrap();
        let oracle = ((-0.5f64).exp() / (2.0 * PI).sqrt()).ln();
        assert!((ll - oracle).abs() < 1e-14);
        assert!((ll - (-1.41894)).abs() < 1e-5);
    }

    #[test]
    fn density_may_exceed_one() {
        let m = GmmModel::new(vec![0.0], vec![vec![0.0]], 0.01).unwrap();
        assert!(m.log_density(&[0.0]).unwrap() > 0.0);
    }

    #[test]
    fn validates_parameters() {
        assert!(GmmModel::new(vec![0.0], vec![vec![0.0]], 0.0).is_err());
        assert!(GmmModel::new(vec![0.0, 0.0], vec![vec![0.0], vec![1.0]], 1.0).is_err());
        assert!(GmmModel::new(vec![0.0], vec![vec![0.0, 1.0]], 1.0).unwrap().log_density(&[0.0]).is_err());
        let m = GmmModel::new(vec![0.0], vec![vec![0.0]], 1.0).unwrap();
        assert!(m.log_p_x_given_h(&vec![0.0], &LatentState::Component(1)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = GmmModel::from_weights(&[0.1, 0.2, 0.7], vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![-1.0, 0.25]], 0.3).unwrap();
        let back: GmmModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }
}
