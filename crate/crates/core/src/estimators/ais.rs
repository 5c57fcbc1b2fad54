//! Annealed importance sampling of an RBM partition function.
//!
//! The path runs from an independent-visible base model (`W = 0`, visible
//! biases `b_A`) to the target. At inverse temperature β the unnormalized
//! visible marginal is
//!
//! ```text
//! log p*_β(v) = ((1 - β) b_A + β b_v)ᵀ v + Σ_j softplus(β (Wᵀv + b_h)_j)
//! ```
//!
//! so the base partition function is `Σ_i softplus(b_A,i) + n_hidden · ln 2`.

use std::f64::consts::LN_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EvalReport;
use crate::error::{Error, Result};
use crate::math::{logsumexp, sigmoid, softplus};
use crate::models::{BinaryVector, RbmModel};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AisSchedule {
    /// β evenly spaced on [0, 1].
    #[default]
    Linear,
    /// Half of the temperatures evenly spaced on [0, ½], the rest geometric from ½ to 1.
    GeometricTail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AisConfig {
    pub n_temperatures: usize,
    pub n_runs: usize,
    #[serde(default)]
    pub schedule: AisSchedule,
    pub seed: u64,
}

impl Default for AisConfig {
    fn default() -> Self {
        Self {
            n_temperatures: 1_000,
            n_runs: 100,
            schedule: AisSchedule::Linear,
            seed: 0,
        }
    }
}

impl AisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_temperatures < 2 {
            return Err(Error::InvalidParameter("AIS needs at least 2 temperatures".into()));
        }
        if self.n_runs == 0 {
            return Err(Error::InvalidParameter("AIS needs at least one run".into()));
        }
        Ok(())
    }

    /// Inverse temperatures β_0 = 0 < … < β_{K-1} = 1.
    pub fn betas(&self) -> Vec<f64> {
        let k = self.n_temperatures;
        match self.schedule {
            AisSchedule::Linear => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
            AisSchedule::GeometricTail => {
                if k < 4 {
                    return (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
                }
                let n_lin = k / 2;
                let n_geo = k - n_lin;
                let mut betas: Vec<f64> = (0..n_lin).map(|i| 0.5 * i as f64 / n_lin as f64).collect();
                betas.extend((0..n_geo).map(|i| 0.5 * 2f64.powf(i as f64 / (n_geo - 1) as f64)));
                *betas.last_mut().expect("nonempty") = 1.0;
                betas
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AisEstimate {
    pub log_z: f64,
    /// Delta-method standard error of `log Ẑ`.
    pub log_std_error: f64,
    pub log_weights: Vec<f64>,
    pub base_log_z: f64,
}

/// Base-rate visible biases: logits of the reference batch's per-unit means
/// clipped to `[0.01, 0.99]`, or zeros without a reference batch.
pub fn base_visible_biases(model: &RbmModel, reference: Option<&[BinaryVector]>) -> Result<Vec<f64>> {
    let n = model.n_visible();
    match reference {
        None => Ok(vec![0.0; n]),
        Some([]) => Err(Error::Empty("AIS reference batch")),
        Some(batch) => {
            let mut means = vec![0.0; n];
            for v in batch {
                crate::error::check_dim("reference vector", n, v.len())?;
                for (m, &b) in means.iter_mut().zip(v.bits()) {
                    *m += b as f64;
                }
            }
            Ok(means
                .into_iter()
                .map(|m| {
                    let p = (m / batch.len() as f64).clamp(0.01, 0.99);
                    (p / (1.0 - p)).ln()
                })
                .collect())
        }
    }
}

struct Path<'a> {
    model: &'a RbmModel,
    base_bias: &'a [f64],
}

impl Path<'_> {
    /// `log p*_β(v)` given the precomputed hidden logits `Wᵀv + b_h`.
    fn log_unnormalized(&self, beta: f64, v: &[u8], hidden_logits: &[f64]) -> f64 {
        let lin: f64 = v
            .iter()
            .zip(self.base_bias)
            .zip(self.model.bias_visible())
            .filter(|((&b, _), _)| b == 1)
            .map(|((_, a), bv)| (1.0 - beta) * a + beta * bv)
            .sum();
        lin + hidden_logits.iter().map(|&u| softplus(beta * u)).sum::<f64>()
    }

    fn run<R: Rng>(&self, betas: &[f64], rng: &mut R) -> f64 {
        let m = self.model;
        let mut v: Vec<u8> = self
            .base_bias
            .iter()
            .map(|&a| (rng.random::<f64>() < sigmoid(a)) as u8)
            .collect();
        let mut h = vec![0u8; m.n_hidden()];
        let mut hidden_logits = vec![0.0; m.n_hidden()];
        let mut visible_logits = vec![0.0; m.n_visible()];
        m.hidden_logits_into(&v, &mut hidden_logits);
        let mut log_w = 0.0;
        for k in 1..betas.len() {
            let beta = betas[k];
            log_w += self.log_unnormalized(beta, &v, &hidden_logits)
                - self.log_unnormalized(betas[k - 1], &v, &hidden_logits);
            if k + 1 == betas.len() {
                break;
            }
            // one Gibbs sweep leaving p_β invariant
            for (hj, &u) in h.iter_mut().zip(&hidden_logits) {
                *hj = (rng.random::<f64>() < sigmoid(beta * u)) as u8;
            }
            m.visible_logits_into(&h, &mut visible_logits);
            // visible_logits = W h + b_v
            for ((vi, &a), &base) in v.iter_mut().zip(&visible_logits).zip(self.base_bias) {
                let logit = beta * a + (1.0 - beta) * base;
                *vi = (rng.random::<f64>() < sigmoid(logit)) as u8;
            }
            m.hidden_logits_into(&v, &mut hidden_logits);
        }
        log_w
    }
}

/// AIS estimate of `log Z`, with visible base rates fit to `reference` when given.
pub fn ais_log_z(model: &RbmModel, config: &AisConfig, reference: Option<&[BinaryVector]>) -> Result<AisEstimate> {
    config.validate()?;
    let base_bias = base_visible_biases(model, reference)?;
    let base_log_z = base_bias.iter().map(|&a| softplus(a)).sum::<f64>() + model.n_hidden() as f64 * LN_2;
    let betas = config.betas();
    let path = Path {
        model,
        base_bias: &base_bias,
    };
    let log_weights: Vec<f64> = (0..config.n_runs)
        .into_par_iter()
        .map(|r| path.run(&betas, &mut stream_rng(config.seed, r as u64)))
        .collect();
    if let Some(r) = log_weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite(format!("AIS log weight of run {r} ({})", log_weights[r])));
    }
    let n = config.n_runs as f64;
    let log_mean = logsumexp(&log_weights) - n.ln();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    let log_std_error = if config.n_runs > 1 {
        let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt() / mean
    } else {
        0.0
    };
    Ok(AisEstimate {
        log_z: log_mean + base_log_z,
        log_std_error,
        log_weights,
        base_log_z,
    })
}

/// Per-example `-F(x) - log Ẑ_AIS`.
pub fn ais_log_likelihood(
    model: &RbmModel,
    test_set: &[BinaryVector],
    config: &AisConfig,
    reference: Option<&[BinaryVector]>,
) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let est = ais_log_z(model, config, reference)?;
    let per_example = test_set
        .iter()
        .map(|x| model.log_likelihood_with_log_z(x, est.log_z))
        .collect::<Result<Vec<_>>>()?;
    EvalReport::new(
        "ais",
        per_example,
        json!({
            "estimator": "ais",
            "config": config,
            "log_z": est.log_z,
            "log_z_std_error": est.log_std_error,
            "base_log_z": est.base_log_z,
        }),
        config.n_runs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rbm(nv: usize, nh: usize, seed: u64, scale: f64) -> RbmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..scale)).collect() };
        let (w, bv, bh) = (draw(nv * nh), draw(nv), draw(nh));
        RbmModel::new(nv, nh, w, bv, bh).unwrap()
    }

    #[test]
    fn identical_endpoints_give_zero_weights() {
        let m = RbmModel::zeros(6, 4).unwrap();
        let est = ais_log_z(&m, &AisConfig { n_temperatures: 50, n_runs: 20, ..Default::default() }, None).unwrap();
        assert!(est.log_weights.iter().all(|&w| w == 0.0));
        assert_eq!(est.log_std_error, 0.0);
        assert!((est.log_z - m.exact_log_z().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn two_temperatures_is_plain_importance_sampling() {
        let m = random_rbm(4, 3, 1, 1.0);
        let cfg = AisConfig { n_temperatures: 2, n_runs: 5, seed: 3, ..Default::default() };
        let est = ais_log_z(&m, &cfg, None).unwrap();
        let base = vec![0.0; 4];
        let path = Path { model: &m, base_bias: &base };
        for (r, &w) in est.log_weights.iter().enumerate() {
            let mut rng = stream_rng(3, r as u64);
            let v: Vec<u8> = (0..4).map(|_| (rng.random::<f64>() < 0.5) as u8).collect();
            let mut u = vec![0.0; 3];
            m.hidden_logits_into(&v, &mut u);
            // w = log p*_1(v) - log p*_0(v), i.e. -F(v) minus the base's unnormalized mass
            let expected = path.log_unnormalized(1.0, &v, &u) - path.log_unnormalized(0.0, &v, &u);
            let vb = BinaryVector::new(v).unwrap();
            assert!((expected - (-m.free_energy(&vb).unwrap() - 3.0 * LN_2)).abs() < 1e-12);
            assert!((w - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn random_rbm_log_z_within_tolerance() {
        let m = random_rbm(6, 5, 21, 1.0);
        let est = ais_log_z(&m, &AisConfig { seed: 4, ..Default::default() }, None).unwrap();
        let exact = m.exact_log_z().unwrap();
        assert!((est.log_z - exact).abs() < 0.1, "{} vs {exact}", est.log_z);
    }

    #[test]
    fn zero_model_likelihood_is_exactly_uniform() {
        let m = RbmModel::zeros(9, 3).unwrap();
        let xs = vec![BinaryVector::zeros(9), BinaryVector::ones(9)];
        let r = ais_log_likelihood(&m, &xs, &AisConfig { n_temperatures: 10, n_runs: 4, ..Default::default() }, None).unwrap();
        for v in r.per_example_loglik {
            assert!((v + 9.0 * LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn base_rates_from_reference() {
        let m = RbmModel::zeros(2, 1).unwrap();
        let batch = vec![BinaryVector::new(vec![1, 0]).unwrap(), BinaryVector::new(vec![1, 1]).unwrap()];
        let b = base_visible_biases(&m, Some(&batch)).unwrap();
        assert!((b[0] - (0.99f64 / 0.01).ln()).abs() < 1e-12);
        assert!(b[1].abs() < 1e-12);
        assert!(base_visible_biases(&m, Some(&[])).is_err());
    }

    #[test]
    fn schedules_are_monotone_and_anchored() {
        for schedule in [AisSchedule::Linear, AisSchedule::GeometricTail] {
            for k in [2, 3, 10, 1000] {
                let b = AisConfig { n_temperatures: k, schedule, ..Default::default() }.betas();
                assert_eq!(b.len(), k);
                assert_eq!(b[0], 0.0);
                assert_eq!(*b.last().unwrap(), 1.0);
                assert!(b.windows(2).all(|w| w[0] < w[1]), "{schedule:?} {k}");
            }
        }
        assert!(AisConfig { n_temperatures: 1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn geometric_tail_with_data_base_rates_is_accurate() {
        let m = random_rbm(6, 5, 22, 1.0);
        let data: Vec<_> = (0..20).map(|c| BinaryVector::from_index(c * 3 % 64, 6)).collect();
        let cfg = AisConfig { schedule: AisSchedule::GeometricTail, seed: 5, ..Default::default() };
        let est = ais_log_z(&m, &cfg, Some(&data)).unwrap();
        assert!((est.log_z - m.exact_log_z().unwrap()).abs() < 0.1);
    }
}
