use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{sigmoid, softplus};
use crate::models::{BinaryVector, Layer, RbmModel};
use crate::rng::stream_rng;
use crate::sampler::GibbsChain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainAlgorithm {
    /// Contrastive divergence: the negative chain restarts at the batch.
    Cd,
    /// Persistent contrastive divergence: one fantasy chain per batch slot.
    Pcd,
    /// Full-batch ascent on the exact log-likelihood gradient (enumerable models only).
    ExactGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: TrainAlgorithm,
    /// Gibbs steps per update for CD and PCD.
    pub k: usize,
    pub learning_rate: f64,
    pub n_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: TrainAlgorithm::Cd,
            k: 1,
            learning_rate: 0.05,
            n_epochs: 10,
            batch_size: 20,
            seed: 0,
            weight_init_scale: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "k, n_epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be positive".into()));
        }
        if !(self.weight_init_scale >= 0.0 && self.weight_init_scale.is_finite()) {
            return Err(Error::InvalidParameter("weight init scale must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Weights i.i.d. uniform on `[-scale, scale]`, biases zero.
pub fn init_rbm(n_visible: usize, n_hidden: usize, seed: u64, scale: f64) -> Result<RbmModel> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("init scale must be nonnegative, got {scale}")));
    }
    let mut rng = stream_rng(seed, 0);
    let weights = (0..n_visible * n_hidden)
        .map(|_| if scale == 0.0 { 0.0 } else { rng.random_range(-scale..=scale) })
        .collect();
    RbmModel::new(n_visible, n_hidden, weights, vec![0.0; n_visible], vec![0.0; n_hidden])
}

/// Gradient (or sufficient-statistic expectation) in the RBM's parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub weights: Vec<f64>,
    pub bias_visible: Vec<f64>,
    pub bias_hidden: Vec<f64>,
}

impl RbmGradient {
    fn zeros(model: &RbmModel) -> Self {
        Self {
            weights: vec![0.0; model.n_visible() * model.n_hidden()],
            bias_visible: vec![0.0; model.n_visible()],
            bias_hidden: vec![0.0; model.n_hidden()],
        }
    }

    /// Accumulates `weight · (v ⊗ h, v, h)` for real-valued unit activations.
    fn add_outer(&mut self, weight: f64, v: &[f64], h: &[f64]) {
        let nh = h.len();
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let row = &mut self.weights[i * nh..(i + 1) * nh];
            for (g, &hj) in row.iter_mut().zip(h) {
                *g += weight * vi * hj;
            }
            self.bias_visible[i] += weight * vi;
        }
        for (g, &hj) in self.bias_hidden.iter_mut().zip(h) {
            *g += weight * hj;
        }
    }

    fn sub_assign(&mut self, other: &RbmGradient) {
        for (a, b) in self
            .weights
            .iter_mut()
            .chain(self.bias_visible.iter_mut())
            .chain(self.bias_hidden.iter_mut())
            .zip(other.weights.iter().chain(&other.bias_visible).chain(&other.bias_hidden))
        {
            *a -= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(&self.bias_visible).chain(&self.bias_hidden)
    }
}

fn bits_as_f64(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| b as f64).collect()
}

/// Positive phase: `mean_data (v σ(Wᵀv + b_h)ᵀ, v, σ(Wᵀv + b_h))`.
fn data_expectation(model: &RbmModel, batch: &[&BinaryVector]) -> RbmGradient {
    let mut acc = RbmGradient::zeros(model);
    let mut logits = vec![0.0; model.n_hidden()];
    let w = 1.0 / batch.len() as f64;
    for v in batch {
        model.hidden_logits_into(v.bits(), &mut logits);
        let ph: Vec<f64> = logits.iter().map(|&a| sigmoid(a)).collect();
        acc.add_outer(w, &bits_as_f64(v.bits()), &ph);
    }
    acc
}

/// Exact model expectations of `(v hᵀ, v, h)` by enumerating the smaller layer.
pub fn model_expectation(model: &RbmModel) -> Result<RbmGradient> {
    let log_z = model.exact_log_z()?;
    let mut acc = RbmGradient::zeros(model);
    let layer = model.smaller_layer();
    model.enumerate_layer(layer, |config, logits, lin| {
        let p = (lin + logits.iter().map(|&a| softplus(a)).sum::<f64>() - log_z).exp();
        let other: Vec<f64> = logits.iter().map(|&a| sigmoid(a)).collect();
        let own = bits_as_f64(config);
        match layer {
            Layer::Hidden => acc.add_outer(p, &other, &own),
            Layer::Visible => acc.add_outer(p, &own, &other),
        }
    })?;
    Ok(acc)
}

/// Gradient of the mean exact log-likelihood of `data` with respect to every parameter.
pub fn exact_log_likelihood_gradient(model: &RbmModel, data: &[BinaryVector]) -> Result<RbmGradient> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    for v in data {
        check_dim("training vector", model.n_visible(), v.len())?;
    }
    let batch: Vec<&BinaryVector> = data.iter().collect();
    let mut grad = data_expectation(model, &batch);
    grad.sub_assign(&model_expectation(model)?);
    Ok(grad)
}

fn apply(model: &mut RbmModel, grad: &RbmGradient, lr: f64) -> Result<()> {
    let (w, bv, bh) = model.params_mut();
    for (p, g) in w.iter_mut().zip(&grad.weights) {
        *p += lr * g;
    }
    for (p, g) in bv.iter_mut().zip(&grad.bias_visible) {
        *p += lr * g;
    }
    for (p, g) in bh.iter_mut().zip(&grad.bias_hidden) {
        *p += lr * g;
    }
    model.check_finite()
}

/// Negative phase from the final states of `chains`, using hidden probabilities.
fn chain_expectation(model: &RbmModel, chains: &[GibbsChain]) -> RbmGradient {
    let mut acc = RbmGradient::zeros(model);
    let mut logits = vec![0.0; model.n_hidden()];
    let w = 1.0 / chains.len() as f64;
    for c in chains {
        model.hidden_logits_into(c.visible(), &mut logits);
        let ph: Vec<f64> = logits.iter().map(|&a| sigmoid(a)).collect();
        acc.add_outer(w, &bits_as_f64(c.visible()), &ph);
    }
    acc
}

/// Trains `model` on `data` for `config.n_epochs` epochs.
///
/// CD and PCD shuffle the data and update once per minibatch. Exact-gradient
/// training takes one full-batch step per epoch, ignoring `batch_size`.
pub fn train_rbm(model: &RbmModel, data: &[BinaryVector], config: &TrainConfig) -> Result<RbmModel> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    for v in data {
        check_dim("training vector", model.n_visible(), v.len())?;
    }
    let mut model = model.clone();
    let mut rng = stream_rng(config.seed, 1);
    let batch_size = config.batch_size.min(data.len());
    let mut fantasy: Vec<GibbsChain> = match config.algorithm {
        TrainAlgorithm::Pcd => (0..batch_size)
            .map(|_| GibbsChain::uniform_start(&model, &mut rng))
            .collect(),
        _ => Vec::new(),
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..config.n_epochs {
        if config.algorithm == TrainAlgorithm::ExactGradient {
            let grad = exact_log_likelihood_gradient(&model, data)?;
            apply(&mut model, &grad, config.learning_rate)?;
            continue;
        }
        order.shuffle(&mut rng);
        for idx in order.chunks(batch_size) {
            let batch: Vec<&BinaryVector> = idx.iter().map(|&i| &data[i]).collect();
            let mut grad = data_expectation(&model, &batch);
            let negative = match config.algorithm {
                TrainAlgorithm::Cd => {
                    let mut chains: Vec<GibbsChain> = batch
                        .iter()
                        .map(|v| GibbsChain::new(&model, v))
                        .collect::<Result<_>>()?;
                    for c in chains.iter_mut() {
                        for _ in 0..config.k {
                            c.step(&model, &mut rng);
                        }
                    }
                    chain_expectation(&model, &chains)
                }
                TrainAlgorithm::Pcd => {
                    for c in fantasy.iter_mut() {
                        for _ in 0..config.k {
                            c.step(&model, &mut rng);
                        }
                    }
                    chain_expectation(&model, &fantasy)
                }
                TrainAlgorithm::ExactGradient => unreachable!("handled above"),
            };
            grad.sub_assign(&negative);
            apply(&mut model, &grad, config.learning_rate)?;
        }
    }
    Ok(model)
}

/// Mean exact log-likelihood of `data`.
pub fn mean_exact_log_likelihood(model: &RbmModel, data: &[BinaryVector]) -> Result<f64> {
    let lls = model.exact_log_likelihoods(data)?;
    Ok(lls.iter().sum::<f64>() / lls.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_dataset() -> Vec<BinaryVector> {
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 0, 1, 1], [1, 1, 1, 0]]
            .iter()
            .map(|b| BinaryVector::new(b.to_vec()).unwrap())
            .collect()
    }

    fn perturbed(model: &RbmModel, which: usize, eps: f64) -> RbmModel {
        let mut m = model.clone();
        let (w, bv, bh) = m.params_mut();
        let nw = w.len();
        let nbv = bv.len();
        if which < nw {
            w[which] += eps;
        } else if which < nw + nbv {
            bv[which - nw] += eps;
        } else {
            bh[which - nw - nbv] += eps;
        }
        m
    }

    #[test]
    fn init_contracts() {
        let z = init_rbm(3, 2, 1, 0.0).unwrap();
        assert_eq!(z, RbmModel::zeros(3, 2).unwrap());
        assert_eq!(init_rbm(5, 4, 9, 0.1).unwrap(), init_rbm(5, 4, 9, 0.1).unwrap());
        assert_ne!(init_rbm(5, 4, 9, 0.1).unwrap(), init_rbm(5, 4, 10, 0.1).unwrap());
        let big = init_rbm(784, 500, 3, 0.01).unwrap();
        assert!(big.weights().iter().all(|w| w.abs() <= 0.01));
        assert!(big.bias_visible().iter().chain(big.bias_hidden()).all(|&b| b == 0.0));
        assert!(init_rbm(2, 2, 0, -1.0).is_err());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let data = small_dataset();
        let mut model = init_rbm(4, 3, 5, 1.0).unwrap();
        {
            let (_, bv, bh) = model.params_mut();
            bv.copy_from_slice(&[0.3, -0.2, 0.1, 0.4]);
            bh.copy_from_slice(&[-0.5, 0.2, 0.7]);
        }
        let grad = exact_log_likelihood_gradient(&model, &data).unwrap();
        let eps = 1e-5;
        for (p, &g) in grad.iter().enumerate() {
            let up = mean_exact_log_likelihood(&perturbed(&model, p, eps), &data).unwrap();
            let down = mean_exact_log_likelihood(&perturbed(&model, p, -eps), &data).unwrap();
            let fd = (up - down) / (2.0 * eps);
            let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-8);
            assert!(rel < 1e-6, "parameter {p}: analytic {g} vs fd {fd} (rel {rel})");
        }
    }

    #[test]
    fn gradient_is_same_through_either_enumeration() {
        // 3 visible < 4 hidden enumerates the visible layer; the transposed
        // problem enumerates hidden. Both must agree with finite differences.
        let data: Vec<_> = (0..5).map(|c| BinaryVector::from_index(c, 3)).collect();
        let model = init_rbm(3, 4, 8, 1.0).unwrap();
        assert_eq!(model.smaller_layer(), Layer::Visible);
        let grad = exact_log_likelihood_gradient(&model, &data).unwrap();
        for (p, &g) in grad.iter().enumerate() {
            let up = mean_exact_log_likelihood(&perturbed(&model, p, 1e-5), &data).unwrap();
            let down = mean_exact_log_likelihood(&perturbed(&model, p, -1e-5), &data).unwrap();
            assert!((g - (up - down) / 2e-5).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_gradient_training_is_monotone() {
        let data = small_dataset();
        let mut model = init_rbm(4, 3, 2, 0.1).unwrap();
        let cfg = TrainConfig {
            algorithm: TrainAlgorithm::ExactGradient,
            learning_rate: 0.01,
            n_epochs: 1,
            ..TrainConfig::default()
        };
        let mut prev = mean_exact_log_likelihood(&model, &data).unwrap();
        for _ in 0..50 {
            model = train_rbm(&model, &data, &cfg).unwrap();
            let ll = mean_exact_log_likelihood(&model, &data).unwrap();
            assert!(ll >= prev - 1e-6, "{ll} < {prev}");
            prev = ll;
        }
        let again = (0..50).try_fold(init_rbm(4, 3, 2, 0.1).unwrap(), |m, _| train_rbm(&m, &data, &cfg)).unwrap();
        assert_eq!(again, model);
    }

    #[test]
    fn cd1_on_all_zero_data_drives_visible_means_down() {
        let data = vec![BinaryVector::zeros(6); 40];
        let mut model = init_rbm(6, 3, 4, 0.01).unwrap();
        let cfg = TrainConfig { n_epochs: 1, learning_rate: 0.2, batch_size: 10, ..TrainConfig::default() };
        let mean_at_zero = |m: &RbmModel| {
            let p = m.cond_mean_x_given_h(&BinaryVector::zeros(3)).unwrap();
            p.iter().sum::<f64>() / p.len() as f64
        };
        let mut prev = mean_at_zero(&model);
        for epoch in 0..60 {
            model = train_rbm(&model, &data, &TrainConfig { seed: epoch, ..cfg.clone() }).unwrap();
            let cur = mean_at_zero(&model);
            assert!(cur <= prev, "{cur} > {prev}");
            prev = cur;
        }
        assert!(prev < 0.1, "{prev}");
    }

    #[test]
    fn pcd_improves_likelihood() {
        let data = small_dataset();
        let model = init_rbm(4, 3, 6, 0.01).unwrap();
        let before = mean_exact_log_likelihood(&model, &data).unwrap();
        let cfg = TrainConfig {
            algorithm: TrainAlgorithm::Pcd,
            n_epochs: 1000,
            batch_size: 3,
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let trained = train_rbm(&model, &data, &cfg).unwrap();
        let after = mean_exact_log_likelihood(&trained, &data).unwrap();
        assert!(after > before + 0.5, "{before} -> {after}");
    }

    #[test]
    fn rejects_empty_or_misshapen_data() {
        let model = init_rbm(4, 3, 6, 0.01).unwrap();
        assert!(train_rbm(&model, &[], &TrainConfig::default()).is_err());
        assert!(train_rbm(&model, &[BinaryVector::zeros(3)], &TrainConfig::default()).is_err());
        assert!(train_rbm(&model, &small_dataset(), &TrainConfig { k: 0, ..TrainConfig::default() }).is_err());
    }
}
