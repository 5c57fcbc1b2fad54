//! Bernoulli–Bernoulli restricted Boltzmann machine.
//!
//! Energy: `E(v, h) = -vᵀWh - b_vᵀv - b_hᵀh` with `W` stored row-major as
//! `n_visible × n_hidden`. Small models can be normalized exactly by
//! enumerating the smaller of the two layers with the other marginalized out.

use serde::{Deserialize, Serialize};

use super::{BinaryVector, LatentConditional, LatentState};
use crate::error::{check_dim, Error, Result};
use crate::math::{sigmoid, softplus, LogSumExpAcc};

/// Largest layer size that exact enumeration will visit (2^25 configurations).
pub const ENUMERATION_LIMIT: usize = 25;

/// Which layer an enumeration walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Visible,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RbmParams", into = "RbmParams")]
pub struct RbmModel {
    n_visible: usize,
    n_hidden: usize,
    weights: Vec<f64>,
    bias_visible: Vec<f64>,
    bias_hidden: Vec<f64>,
}

/// Serialized form: weights as nested row-major lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RbmParams {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias_visible: Vec<f64>,
    pub bias_hidden: Vec<f64>,
}

impl TryFrom<RbmParams> for RbmModel {
    type Error = Error;
    fn try_from(p: RbmParams) -> Result<Self> {
        check_dim("weight rows", p.n_visible, p.weights.len())?;
        for row in &p.weights {
            check_dim("weight columns", p.n_hidden, row.len())?;
        }
        let flat = p.weights.into_iter().flatten().collect();
        RbmModel::new(p.n_visible, p.n_hidden, flat, p.bias_visible, p.bias_hidden)
    }
}

impl From<RbmModel> for RbmParams {
    fn from(m: RbmModel) -> Self {
        let weights = if m.n_hidden == 0 {
            vec![Vec::new(); m.n_visible]
        } else {
            m.weights.chunks(m.n_hidden).map(<[f64]>::to_vec).collect()
        };
        RbmParams {
            n_visible: m.n_visible,
            n_hidden: m.n_hidden,
            weights,
            bias_visible: m.bias_visible,
            bias_hidden: m.bias_hidden,
        }
    }
}

impl RbmModel {
    /// Builds a model from row-major weights, validating shapes and finiteness.
    pub fn new(
        n_visible: usize,
        n_hidden: usize,
        weights: Vec<f64>,
        bias_visible: Vec<f64>,
        bias_hidden: Vec<f64>,
    ) -> Result<Self> {
        if n_visible == 0 || n_hidden == 0 {
            return Err(Error::InvalidParameter(
                "RBM layer sizes must be positive".into(),
            ));
        }
        check_dim("weights", n_visible * n_hidden, weights.len())?;
        check_dim("bias_visible", n_visible, bias_visible.len())?;
        check_dim("bias_hidden", n_hidden, bias_hidden.len())?;
        let model = Self {
            n_visible,
            n_hidden,
            weights,
            bias_visible,
            bias_hidden,
        };
        model.check_finite()?;
        Ok(model)
    }

    /// All-zero parameters: the uniform distribution over visible vectors.
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Result<Self> {
        Self::new(
            n_visible,
            n_hidden,
            vec![0.0; n_visible * n_hidden],
            vec![0.0; n_visible],
            vec![0.0; n_hidden],
        )
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    /// Row-major `n_visible × n_hidden` weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n_hidden + j]
    }

    pub fn bias_visible(&self) -> &[f64] {
        &self.bias_visible
    }

    pub fn bias_hidden(&self) -> &[f64] {
        &self.bias_hidden
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (
            &mut self.weights,
            &mut self.bias_visible,
            &mut self.bias_hidden,
        )
    }

    pub fn check_finite(&self) -> Result<()> {
        let bad = self
            .weights
            .iter()
            .chain(&self.bias_visible)
            .chain(&self.bias_hidden)
            .any(|p| !p.is_finite());
        if bad {
            Err(Error::NonFinite("RBM parameters".into()))
        } else {
            Ok(())
        }
    }

    fn check_visible(&self, v: &BinaryVector) -> Result<()> {
        check_dim("visible vector", self.n_visible, v.len())
    }

    fn check_hidden(&self, h: &BinaryVector) -> Result<()> {
        check_dim("hidden vector", self.n_hidden, h.len())
    }

    /// `E(v, h) = -vᵀWh - b_vᵀv - b_hᵀh`.
    pub fn energy(&self, v: &BinaryVector, h: &BinaryVector) -> Result<f64> {
        self.check_visible(v)?;
        self.check_hidden(h)?;
        let mut e = 0.0;
        for (i, &vi) in v.bits().iter().enumerate() {
            if vi == 0 {
                continue;
            }
            e -= self.bias_visible[i];
            let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
            for (w, &hj) in row.iter().zip(h.bits()) {
                if hj == 1 {
                    e -= w;
                }
            }
        }
        for (b, &hj) in self.bias_hidden.iter().zip(h.bits()) {
            if hj == 1 {
                e -= b;
            }
        }
        Ok(e)
    }

    /// `W h + b_v`, the visible-unit logits given `h`.
    pub fn visible_logits(&self, h: &BinaryVector) -> Result<Vec<f64>> {
        self.check_hidden(h)?;
        let mut out = vec![0.0; self.n_visible];
        self.visible_logits_into(h.bits(), &mut out);
        Ok(out)
    }

    pub(crate) fn visible_logits_into(&self, h: &[u8], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
            let mut a = self.bias_visible[i];
            for (w, &hj) in row.iter().zip(h) {
                if hj == 1 {
                    a += w;
                }
            }
            *o = a;
        }
    }

    /// `Wᵀ v + b_h`, the hidden-unit logits given `v`.
    pub fn hidden_logits(&self, v: &BinaryVector) -> Result<Vec<f64>> {
        self.check_visible(v)?;
        let mut out = vec![0.0; self.n_hidden];
        self.hidden_logits_into(v.bits(), &mut out);
        Ok(out)
    }

    pub(crate) fn hidden_logits_into(&self, v: &[u8], out: &mut [f64]) {
        out.copy_from_slice(&self.bias_hidden);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0 {
                continue;
            }
            let row = &self.weights[i * self.n_hidden..(i + 1) * self.n_hidden];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w;
            }
        }
    }

    /// `P(h_j = 1 | v) = σ(Wᵀv + b_h)_j`.
    pub fn cond_mean_h_given_x(&self, v: &BinaryVector) -> Result<Vec<f64>> {
        Ok(self.hidden_logits(v)?.into_iter().map(sigmoid).collect())
    }

    /// `P(v_i = 1 | h) = σ(W h + b_v)_i`.
    pub fn cond_mean_x_given_h(&self, h: &BinaryVector) -> Result<Vec<f64>> {
        Ok(self.visible_logits(h)?.into_iter().map(sigmoid).collect())
    }

    /// `log P(x | h)` as a product of Bernoulli masses evaluated from logits.
    pub fn log_p_visible_given_hidden(&self, x: &BinaryVector, h: &BinaryVector) -> Result<f64> {
        self.check_visible(x)?;
        self.check_hidden(h)?;
        let cond = self.visible_conditional(h.bits());
        Ok(cond.log_prob(x.bits()))
    }

    pub(crate) fn visible_conditional(&self, h: &[u8]) -> VisibleConditional {
        let mut logits = vec![0.0; self.n_visible];
        self.visible_logits_into(h, &mut logits);
        VisibleConditional::from_logits(logits)
    }

    /// Visible free energy `F(v) = -b_vᵀv - Σ_j softplus((Wᵀv + b_h)_j)`.
    pub fn free_energy(&self, v: &BinaryVector) -> Result<f64> {
        let logits = self.hidden_logits(v)?;
        let lin: f64 = v
            .bits()
            .iter()
            .zip(&self.bias_visible)
            .map(|(&b, w)| b as f64 * w)
            .sum();
        Ok(-lin - logits.into_iter().map(softplus).sum::<f64>())
    }

    /// Hidden free energy `F(h) = -b_hᵀh - Σ_i softplus((W h + b_v)_i)`.
    pub fn hidden_free_energy(&self, h: &BinaryVector) -> Result<f64> {
        let logits = self.visible_logits(h)?;
        let lin: f64 = h
            .bits()
            .iter()
            .zip(&self.bias_hidden)
            .map(|(&b, w)| b as f64 * w)
            .sum();
        Ok(-lin - logits.into_iter().map(softplus).sum::<f64>())
    }

    /// The smaller layer, the one exact enumeration walks over.
    pub fn smaller_layer(&self) -> Layer {
        if self.n_hidden <= self.n_visible {
            Layer::Hidden
        } else {
            Layer::Visible
        }
    }

    fn layer_len(&self, layer: Layer) -> usize {
        match layer {
            Layer::Visible => self.n_visible,
            Layer::Hidden => self.n_hidden,
        }
    }

    fn check_enumerable(&self, layer: Layer) -> Result<()> {
        let n = self.layer_len(layer);
        if n > ENUMERATION_LIMIT {
            Err(Error::Intractable {
                smaller: n,
                limit: ENUMERATION_LIMIT,
            })
        } else {
            Ok(())
        }
    }

    /// Visits every configuration of `layer` in Gray-code order.
    ///
    /// The callback receives the configuration, the logits it induces on the
    /// other layer, and its own linear bias term. The unnormalized log marginal
    /// of the configuration is `lin + Σ softplus(logits)`.
    pub fn enumerate_layer(
        &self,
        layer: Layer,
        mut visit: impl FnMut(&[u8], &[f64], f64),
    ) -> Result<()> {
        self.check_enumerable(layer)?;
        let n = self.layer_len(layer);
        let (other_bias, own_bias) = match layer {
            Layer::Hidden => (&self.bias_visible, &self.bias_hidden),
            Layer::Visible => (&self.bias_hidden, &self.bias_visible),
        };
        let mut config = vec![0u8; n];
        let mut logits = other_bias.clone();
        let mut lin = 0.0;
        visit(&config, &logits, lin);
        let total: u64 = 1 << n;
        for k in 1..total {
            let bit = k.trailing_zeros() as usize;
            config[bit] ^= 1;
            if k % 4096 == 0 {
                // resynchronize to bound accumulated rounding drift
                match layer {
                    Layer::Hidden => self.visible_logits_into(&config, &mut logits),
                    Layer::Visible => self.hidden_logits_into(&config, &mut logits),
                }
                lin = config
                    .iter()
                    .zip(own_bias)
                    .filter(|(&c, _)| c == 1)
                    .map(|(_, b)| b)
                    .sum();
            } else {
                let sign = if config[bit] == 1 { 1.0 } else { -1.0 };
                lin += sign * own_bias[bit];
                match layer {
                    Layer::Hidden => {
                        for (i, l) in logits.iter_mut().enumerate() {
                            *l += sign * self.weights[i * self.n_hidden + bit];
                        }
                    }
                    Layer::Visible => {
                        let row = &self.weights[bit * self.n_hidden..(bit + 1) * self.n_hidden];
                        for (l, w) in logits.iter_mut().zip(row) {
                            *l += sign * w;
                        }
                    }
                }
            }
            visit(&config, &logits, lin);
        }
        Ok(())
    }

    /// `log Z` by enumerating `layer` with the other layer summed analytically.
    pub fn log_z_enumerating(&self, layer: Layer) -> Result<f64> {
        let mut acc = LogSumExpAcc::default();
        self.enumerate_layer(layer, |_, logits, lin| {
            acc.push(lin + logits.iter().map(|&a| softplus(a)).sum::<f64>());
        })?;
        Ok(acc.value())
    }

    /// Exact `log Z`, enumerating whichever layer is smaller.
    pub fn exact_log_z(&self) -> Result<f64> {
        self.log_z_enumerating(self.smaller_layer())
    }

    /// Exact `log P(x) = -F(x) - log Z`.
    pub fn exact_log_likelihood(&self, x: &BinaryVector) -> Result<f64> {
        let log_z = self.exact_log_z()?;
        self.log_likelihood_with_log_z(x, log_z)
    }

    /// `-F(x) - log_z` for a caller-supplied partition function.
    pub fn log_likelihood_with_log_z(&self, x: &BinaryVector, log_z: f64) -> Result<f64> {
        Ok(-self.free_energy(x)? - log_z)
    }

    /// Exact `log P(x)` for a batch, sharing one `log Z` computation.
    pub fn exact_log_likelihoods(&self, xs: &[BinaryVector]) -> Result<Vec<f64>> {
        let log_z = self.exact_log_z()?;
        xs.iter()
            .map(|x| self.log_likelihood_with_log_z(x, log_z))
            .collect()
    }
}

/// `P(x | h)` for a fixed `h`, reduced to its visible logits `a = W h + b_v`.
///
/// `log P(x | h) = Σ_i x_i a_i - Σ_i softplus(a_i)`, which equals the sum of
/// per-unit `log σ(±a_i)` terms without ever forming a probability.
#[derive(Debug, Clone)]
pub struct VisibleConditional {
    logits: Vec<f64>,
    log_all_off: f64,
}

impl VisibleConditional {
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let log_all_off = -logits.iter().map(|&a| softplus(a)).sum::<f64>();
        Self { logits, log_all_off }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    #[inline]
    pub fn log_prob(&self, x: &[u8]) -> f64 {
        let on: f64 = x
            .iter()
            .zip(&self.logits)
            .filter(|(&b, _)| b == 1)
            .map(|(_, a)| a)
            .sum();
        self.log_all_off + on
    }
}

impl LatentConditional for RbmModel {
    type Observation = BinaryVector;
    type Conditional = VisibleConditional;

    fn condition_on(&self, h: &LatentState) -> Result<VisibleConditional> {
        self.validate_latent(h)?;
        Ok(self.visible_conditional(h.as_binary().expect("validated").bits()))
    }

    fn conditional_log_prob(&self, cond: &VisibleConditional, x: &BinaryVector) -> Result<f64> {
        self.check_visible(x)?;
        Ok(cond.log_prob(x.bits()))
    }

    fn log_p_x_given_h(&self, x: &BinaryVector, h: &LatentState) -> Result<f64> {
        match h {
            LatentState::Binary(h) => self.log_p_visible_given_hidden(x, h),
            LatentState::Component(_) => Err(Error::InvalidParameter(
                "RBM requires a binary hidden configuration".into(),
            )),
        }
    }

    fn exact_log_likelihood(&self, x: &BinaryVector) -> Result<f64> {
        RbmModel::exact_log_likelihood(self, x)
    }

    fn validate_latent(&self, h: &LatentState) -> Result<()> {
        match h {
            LatentState::Binary(h) => self.check_hidden(h),
            LatentState::Component(_) => Err(Error::InvalidParameter(
                "RBM requires a binary hidden configuration".into(),
            )),
        }
    }

    fn latent_summary(&self, h: &LatentState) -> Result<f64> {
        match h {
            LatentState::Binary(h) => self.hidden_free_energy(h),
            LatentState::Component(_) => Err(Error::InvalidParameter(
                "RBM requires a binary hidden configuration".into(),
            )),
        }
    }

    fn visit_latent_prior(&self, visit: &mut dyn FnMut(&LatentState, f64)) -> Result<()> {
        self.check_enumerable(Layer::Hidden)?;
        let log_z = self.exact_log_z()?;
        self.enumerate_layer(Layer::Hidden, |config, logits, lin| {
            let log_p = lin + logits.iter().map(|&a| softplus(a)).sum::<f64>() - log_z;
            let h = LatentState::Binary(BinaryVector::new(config.to_vec()).expect("binary"));
            visit(&h, log_p);
        })
    }
}
