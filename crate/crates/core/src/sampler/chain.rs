use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::sigmoid;
use crate::models::{BinaryVector, GmmModel, LatentConditional, LatentState, RbmModel};
use crate::rng::{stream_rng, StreamRng};

pub const DEFAULT_BURN_IN: usize = 1_000;
pub const DEFAULT_THIN: usize = 100;

/// Starting visible state for each chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChainInit {
    /// Each visible unit drawn Bernoulli(½) from the chain's own stream.
    #[default]
    RandomUniform,
    FromDataPoint(BinaryVector),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total number of recorded latent states, |S|, pooled over chains.
    pub n_samples: usize,
    pub burn_in: usize,
    /// Record every `thin`-th state.
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
    #[serde(default)]
    pub init: ChainInit,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000,
            burn_in: DEFAULT_BURN_IN,
            thin: DEFAULT_THIN,
            n_chains: 1,
            seed: 0,
            init: ChainInit::RandomUniform,
        }
    }
}

impl ChainConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_chains(mut self, n_chains: usize) -> Self {
        self.n_chains = n_chains;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be positive".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidParameter("n_chains must be positive".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        if self.n_samples % self.n_chains != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_samples ({}) must be divisible by n_chains ({})",
                self.n_samples, self.n_chains
            )));
        }
        Ok(())
    }

    pub fn samples_per_chain(&self) -> usize {
        self.n_samples / self.n_chains
    }

    /// Markov-chain steps each chain executes: burn-in plus `thin` per record.
    pub fn chain_length(&self) -> usize {
        self.burn_in + self.thin * self.samples_per_chain()
    }
}

/// Shape of the latent states in a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentKind {
    Binary { len: usize },
    Component { n_components: usize },
}

impl LatentKind {
    pub fn for_rbm(model: &RbmModel) -> Self {
        LatentKind::Binary { len: model.n_hidden() }
    }

    pub fn for_gmm(model: &GmmModel) -> Self {
        LatentKind::Component {
            n_components: model.n_components(),
        }
    }

    pub fn admits(&self, h: &LatentState) -> bool {
        match (self, h) {
            (LatentKind::Binary { len }, LatentState::Binary(b)) => b.len() == *len,
            (LatentKind::Component { n_components }, LatentState::Component(k)) => k < n_components,
            _ => false,
        }
    }
}

/// The set S of latent samples together with the chain configuration that produced it.
///
/// Samples are stored chain-major: all of chain 0, then chain 1, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSampleSet {
    samples: Vec<LatentState>,
    chain_index: Vec<u32>,
    kind: LatentKind,
    provenance: ChainConfig,
}

impl LatentSampleSet {
    /// Assembles a set from chain-major samples, checking the bookkeeping invariants.
    pub fn from_parts(samples: Vec<LatentState>, kind: LatentKind, provenance: ChainConfig) -> Result<Self> {
        provenance.validate()?;
        check_dim("sample count", provenance.n_samples, samples.len())?;
        if let Some(bad) = samples.iter().position(|h| !kind.admits(h)) {
            return Err(Error::InvalidParameter(format!(
                "sample {bad} does not match latent kind {kind:?}"
            )));
        }
        let per = provenance.samples_per_chain();
        let chain_index = (0..samples.len()).map(|i| (i / per) as u32).collect();
        Ok(Self {
            samples,
            chain_index,
            kind,
            provenance,
        })
    }

    pub fn samples(&self) -> &[LatentState] {
        &self.samples
    }

    pub fn chain_index(&self) -> &[u32] {
        &self.chain_index
    }

    pub fn kind(&self) -> LatentKind {
        self.kind
    }

    pub fn provenance(&self) -> &ChainConfig {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples of one chain, in recording order.
    pub fn chain(&self, c: usize) -> &[LatentState] {
        let per = self.provenance.samples_per_chain();
        &self.samples[c * per..(c + 1) * per]
    }

    /// The first `n / n_chains` samples of every chain.
    ///
    /// Because each chain owns its random stream, this equals an independent
    /// run with `n_samples = n` and the same seed.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let chains = self.provenance.n_chains;
        if n == 0 || n > self.len() || n % chains != 0 {
            return Err(Error::InvalidParameter(format!(
                "prefix size {n} must be in 1..={} and divisible by {chains} chains",
                self.len()
            )));
        }
        let per = n / chains;
        let samples = (0..chains)
            .flat_map(|c| self.chain(c)[..per].iter().cloned())
            .collect();
        let provenance = ChainConfig {
            n_samples: n,
            ..self.provenance.clone()
        };
        Self::from_parts(samples, self.kind, provenance)
    }

    /// Per-chain series of the model's latent summary statistic.
    pub fn summary_series<M: LatentConditional>(&self, model: &M) -> Result<Vec<Vec<f64>>> {
        (0..self.provenance.n_chains)
            .map(|c| self.chain(c).iter().map(|h| model.latent_summary(h)).collect())
            .collect()
    }
}

/// Block Gibbs state for one RBM chain, with reusable logit buffers.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    visible: Vec<u8>,
    hidden: Vec<u8>,
    hidden_logits: Vec<f64>,
    visible_logits: Vec<f64>,
}

impl GibbsChain {
    pub fn new(model: &RbmModel, start: &BinaryVector) -> Result<Self> {
        check_dim("visible vector", model.n_visible(), start.len())?;
        Ok(Self {
            visible: start.bits().to_vec(),
            hidden: vec![0; model.n_hidden()],
            hidden_logits: vec![0.0; model.n_hidden()],
            visible_logits: vec![0.0; model.n_visible()],
        })
    }

    pub fn uniform_start<R: Rng>(model: &RbmModel, rng: &mut R) -> Self {
        let v: Vec<u8> = (0..model.n_visible()).map(|_| rng.random_bool(0.5) as u8).collect();
        Self::new(model, &BinaryVector::new(v).expect("binary")).expect("sized")
    }

    /// Draws `h ~ P(h | v)` then `v ~ P(v | h)`.
    pub fn step<R: Rng>(&mut self, model: &RbmModel, rng: &mut R) {
        model.hidden_logits_into(&self.visible, &mut self.hidden_logits);
        for (h, &a) in self.hidden.iter_mut().zip(&self.hidden_logits) {
            *h = (rng.random::<f64>() < sigmoid(a)) as u8;
        }
        model.visible_logits_into(&self.hidden, &mut self.visible_logits);
        for (v, &a) in self.visible.iter_mut().zip(&self.visible_logits) {
            *v = (rng.random::<f64>() < sigmoid(a)) as u8;
        }
    }

    pub fn visible(&self) -> &[u8] {
        &self.visible
    }

    /// Hidden configuration drawn by the most recent step.
    pub fn hidden(&self) -> &[u8] {
        &self.hidden
    }

    pub fn hidden_state(&self) -> LatentState {
        LatentState::Binary(BinaryVector::new(self.hidden.clone()).expect("binary"))
    }
}

/// One block Gibbs transition from `v`; returns `(v′, h′)`.
pub fn gibbs_step<R: Rng>(model: &RbmModel, v: &BinaryVector, rng: &mut R) -> Result<(BinaryVector, BinaryVector)> {
    let mut chain = GibbsChain::new(model, v)?;
    chain.step(model, rng);
    Ok((
        BinaryVector::new(chain.visible.clone()).expect("binary"),
        BinaryVector::new(chain.hidden.clone()).expect("binary"),
    ))
}

fn chain_rng(seed: u64, chain: usize) -> StreamRng {
    stream_rng(seed, chain as u64)
}

fn run_single_chain(model: &RbmModel, config: &ChainConfig, c: usize) -> Result<Vec<LatentState>> {
    let mut rng = chain_rng(config.seed, c);
    let mut chain = match &config.init {
        ChainInit::RandomUniform => GibbsChain::uniform_start(model, &mut rng),
        ChainInit::FromDataPoint(v) => GibbsChain::new(model, v)?,
    };
    for _ in 0..config.burn_in {
        chain.step(model, &mut rng);
    }
    let per = config.samples_per_chain();
    let mut out = Vec::with_capacity(per);
    for _ in 0..per {
        for _ in 0..config.thin {
            chain.step(model, &mut rng);
        }
        out.push(chain.hidden_state());
    }
    Ok(out)
}

/// Runs `n_chains` block Gibbs chains on an RBM and records thinned hidden states.
pub fn run_chain(model: &RbmModel, config: &ChainConfig) -> Result<LatentSampleSet> {
    config.validate()?;
    if let ChainInit::FromDataPoint(v) = &config.init {
        check_dim("chain start", model.n_visible(), v.len())?;
    }
    let chains: Vec<Vec<LatentState>> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_single_chain(model, config, c))
        .collect::<Result<_>>()?;
    LatentSampleSet::from_parts(
        chains.into_iter().flatten().collect(),
        LatentKind::for_rbm(model),
        config.clone(),
    )
}

/// Categorical draw from normalized log weights by inverse CDF.
pub(crate) fn draw_component<R: Rng>(log_weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (k, lw) in log_weights.iter().enumerate() {
        cum += lw.exp();
        if u < cum {
            return k;
        }
    }
    log_weights.len() - 1
}

/// Exact i.i.d. component draws; burn-in and thinning do not apply and are recorded as 0 and 1.
pub fn gmm_sample_latent(model: &GmmModel, config: &ChainConfig) -> Result<LatentSampleSet> {
    let provenance = ChainConfig {
        burn_in: 0,
        thin: 1,
        init: ChainInit::RandomUniform,
        ..config.clone()
    };
    provenance.validate()?;
    let per = provenance.samples_per_chain();
    let chains: Vec<Vec<LatentState>> = (0..provenance.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = chain_rng(provenance.seed, c);
            (0..per)
                .map(|_| LatentState::Component(draw_component(model.log_weights(), &mut rng)))
                .collect()
        })
        .collect();
    LatentSampleSet::from_parts(
        chains.into_iter().flatten().collect(),
        LatentKind::for_gmm(model),
        provenance,
    )
}

/// Ancestral `x′ ~ P(x | h′)` for each latent sample of a GMM.
pub fn gmm_sample_observations(model: &GmmModel, set: &LatentSampleSet, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = stream_rng(seed, u64::MAX);
    set.samples()
        .iter()
        .map(|h| {
            model.validate_latent(h)?;
            let mean = &model.means()[h.as_component().expect("validated")];
            Ok(mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + model.sigma() * z
                })
                .collect())
        })
        .collect()
}

/// Draws one observation `x′ ~ P(x | h′)` per latent sample of an RBM.
pub fn rbm_sample_observations(model: &RbmModel, set: &LatentSampleSet, seed: u64) -> Result<Vec<BinaryVector>> {
    let mut rng = stream_rng(seed, u64::MAX);
    let mut logits = vec![0.0; model.n_visible()];
    set.samples()
        .iter()
        .map(|h| {
            model.validate_latent(h)?;
            model.visible_logits_into(h.as_binary().expect("validated").bits(), &mut logits);
            let bits = logits.iter().map(|&a| (rng.random::<f64>() < sigmoid(a)) as u8).collect();
            Ok(BinaryVector::new(bits).expect("binary"))
        })
        .collect()
}

/// Models that can produce a latent sample set.
pub trait LatentSampler: LatentConditional {
    fn sample_latents(&self, config: &ChainConfig) -> Result<LatentSampleSet>;
}

impl LatentSampler for RbmModel {
    fn sample_latents(&self, config: &ChainConfig) -> Result<LatentSampleSet> {
        run_chain(self, config)
    }
}

impl LatentSampler for GmmModel {
    fn sample_latents(&self, config: &ChainConfig) -> Result<LatentSampleSet> {
        gmm_sample_latent(self, config)
    }
}
