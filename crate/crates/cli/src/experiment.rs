//! Sample-count sweeps: one chain run at the largest count, prefixes for the rest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use csl_core::estimators::{default_bandwidth_grid, AisConfig, AisSchedule, EvalReport};
use csl_core::rng::derive_seed;
use csl_core::sampler::{DEFAULT_BURN_IN, DEFAULT_THIN};
use csl_core::{AnyModel, ChainConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{load_dataset, Dataset};
use crate::error::validation;
use crate::eval::{self, Bandwidth};

pub const DEFAULT_N_TEST: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepEstimator {
    Csl,
    Parzen,
}

impl SweepEstimator {
    pub fn name(self) -> &'static str {
        match self {
            SweepEstimator::Csl => "csl",
            SweepEstimator::Parzen => "parzen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainSettings {
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self { burn_in: DEFAULT_BURN_IN, thin: DEFAULT_THIN, n_chains: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AisSettings {
    pub n_temperatures: usize,
    pub n_runs: usize,
    pub schedule: AisSchedule,
}

impl Default for AisSettings {
    fn default() -> Self {
        let d = AisConfig::default();
        Self { n_temperatures: d.n_temperatures, n_runs: d.n_runs, schedule: d.schedule }
    }
}

fn default_ais() -> Option<AisSettings> {
    Some(AisSettings::default())
}

fn default_true() -> bool {
    true
}

fn default_n_test() -> usize {
    DEFAULT_N_TEST
}

fn default_threshold() -> f64 {
    0.5
}

/// A sweep experiment. Relative paths resolve against the spec file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: PathBuf,
    pub test_set: PathBuf,
    #[serde(default)]
    pub validation_set: Option<PathBuf>,
    /// Data whose unit means set the AIS base-rate biases.
    #[serde(default)]
    pub reference_set: Option<PathBuf>,
    pub estimators: Vec<SweepEstimator>,
    pub sweep: Vec<usize>,
    #[serde(default)]
    pub chain: ChainSettings,
    /// Fixed Parzen σ. Without it σ is selected on `validation_set` over `parzen_grid`.
    #[serde(default)]
    pub parzen_sigma: Option<f64>,
    #[serde(default)]
    pub parzen_grid: Option<Vec<f64>>,
    /// Append an exact row when the model is enumerable.
    #[serde(default = "default_true")]
    pub exact: bool,
    /// Append an AIS row for RBMs; `null` disables it.
    #[serde(default = "default_ais")]
    pub ais: Option<AisSettings>,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(base) = path.parent() {
            spec.resolve_paths(base);
        }
        Ok(spec)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.model);
        fix(&mut self.test_set);
        fix(&mut self.output_dir);
        self.validation_set.iter_mut().for_each(fix);
        self.reference_set.iter_mut().for_each(fix);
    }

    /// Checks everything that does not need the model or data.
    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(validation("experiment selects no estimators"));
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            return Err(validation("estimator selection lists an estimator twice"));
        }
        if self.sweep.is_empty() {
            return Err(validation("sample-count sweep is empty"));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(validation(format!("sweep {:?} must be strictly increasing", self.sweep)));
        }
        if self.n_test == 0 {
            return Err(validation("n_test must be positive"));
        }
        self.chain_config().validate()?;
        if let Some(&bad) = self.sweep.iter().find(|&&n| n == 0 || n % self.chain.n_chains != 0) {
            return Err(validation(format!(
                "sweep entry {bad} must be positive and divisible by {} chains",
                self.chain.n_chains
            )));
        }
        if let Some(s) = self.parzen_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(validation(format!("parzen_sigma must be positive, got {s}")));
            }
        }
        if self.estimators.contains(&SweepEstimator::Parzen)
            && self.parzen_sigma.is_none()
            && self.validation_set.is_none()
        {
            return Err(validation("parzen needs parzen_sigma or a validation_set"));
        }
        if let Some(a) = &self.ais {
            self.ais_config(a).validate()?;
        }
        Ok(())
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            n_samples: *self.sweep.last().unwrap_or(&0),
            burn_in: self.chain.burn_in,
            thin: self.chain.thin,
            n_chains: self.chain.n_chains,
            seed: self.seed,
            ..ChainConfig::default()
        }
    }

    fn ais_config(&self, a: &AisSettings) -> AisConfig {
        AisConfig {
            n_temperatures: a.n_temperatures,
            n_runs: a.n_runs,
            schedule: a.schedule,
            seed: derive_seed(self.seed, 2),
        }
    }

    fn bandwidth(&self) -> Bandwidth {
        match self.parzen_sigma {
            Some(s) => Bandwidth::Fixed(s),
            None => Bandwidth::Select { grid: self.parzen_grid.clone().unwrap_or_else(default_bandwidth_grid) },
        }
    }
}

/// In-memory result: one row per sweep entry, plus reference rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentTable {
    pub estimators: Vec<SweepEstimator>,
    pub rows: Vec<SweepRow>,
    pub exact: Option<ReferenceRow>,
    pub ais: Option<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_samples: usize,
    pub values: BTreeMap<SweepEstimator, Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mean_loglik: f64,
    pub std_error: f64,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub mean_loglik: f64,
    pub std_error: f64,
    pub config: serde_json::Value,
}

impl From<EvalReport> for Summary {
    fn from(r: EvalReport) -> Self {
        Self { mean_loglik: r.mean_loglik, std_error: r.std_error, config: r.config_snapshot }
    }
}

impl ExperimentTable {
    /// `n_samples,<estimator>...` rows in nats with five decimals; reference rows
    /// carry their value in the first estimator column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_samples");
        for e in &self.estimators {
            write!(out, ",{}", e.name()).expect("string write");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.n_samples.to_string());
            for e in &self.estimators {
                write!(out, ",{:.5}", row.values[e].mean_loglik).expect("string write");
            }
            out.push('\n');
        }
        let pad = ",".repeat(self.estimators.len() - 1);
        for (label, r) in [("exact", &self.exact), ("ais", &self.ais)] {
            if let Some(r) = r {
                writeln!(out, "{label},{:.5}{pad}", r.mean_loglik).expect("string write");
            }
        }
        out
    }
}

/// Paths of the written report files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentOutput {
    pub table: PathBuf,
    pub manifest: PathBuf,
}

struct Inputs {
    model: AnyModel,
    test: Dataset,
    validation: Option<Dataset>,
    reference: Option<Dataset>,
}

fn load_inputs(spec: &ExperimentSpec) -> Result<Inputs> {
    let model = AnyModel::load(&spec.model).with_context(|| format!("loading model {}", spec.model.display()))?;
    let load = |p: &PathBuf| -> Result<Dataset> {
        let d = load_dataset(p, spec.threshold)?;
        eval::check_dims(&model, &d, &p.display().to_string())?;
        Ok(d)
    };
    let test = load(&spec.test_set)?.head(spec.n_test);
    let validation = spec.validation_set.as_ref().map(load).transpose()?;
    let reference = spec.reference_set.as_ref().map(load).transpose()?;
    Ok(Inputs { model, test, validation, reference })
}

/// Computes the sweep table without touching the filesystem beyond reading inputs.
pub fn compute_table(spec: &ExperimentSpec) -> Result<(ExperimentTable, Vec<String>)> {
    spec.validate()?;
    let inputs = load_inputs(spec)?;
    let model = &inputs.model;
    let mut notes = Vec::new();
    let full = eval::sample_latents(model, &spec.chain_config()).context("sampling latent chain")?;
    let bandwidth = spec.bandwidth();
    let mut rows = Vec::with_capacity(spec.sweep.len());
    for &n in &spec.sweep {
        let set = full.prefix(n)?;
        let mut values = BTreeMap::new();
        for &e in &spec.estimators {
            let report = match e {
                SweepEstimator::Csl => eval::csl(model, &set, &inputs.test),
                SweepEstimator::Parzen => {
                    eval::parzen(model, &set, &inputs.test, &bandwidth, inputs.validation.as_ref(), spec.seed)
                }
            }
            .with_context(|| format!("estimator {} at |S| = {n}", e.name()))?;
            values.insert(e, report.into());
        }
        rows.push(SweepRow { n_samples: n, values });
    }
    let exact = if !spec.exact {
        None
    } else if eval::is_enumerable(model) {
        let r = eval::exact(model, &inputs.test).context("exact log-likelihood")?;
        Some(ReferenceRow { mean_loglik: r.mean_loglik, std_error: r.std_error, config: r.config_snapshot })
    } else {
        notes.push("exact row omitted: model too large to enumerate".to_string());
        None
    };
    let ais = match (&spec.ais, model) {
        (Some(a), AnyModel::Rbm(_)) => {
            let r = eval::ais(model, &inputs.test, &spec.ais_config(a), inputs.reference.as_ref()).context("AIS")?;
            Some(ReferenceRow { mean_loglik: r.mean_loglik, std_error: r.std_error, config: r.config_snapshot })
        }
        (Some(_), AnyModel::Gmm(_)) => {
            notes.push("ais row omitted: AIS applies to RBMs only".to_string());
            None
        }
        (None, _) => None,
    };
    Ok((ExperimentTable { estimators: spec.estimators.clone(), rows, exact, ais }, notes))
}

/// Runs the sweep and writes `table.csv` and `manifest.json` under `output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let (table, notes) = compute_table(spec)?;
    fs::create_dir_all(&spec.output_dir).with_context(|| format!("creating {}", spec.output_dir.display()))?;
    let out = ExperimentOutput {
        table: spec.output_dir.join("table.csv"),
        manifest: spec.output_dir.join("manifest.json"),
    };
    fs::write(&out.table, table.to_csv()).with_context(|| format!("writing {}", out.table.display()))?;
    let manifest = json!({
        "spec": spec,
        "chain": spec.chain_config(),
        "units": "nats",
        "table": table,
        "notes": notes,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&out.manifest, text).with_context(|| format!("writing {}", out.manifest.display()))?;
    Ok(out)
}
