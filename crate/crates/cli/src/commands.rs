//! Command-line surface. All numbers reported are in nats.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use csl_core::estimators::{default_bandwidth_grid, AisConfig, AisSchedule, BiasedCslConfig, EvalReport};
use csl_core::sampler::{chain_effective_sample_sizes, format, DEFAULT_BURN_IN, DEFAULT_THIN};
use csl_core::training::{fit_gmm, init_rbm, train_rbm, TrainAlgorithm, TrainConfig};
use csl_core::{AnyModel, ChainConfig, ChainInit, GmmModel};
use serde_json::json;

use crate::compare::{compare_models, load_models};
use crate::dataset::{load_dataset, save_dataset, Dataset};
use crate::error::validation;
use crate::eval::{self, Bandwidth};
use crate::experiment::{run_experiment, ExperimentSpec};
use crate::synth::{make_synthetic, Generator, BARS_SIDE};

#[derive(Debug, Parser)]
#[command(name = "csl", version, about = "Sample-based log-likelihood estimation for latent-variable models")]
pub struct Cli {
    /// Worker threads for chains and estimators. Results do not depend on it.
    #[arg(long, global = true, env = "CSL_THREADS")]
    pub threads: Option<usize>,
    /// Seed for every stochastic step (default 0; `experiment` defaults to the spec's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Train a model.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Run latent chains and write a CSLS sample file.
    Sample(SampleArgs),
    /// Estimate test log-likelihood.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run a sample-count sweep described by a JSON spec.
    Experiment(ExperimentArgs),
    /// Rank models by biased CSL against exact or AIS scores.
    Compare(CompareArgs),
    /// Effective sample size of each chain in a sample file.
    Ess(EssArgs),
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// 4×4 bar images with bit-flip noise.
    TinyBars {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Real vectors drawn from a GMM model file.
    GmmBlobs {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgorithmArg {
    Cd,
    Pcd,
    ExactGradient,
}

impl From<AlgorithmArg> for TrainAlgorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Cd => TrainAlgorithm::Cd,
            AlgorithmArg::Pcd => TrainAlgorithm::Pcd,
            AlgorithmArg::ExactGradient => TrainAlgorithm::ExactGradient,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// IDX or CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Binarization threshold for IDX pixels scaled to [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Binary RBM by CD-k, PCD-k or the exact likelihood gradient
    Rbm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        hidden: usize,
        #[arg(long, value_enum, default_value = "cd")]
        algorithm: AlgorithmArg,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 20)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.01)]
        init_scale: f64,
        /// Continue from an existing RBM instead of a fresh initialization.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shared-variance GMM by EM
    Gmm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        components: usize,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n_samples: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    #[arg(long, default_value_t = DEFAULT_THIN)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Start every chain at a row of this dataset instead of uniform noise.
    #[arg(long)]
    pub start_from: Option<PathBuf>,
    #[arg(long, default_value_t = 0, requires = "start_from")]
    pub start_index: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Evaluate only the first N test rows.
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write per-example values as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Linear,
    GeometricTail,
}

impl From<ScheduleArg> for AisSchedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Linear => AisSchedule::Linear,
            ScheduleArg::GeometricTail => AisSchedule::GeometricTail,
        }
    }
}

#[derive(Debug, Args)]
pub struct AisArgs {
    #[arg(long, default_value_t = 1_000)]
    pub temperatures: usize,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub schedule: ScheduleArg,
    /// Data whose unit means set the base-rate biases (zeros if absent).
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StepsPreset {
    #[value(name = "1")]
    One,
    #[value(name = "30")]
    Thirty,
    #[value(name = "300")]
    ThreeHundred,
}

#[derive(Debug, Args)]
pub struct BiasedArgs {
    #[arg(long, default_value_t = 10)]
    pub chains: usize,
    /// Consecutive samples per chain; the first draw from P(h | x) is step 1.
    #[arg(long, default_value_t = 30, conflicts_with = "preset")]
    pub steps: usize,
    #[arg(long, value_enum)]
    pub preset: Option<StepsPreset>,
}

impl BiasedArgs {
    fn config(&self, seed: u64) -> BiasedCslConfig {
        let n_steps = match self.preset {
            Some(StepsPreset::One) => 1,
            Some(StepsPreset::Thirty) => 30,
            Some(StepsPreset::ThreeHundred) => 300,
            None => self.steps,
        };
        BiasedCslConfig { n_chains: self.chains, n_steps, seed }
    }
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// CSL from a latent sample file.
    Csl {
        #[command(flatten)]
        test: TestArgs,
        #[arg(long)]
        samples: PathBuf,
    },
    /// CSL with short chains started at each test point.
    BiasedCsl {
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        biased: BiasedArgs,
    },
    /// Parzen window on observations generated from a latent sample file.
    Parzen {
        #[command(flatten)]
        test: TestArgs,
        #[arg(long)]
        samples: PathBuf,
        /// Fixed bandwidth; otherwise selected on --validation.
        #[arg(long, conflicts_with = "validation")]
        sigma: Option<f64>,
        #[arg(long)]
        validation: Option<PathBuf>,
        /// Comma-separated bandwidth grid (default: 20 log-spaced values in [0.01, 10]).
        #[arg(long, value_delimiter = ',', requires = "validation")]
        grid: Option<Vec<f64>>,
    },
    /// Annealed importance sampling estimate of log Z, then -F(x) - log Z.
    Ais {
        #[command(flatten)]
        test: TestArgs,
        #[command(flatten)]
        ais: AisArgs,
    },
    /// Exact log-likelihood by enumeration.
    Exact {
        #[command(flatten)]
        test: TestArgs,
    },
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = crate::experiment::DEFAULT_N_TEST)]
    pub n_test: usize,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[command(flatten)]
    pub biased: BiasedArgs,
    /// Score against exact log-likelihood.
    #[arg(long)]
    pub exact: bool,
    /// Also (or instead) score with AIS.
    #[arg(long)]
    pub ais: bool,
    #[command(flatten)]
    pub ais_args: AisArgs,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EssArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
}

fn load_model(path: &Path) -> Result<AnyModel> {
    AnyModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn load_test(args: &TestArgs, model: &AnyModel) -> Result<Dataset> {
    let mut d = load_dataset(&args.test, args.threshold)?;
    if let Some(n) = args.n_test {
        d = d.head(n);
    }
    eval::check_dims(model, &d, "test set")?;
    Ok(d)
}

fn load_samples(path: &Path) -> Result<csl_core::LatentSampleSet> {
    format::load(path).with_context(|| format!("loading samples {}", path.display()))
}

fn emit(report: &EvalReport, args: &TestArgs) -> Result<String> {
    if let Some(p) = &args.json {
        report.save_json(p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &args.csv {
        report.save_csv(p).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(format!(
        "{}: mean {:.5} nats, std error {:.5}, {} test examples, {} samples",
        report.estimator_name,
        report.mean_loglik,
        report.std_error,
        report.per_example_loglik.len(),
        report.sample_count_used
    ))
}

fn ais_config(a: &AisArgs, seed: u64) -> AisConfig {
    AisConfig { n_temperatures: a.temperatures, n_runs: a.runs, schedule: a.schedule.into(), seed }
}

fn load_reference(a: &AisArgs, threshold: f64) -> Result<Option<Dataset>> {
    a.reference.as_ref().map(|p| load_dataset(p, threshold)).transpose()
}

/// Executes a parsed command line and returns the text to print on stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Synth(cmd) => {
            let (generator, out) = match cmd {
                SynthCommand::TinyBars { n, noise, out } => (Generator::TinyBars { n: *n, noise: *noise }, out),
                SynthCommand::GmmBlobs { model, n, out } => {
                    let AnyModel::Gmm(g) = load_model(model)? else {
                        return Err(validation("gmm-blobs needs a GMM model file"));
                    };
                    (Generator::GmmBlobs { n: *n, model: g }, out)
                }
            };
            let data = make_synthetic(&generator, seed)?;
            let shape = [BARS_SIDE as u32, BARS_SIDE as u32];
            let shape = matches!(generator, Generator::TinyBars { .. }).then_some(&shape[..]);
            save_dataset(out, &data, shape)?;
            Ok(format!("wrote {} rows of dimension {} to {}", data.len(), data.dim(), out.display()))
        }
        Command::Train(TrainCommand::Rbm {
            data,
            hidden,
            algorithm,
            k,
            learning_rate,
            epochs,
            batch_size,
            init_scale,
            init,
            out,
        }) => {
            let d = load_dataset(&data.data, data.threshold)?;
            let rows = d.binary_rows()?;
            let start = match init {
                Some(p) => match load_model(p)? {
                    AnyModel::Rbm(m) => m,
                    AnyModel::Gmm(_) => return Err(validation("--init must be an RBM model file")),
                },
                None => init_rbm(d.dim(), *hidden, seed, *init_scale)?,
            };
            if start.n_hidden() != *hidden {
                return Err(validation(format!("--init model has {} hidden units, not {hidden}", start.n_hidden())));
            }
            let config = TrainConfig {
                algorithm: (*algorithm).into(),
                k: *k,
                learning_rate: *learning_rate,
                n_epochs: *epochs,
                batch_size: *batch_size,
                seed,
                weight_init_scale: *init_scale,
            };
            let model = AnyModel::Rbm(train_rbm(&start, rows, &config)?);
            model.save(out).with_context(|| format!("writing {}", out.display()))?;
            Ok(format!("wrote RBM {}x{} to {}", d.dim(), hidden, out.display()))
        }
        Command::Train(TrainCommand::Gmm { data, components, iters, out }) => {
            let d = load_dataset(&data.data, data.threshold)?;
            let model: GmmModel = fit_gmm(&d.as_real(), *components, seed, *iters)?;
            AnyModel::Gmm(model).save(out).with_context(|| format!("writing {}", out.display()))?;
            Ok(format!("wrote GMM with {components} components to {}", out.display()))
        }
        Command::Sample(a) => {
            let model = load_model(&a.model)?;
            let init = match &a.start_from {
                Some(p) => {
                    let d = load_dataset(p, a.threshold)?;
                    let row = d.binary_rows()?.get(a.start_index).cloned().ok_or_else(|| {
                        validation(format!("--start-index {} out of range for {} rows", a.start_index, d.len()))
                    })?;
                    ChainInit::FromDataPoint(row)
                }
                None => ChainInit::RandomUniform,
            };
            let config = ChainConfig {
                n_samples: a.n_samples,
                burn_in: a.burn_in,
                thin: a.thin,
                n_chains: a.chains,
                seed,
                init,
            };
            let set = eval::sample_latents(&model, &config)?;
            format::save(&a.out, &set).with_context(|| format!("writing {}", a.out.display()))?;
            Ok(format!("wrote {} latent samples to {}", set.len(), a.out.display()))
        }
        Command::Eval(cmd) => match cmd {
            EvalCommand::Csl { test, samples } => {
                let model = load_model(&test.model)?;
                let data = load_test(test, &model)?;
                let set = load_samples(samples)?;
                emit(&eval::csl(&model, &set, &data)?, test)
            }
            EvalCommand::BiasedCsl { test, biased } => {
                let model = load_model(&test.model)?;
                let data = load_test(test, &model)?;
                emit(&eval::biased_csl(&model, &data, &biased.config(seed))?, test)
            }
            EvalCommand::Parzen { test, samples, sigma, validation: val, grid } => {
                let model = load_model(&test.model)?;
                let data = load_test(test, &model)?;
                let set = load_samples(samples)?;
                let bandwidth = match (sigma, val) {
                    (Some(s), _) => Bandwidth::Fixed(*s),
                    (None, Some(_)) => Bandwidth::Select { grid: grid.clone().unwrap_or_else(default_bandwidth_grid) },
                    (None, None) => match &model {
                        AnyModel::Gmm(g) => Bandwidth::Fixed(g.sigma()),
                        AnyModel::Rbm(_) => return Err(validation("parzen on an RBM needs --sigma or --validation")),
                    },
                };
                let val = val.as_ref().map(|p| load_dataset(p, test.threshold)).transpose()?;
                emit(&eval::parzen(&model, &set, &data, &bandwidth, val.as_ref(), seed)?, test)
            }
            EvalCommand::Ais { test, ais } => {
                let model = load_model(&test.model)?;
                let data = load_test(test, &model)?;
                let reference = load_reference(ais, test.threshold)?;
                emit(&eval::ais(&model, &data, &ais_config(ais, seed), reference.as_ref())?, test)
            }
            EvalCommand::Exact { test } => {
                let model = load_model(&test.model)?;
                let data = load_test(test, &model)?;
                emit(&eval::exact(&model, &data)?, test)
            }
        },
        Command::Experiment(a) => {
            let mut spec = ExperimentSpec::load(&a.spec)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let out = run_experiment(&spec)?;
            Ok(fs::read_to_string(&out.table)?)
        }
        Command::Compare(a) => {
            let models = load_models(&a.models)?;
            let test = load_dataset(&a.test, a.threshold)?.head(a.n_test);
            let ais = a.ais.then(|| ais_config(&a.ais_args, seed));
            let reference = load_reference(&a.ais_args, a.threshold)?;
            let report =
                compare_models(&models, &test, &a.biased.config(seed), a.exact, ais.as_ref(), reference.as_ref())?;
            if let Some(p) = &a.json {
                let mut text = serde_json::to_string_pretty(&report)?;
                text.push('\n');
                fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = &a.csv {
                fs::write(p, report.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(format!("{}spearman,{:.5}\n", report.to_csv(), report.rank_correlation))
        }
        Command::Ess(a) => {
            let model = load_model(&a.model)?;
            let set = load_samples(&a.samples)?;
            let ess = match &model {
                AnyModel::Rbm(m) => chain_effective_sample_sizes(m, &set)?,
                AnyModel::Gmm(g) => chain_effective_sample_sizes(g, &set)?,
            };
            let per_chain = set.provenance().samples_per_chain();
            Ok(serde_json::to_string_pretty(&json!({
                "samples_per_chain": per_chain,
                "effective_sample_size": ess,
                "total": ess.iter().sum::<f64>(),
            }))?)
        }
    }
}

