//! Log-likelihood estimators: CSL, biased CSL, Parzen, AIS and exact oracles.

mod ais;
mod biased;
mod csl;
mod parzen;
mod report;

pub use ais::{ais_log_likelihood, ais_log_z, base_visible_biases, AisConfig, AisEstimate, AisSchedule};
pub use biased::{biased_csl, biased_csl_any, biased_csl_report, BiasedCslConfig};
pub use csl::{csl, csl_exact_expectation, csl_log_density, exact_log_likelihood_report, ConditionedSamples};
pub use parzen::{default_bandwidth_grid, parzen_log_density, parzen_report, select_bandwidth, BandwidthSelection};
pub use report::EvalReport;
