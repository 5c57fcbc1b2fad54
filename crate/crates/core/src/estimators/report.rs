use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{mean, std_error};

/// Per-example log-likelihood estimates with summary statistics and the
/// configuration that produced them. All values are in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub estimator_name: String,
    pub per_example_loglik: Vec<f64>,
    pub mean_loglik: f64,
    /// Sample standard deviation of the per-example values over `√n`.
    pub std_error: f64,
    pub config_snapshot: serde_json::Value,
    pub sample_count_used: usize,
}

impl EvalReport {
    pub fn new(
        estimator_name: impl Into<String>,
        per_example_loglik: Vec<f64>,
        config_snapshot: serde_json::Value,
        sample_count_used: usize,
    ) -> Result<Self> {
        let estimator_name = estimator_name.into();
        if per_example_loglik.is_empty() {
            return Err(Error::Empty("test set"));
        }
        if let Some(i) = per_example_loglik.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{estimator_name} estimate for example {i} ({})",
                per_example_loglik[i]
            )));
        }
        Ok(Self {
            mean_loglik: mean(&per_example_loglik),
            std_error: std_error(&per_example_loglik),
            estimator_name,
            per_example_loglik,
            config_snapshot,
            sample_count_used,
        })
    }

    /// `example_index,loglik` rows with five decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("example_index,loglik\n");
        for (i, v) in self.per_example_loglik.iter().enumerate() {
            writeln!(out, "{i},{v:.5}").expect("writing to a String");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
