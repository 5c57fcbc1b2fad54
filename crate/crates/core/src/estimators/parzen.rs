//! Parzen-window baseline: isotropic Gaussian kernels centred on generated samples.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::EvalReport;
use crate::error::{check_dim, Error, Result};
use crate::math::{isotropic_normal_log_density, logsumexp};

/// `log mean_{x′} N(x; x′, σ² I)`.
pub fn parzen_log_density(generated: &[Vec<f64>], sigma: f64, x: &[f64]) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::Empty("generated sample list"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
    }
    let terms = generated
        .iter()
        .map(|g| {
            check_dim("generated sample", x.len(), g.len())?;
            Ok(isotropic_normal_log_density(x, g, sigma))
        })
        .collect::<Result<Vec<_>>>()?;
    let value = logsumexp(&terms) - (generated.len() as f64).ln();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("Parzen log density ({value})")))
    }
}

fn mean_parzen(generated: &[Vec<f64>], sigma: f64, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points
        .par_iter()
        .map(|x| parzen_log_density(generated, sigma, x))
        .collect()
}

pub fn parzen_report(generated: &[Vec<f64>], sigma: f64, test_set: &[Vec<f64>]) -> Result<EvalReport> {
    if test_set.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let per_example = mean_parzen(generated, sigma, test_set)?;
    EvalReport::new(
        "parzen",
        per_example,
        json!({ "estimator": "parzen", "sigma": sigma }),
        generated.len(),
    )
}

/// 20 log-spaced bandwidths spanning `[1e-2, 1e1]`.
pub fn default_bandwidth_grid() -> Vec<f64> {
    let (lo, hi) = (1e-2f64.ln(), 1e1f64.ln());
    (0..20).map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSelection {
    pub sigma: f64,
    /// `(sigma, mean validation log density)` in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Picks the grid bandwidth with the highest mean validation log density.
///
/// Ties go to the smaller σ; an exactly repeated σ keeps its first occurrence.
pub fn select_bandwidth(generated: &[Vec<f64>], validation: &[Vec<f64>], grid: &[f64]) -> Result<BandwidthSelection> {
    if grid.is_empty() {
        return Err(Error::Empty("bandwidth grid"));
    }
    if validation.is_empty() {
        return Err(Error::Empty("validation set"));
    }
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &sigma in grid {
        let vals = mean_parzen(generated, sigma, validation)?;
        let score = vals.iter().sum::<f64>() / vals.len() as f64;
        scores.push((sigma, score));
        let better = match best {
            None => true,
            Some((bs, bscore)) => score > bscore || (score == bscore && sigma < bs),
        };
        if better {
            best = Some((sigma, score));
        }
    }
    Ok(BandwidthSelection {
        sigma: best.expect("nonempty grid").0,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_kernel_at_query() {
        let v = parzen_log_density(&[vec![0.5]], 1.0, &[0.5]).unwrap();
        assert!((v + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair() {
        let a: f64 = 1.3;
        let v = parzen_log_density(&[vec![-a], vec![a]], 1.0, &[0.0]).unwrap();
        assert!((v - (-0.5 * (2.0 * PI).ln() - a * a / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn far_queries_stay_finite() {
        let v = parzen_log_density(&[vec![0.0]], 0.01, &[100.0]).unwrap();
        assert!(v.is_finite() && v < -1e7);
    }

    #[test]
    fn kernel_integrates_to_one() {
        let samples = vec![vec![-1.0], vec![0.2], vec![2.5]];
        let sigma = 0.4;
        let (lo, hi, n) = (-10.0, 12.0, 22_000);
        let dx = (hi - lo) / n as f64;
        let integral: f64 = (0..n)
            .map(|i| parzen_log_density(&samples, sigma, &[lo + (i as f64 + 0.5) * dx]).unwrap().exp() * dx)
            .sum();
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");
    }

    #[test]
    fn errors_on_bad_inputs() {
        assert!(parzen_log_density(&[], 1.0, &[0.0]).is_err());
        assert!(parzen_log_density(&[vec![0.0]], 0.0, &[0.0]).is_err());
        assert!(parzen_log_density(&[vec![0.0]], -1.0, &[0.0]).is_err());
        assert!(select_bandwidth(&[vec![0.0]], &[vec![0.0]], &[]).is_err());
        assert!(select_bandwidth(&[vec![0.0]], &[], &[1.0]).is_err());
    }

    #[test]
    fn grid_rules() {
        let g = vec![vec![0.0], vec![1.0]];
        let val = vec![vec![0.5]];
        assert_eq!(select_bandwidth(&g, &val, &[0.7]).unwrap().sigma, 0.7);
        let sel = select_bandwidth(&g, &val, &[3.0, 0.5, 0.5, 9.0]).unwrap();
        assert_eq!(sel.sigma, 0.5);
        assert_eq!(sel.scores.len(), 4);
        let grid = default_bandwidth_grid();
        assert_eq!(grid.len(), 20);
        assert!((grid[0] - 0.01).abs() < 1e-15 && (grid[19] - 10.0).abs() < 1e-12);
    }
}
