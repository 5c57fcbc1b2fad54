//! Expectation-maximization for mixtures of isotropic Gaussians with one shared σ.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::math::{isotropic_normal_log_density, logsumexp};
use crate::models::GmmModel;
use crate::rng::stream_rng;

/// Relative floor below which σ counts as collapsed.
const COLLAPSE_RATIO: f64 = 1e-8;
const MONOTONE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Mean log-likelihood before the first iteration and after each one.
    pub log_likelihood_trace: Vec<f64>,
}

fn check_data(data: &[Vec<f64>]) -> Result<usize> {
    let dim = data.first().ok_or(Error::Empty("GMM data"))?.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("GMM data must have positive dimension".into()));
    }
    for x in data {
        check_dim("data point", dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GMM data".into()));
        }
    }
    Ok(dim)
}

/// Mean log-likelihood of `data` under `model`.
pub fn gmm_mean_log_likelihood(model: &GmmModel, data: &[Vec<f64>]) -> Result<f64> {
    let mut total = 0.0;
    for x in data {
        total += model.log_density(x)?;
    }
    Ok(total / data.len() as f64)
}

fn data_scale(data: &[Vec<f64>], dim: usize) -> f64 {
    let n = data.len() as f64;
    let mut var = 0.0;
    for d in 0..dim {
        let m = data.iter().map(|x| x[d]).sum::<f64>() / n;
        var += data.iter().map(|x| (x[d] - m).powi(2)).sum::<f64>() / n;
    }
    (var / dim as f64).sqrt()
}

/// One EM iteration. Returns the updated model and the mean log-likelihood of
/// `data` under the input model (computed during the E step).
pub fn em_step(model: &GmmModel, data: &[Vec<f64>]) -> Result<(GmmModel, f64)> {
    let dim = check_data(data)?;
    check_dim("data dimension", model.dim(), dim)?;
    let k = model.n_components();
    let n = data.len();
    let mut resp = vec![0.0; n * k];
    let mut ll = 0.0;
    let mut terms = vec![0.0; k];
    for (i, x) in data.iter().enumerate() {
        for (c, t) in terms.iter_mut().enumerate() {
            *t = model.log_weights()[c] + isotropic_normal_log_density(x, &model.means()[c], model.sigma());
        }
        let norm = logsumexp(&terms);
        ll += norm;
        for c in 0..k {
            resp[i * k + c] = (terms[c] - norm).exp();
        }
    }
    let mut counts = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    for (i, x) in data.iter().enumerate() {
        for c in 0..k {
            let r = resp[i * k + c];
            counts[c] += r;
            for (m, &v) in means[c].iter_mut().zip(x) {
                *m += r * v;
            }
        }
    }
    for c in 0..k {
        if counts[c] > 0.0 {
            means[c].iter_mut().for_each(|m| *m /= counts[c]);
        } else {
            means[c] = model.means()[c].clone();
        }
    }
    let mut sq = 0.0;
    for (i, x) in data.iter().enumerate() {
        for c in 0..k {
            let d2: f64 = x.iter().zip(&means[c]).map(|(a, b)| (a - b) * (a - b)).sum();
            sq += resp[i * k + c] * d2;
        }
    }
    let sigma = (sq / (n * dim) as f64).sqrt();
    let scale = data_scale(data, dim).max(f64::MIN_POSITIVE);
    if !(sigma > COLLAPSE_RATIO * scale) {
        return Err(Error::ComponentCollapse(sigma));
    }
    let total: f64 = counts.iter().sum();
    let log_weights: Vec<f64> = counts.iter().map(|c| (c / total).ln()).collect();
    let norm = logsumexp(&log_weights);
    let log_weights = log_weights.iter().map(|l| l - norm).collect();
    Ok((GmmModel::new(log_weights, means, sigma)?, ll / n as f64))
}

/// k-means++ seeding of the means; σ from the pooled data variance; uniform weights.
fn initial_model(data: &[Vec<f64>], n_components: usize, seed: u64) -> Result<GmmModel> {
    let dim = data[0].len();
    let mut rng = stream_rng(seed, 0);
    let mut means = vec![data[rng.random_range(0..data.len())].clone()];
    let mut d2: Vec<f64> = vec![f64::INFINITY; data.len()];
    while means.len() < n_components {
        let last = means.last().expect("nonempty");
        for (d, x) in d2.iter_mut().zip(data) {
            let dist: f64 = x.iter().zip(last).map(|(a, b)| (a - b) * (a - b)).sum();
            *d = d.min(dist);
        }
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            pick
        } else {
            rng.random_range(0..data.len())
        };
        means.push(data[next].clone());
    }
    let sigma = data_scale(data, dim);
    if !(sigma > 0.0) {
        return Err(Error::ComponentCollapse(sigma));
    }
    let lw = -(n_components as f64).ln();
    GmmModel::new(vec![lw; n_components], means, sigma)
}

/// Fits a shared-σ GMM by EM, checking that the log-likelihood never decreases.
pub fn fit_gmm_with_trace(data: &[Vec<f64>], n_components: usize, seed: u64, n_iters: usize) -> Result<GmmFit> {
    check_data(data)?;
    if n_components == 0 {
        return Err(Error::InvalidParameter("n_components must be positive".into()));
    }
    if data.len() < n_components {
        return Err(Error::InvalidParameter(format!(
            "{} data points cannot support {n_components} components",
            data.len()
        )));
    }
    let mut model = initial_model(data, n_components, seed)?;
    let mut trace = Vec::with_capacity(n_iters + 1);
    for it in 0..n_iters {
        let (next, ll) = em_step(&model, data)?;
        if let Some(&prev) = trace.last() {
            if ll < prev - MONOTONE_TOLERANCE {
                return Err(Error::NonMonotone { iteration: it, decrease: prev - ll });
            }
        }
        trace.push(ll);
        model = next;
    }
    let final_ll = gmm_mean_log_likelihood(&model, data)?;
    if let Some(&prev) = trace.last() {
        if final_ll < prev - MONOTONE_TOLERANCE {
            return Err(Error::NonMonotone { iteration: n_iters, decrease: prev - final_ll });
        }
    }
    trace.push(final_ll);
    Ok(GmmFit { model, log_likelihood_trace: trace })
}

pub fn fit_gmm(data: &[Vec<f64>], n_components: usize, seed: u64, n_iters: usize) -> Result<GmmModel> {
    Ok(fit_gmm_with_trace(data, n_components, seed, n_iters)?.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn two_mode_data(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 7);
        (0..n)
            .map(|_| {
                let m = if rng.random_bool(0.5) { 3.0 } else { -3.0 };
                let z: f64 = StandardNormal.sample(&mut rng);
                vec![m + 0.5 * z]
            })
            .collect()
    }

    #[test]
    fn single_component_is_closed_form() {
        let data = vec![vec![1.0, 2.0], vec![3.0, -1.0], vec![2.0, 5.0], vec![0.0, 2.0]];
        let m = fit_gmm(&data, 1, 0, 1).unwrap();
        assert!((m.means()[0][0] - 1.5).abs() < 1e-12);
        assert!((m.means()[0][1] - 2.0).abs() < 1e-12);
        // per-coordinate population variances 1.25 and 4.5
        assert!((m.sigma().powi(2) - (1.25 + 4.5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_two_separated_modes() {
        let data = two_mode_data(10_000, 1);
        let fit = fit_gmm_with_trace(&data, 2, 3, 50).unwrap();
        let mut means: Vec<f64> = fit.model.means().iter().map(|m| m[0]).collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 3.0).abs() < 0.1 && (means[1] - 3.0).abs() < 0.1, "{means:?}");
        assert!((fit.model.sigma() - 0.5).abs() < 0.05);
        assert!(fit.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    }

    #[test]
    fn em_step_from_truth_does_not_decrease_likelihood() {
        let data = two_mode_data(2_000, 2);
        let truth = GmmModel::from_weights(&[0.5, 0.5], vec![vec![-3.0], vec![3.0]], 0.5).unwrap();
        let (next, before) = em_step(&truth, &data).unwrap();
        assert!(gmm_mean_log_likelihood(&next, &data).unwrap() >= before);
    }

    #[test]
    fn collapse_and_size_errors() {
        let data = vec![vec![1.0]; 5];
        assert!(matches!(fit_gmm(&data, 1, 0, 3), Err(Error::ComponentCollapse(_))));
        assert!(fit_gmm(&[vec![0.0]], 2, 0, 3).is_err());
        assert!(fit_gmm(&[], 1, 0, 3).is_err());
    }
}
