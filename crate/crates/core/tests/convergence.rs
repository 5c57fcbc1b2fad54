//! Statistical behaviour of CSL against the exact likelihood on a trained tiny RBM.

use csl_core::estimators::csl;
use csl_core::math::mean;
use csl_core::rng::{derive_seed, stream_rng};
use csl_core::sampler::run_chain;
use csl_core::training::{init_rbm, mean_exact_log_likelihood, train_rbm, TrainAlgorithm, TrainConfig};
use csl_core::{BinaryVector, ChainConfig, RbmModel};
use rand::Rng;

/// Noisy 4×4 single-bar images.
fn bars(n: usize, seed: u64) -> Vec<BinaryVector> {
    let mut rng = stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let p = rng.random_range(0..8);
            let bits = (0..16)
                .map(|i| {
                    let on = if p < 4 { i / 4 == p } else { i % 4 == p - 4 };
                    on as u8 ^ rng.random_bool(0.05) as u8
                })
                .collect();
            BinaryVector::new(bits).unwrap()
        })
        .collect()
}

fn fixture() -> (RbmModel, Vec<BinaryVector>, f64) {
    let cfg = TrainConfig {
        algorithm: TrainAlgorithm::ExactGradient,
        n_epochs: 300,
        learning_rate: 0.5,
        ..TrainConfig::default()
    };
    let m = train_rbm(&init_rbm(16, 5, 0, 0.1).unwrap(), &bars(1_000, 1), &cfg).unwrap();
    let test = bars(1_000, 2);
    let exact = mean_exact_log_likelihood(&m, &test).unwrap();
    (m, test, exact)
}

#[test]
fn error_shrinks_from_1k_to_100k_samples() {
    let (m, test, exact) = fixture();
    let mut wins = 0;
    let mut final_errors = Vec::new();
    for r in 0..20 {
        let set = run_chain(&m, &ChainConfig::new(100_000, derive_seed(20, r)).with_thin(10)).unwrap();
        let small = (csl(&m, &set.prefix(1_000).unwrap(), &test).unwrap().mean_loglik - exact).abs();
        let large = (csl(&m, &set, &test).unwrap().mean_loglik - exact).abs();
        wins += (large < small) as usize;
        final_errors.push(large);
    }
    assert!(wins >= 18, "only {wins}/20 replicates improved");
    assert!(final_errors.iter().all(|&e| e < 0.05), "{final_errors:?}");
}

#[test]
fn expected_csl_increases_with_sample_count() {
    let (m, test, exact) = fixture();
    let counts = [100, 1_000, 10_000];
    let mut sums = [0.0; 3];
    let replicates = 200;
    for r in 0..replicates {
        let set = run_chain(&m, &ChainConfig::new(10_000, derive_seed(21, r)).with_thin(10)).unwrap();
        for (k, &n) in counts.iter().enumerate() {
            sums[k] += csl(&m, &set.prefix(n).unwrap(), &test).unwrap().mean_loglik;
        }
    }
    let avg: Vec<f64> = sums.iter().map(|s| s / replicates as f64).collect();
    assert!(avg[0] < avg[1] && avg[1] < avg[2], "{avg:?}");
    assert!(mean(&avg) < exact);
}
