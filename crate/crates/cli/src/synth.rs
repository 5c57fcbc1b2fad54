//! Desk-scale synthetic datasets.

use anyhow::Result;
use csl_core::sampler::{gmm_sample_latent, gmm_sample_observations};
use csl_core::{BinaryVector, ChainConfig, GmmModel};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::validation;

pub const BARS_SIDE: usize = 4;
pub const BARS_VISIBLE: usize = BARS_SIDE * BARS_SIDE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Generator {
    /// 4×4 images holding one full horizontal or vertical bar, each pixel
    /// flipped independently with probability `noise`.
    TinyBars { n: usize, noise: f64 },
    /// Real vectors drawn from `model`.
    GmmBlobs { n: usize, model: GmmModel },
}

/// The eight noiseless 4×4 bar images, rows first, pixels row-major.
pub fn bar_patterns() -> Vec<BinaryVector> {
    (0..2 * BARS_SIDE)
        .map(|p| {
            let bits = (0..BARS_VISIBLE)
                .map(|i| {
                    let (r, c) = (i / BARS_SIDE, i % BARS_SIDE);
                    (if p < BARS_SIDE { r == p } else { c == p - BARS_SIDE }) as u8
                })
                .collect();
            BinaryVector::new(bits).expect("binary")
        })
        .collect()
}

pub fn make_synthetic(generator: &Generator, seed: u64) -> Result<Dataset> {
    match generator {
        Generator::TinyBars { n, noise } => {
            if *n == 0 {
                return Err(validation("tiny-bars needs n > 0"));
            }
            if !(0.0..=1.0).contains(noise) {
                return Err(validation(format!("noise rate must lie in [0, 1], got {noise}")));
            }
            let patterns = bar_patterns();
            let mut rng = csl_core::rng::stream_rng(seed, 0);
            let rows = (0..*n)
                .map(|_| {
                    let mut bits = patterns[rng.random_range(0..patterns.len())].bits().to_vec();
                    for b in bits.iter_mut() {
                        if rng.random_bool(*noise) {
                            *b ^= 1;
                        }
                    }
                    BinaryVector::new(bits).expect("binary")
                })
                .collect();
            Dataset::binary(rows)
        }
        Generator::GmmBlobs { n, model } => {
            if *n == 0 {
                return Err(validation("gmm-blobs needs n > 0"));
            }
            let latents = gmm_sample_latent(model, &ChainConfig::new(*n, seed))?;
            Dataset::real(gmm_sample_observations(model, &latents, seed)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_bars_are_pure_patterns() {
        let pats = bar_patterns();
        assert_eq!(pats.len(), 8);
        assert!(pats.iter().all(|p| p.count_ones() == 4));
        let d = make_synthetic(&Generator::TinyBars { n: 500, noise: 0.0 }, 3).unwrap();
        assert!(d.binary_rows().unwrap().iter().all(|r| pats.contains(r)));
    }

    #[test]
    fn same_seed_same_data() {
        let g = Generator::TinyBars { n: 50, noise: 0.1 };
        assert_eq!(make_synthetic(&g, 5).unwrap(), make_synthetic(&g, 5).unwrap());
        assert_ne!(make_synthetic(&g, 5).unwrap(), make_synthetic(&g, 6).unwrap());
    }

    #[test]
    fn blob_means_within_three_standard_errors() {
        let model = GmmModel::from_weights(&[1.0], vec![vec![2.0, -1.0]], 0.7).unwrap();
        let n = 5_000;
        let d = make_synthetic(&Generator::GmmBlobs { n, model }, 8).unwrap();
        let rows = d.real_rows().unwrap();
        for (k, target) in [2.0, -1.0].into_iter().enumerate() {
            let m = rows.iter().map(|r| r[k]).sum::<f64>() / n as f64;
            assert!((m - target).abs() < 3.0 * 0.7 / (n as f64).sqrt(), "{m}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(make_synthetic(&Generator::TinyBars { n: 10, noise: 1.5 }, 0).is_err());
        assert!(make_synthetic(&Generator::TinyBars { n: 0, noise: 0.1 }, 0).is_err());
    }
}
