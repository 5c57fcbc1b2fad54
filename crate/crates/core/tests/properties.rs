use csl_core::estimators::{csl, csl_exact_expectation, EvalReport};
use csl_core::math::{logsumexp, sigmoid};
use csl_core::models::LatentConditional;
use csl_core::sampler::{effective_sample_size, format, run_chain, LatentKind};
use csl_core::training::{fit_gmm_with_trace, init_rbm, train_rbm, TrainAlgorithm, TrainConfig};
use csl_core::{AnyModel, BinaryVector, ChainConfig, GmmModel, LatentSampleSet, LatentState, RbmModel};
use proptest::prelude::*;

fn rbm_strategy(max_v: usize, max_h: usize, scale: f64) -> impl Strategy<Value = RbmModel> {
    (1..=max_v, 1..=max_h).prop_flat_map(move |(nv, nh)| {
        (
            prop::collection::vec(-scale..scale, nv * nh),
            prop::collection::vec(-scale..scale, nv),
            prop::collection::vec(-scale..scale, nh),
        )
            .prop_map(move |(w, bv, bh)| RbmModel::new(nv, nh, w, bv, bh).unwrap())
    })
}

fn all_configs(n: usize) -> Vec<BinaryVector> {
    (0..1u64 << n).map(|c| BinaryVector::from_index(c, n)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_probabilities_sum_to_one(m in rbm_strategy(6, 5, 2.0)) {
        let lls = m.exact_log_likelihoods(&all_configs(m.n_visible())).unwrap();
        prop_assert!((logsumexp(&lls).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_factorizations_of_the_marginal_agree(m in rbm_strategy(6, 5, 2.0), code in 0u64..64) {
        let x = BinaryVector::from_index(code % (1 << m.n_visible()), m.n_visible());
        let direct = m.exact_log_likelihood(&x).unwrap();
        let via_latents = csl_exact_expectation(&m, &x).unwrap();
        prop_assert!((direct - via_latents).abs() < 1e-9, "{} vs {}", direct, via_latents);
    }

    #[test]
    fn conditional_means_match_column_order_oracle(m in rbm_strategy(7, 6, 3.0), vc in 0u64..128, hc in 0u64..64) {
        let (nv, nh) = (m.n_visible(), m.n_hidden());
        let v = BinaryVector::from_index(vc % (1 << nv), nv);
        let h = BinaryVector::from_index(hc % (1 << nh), nh);
        let ph = m.cond_mean_h_given_x(&v).unwrap();
        for j in 0..nh {
            let mut a = m.bias_hidden()[j];
            for i in 0..nv {
                a += m.weight(i, j) * v.bits()[i] as f64;
            }
            prop_assert!((ph[j] - sigmoid(a)).abs() < 1e-12);
            prop_assert!(ph[j] > 0.0 && ph[j] < 1.0);
        }
        let pv = m.cond_mean_x_given_h(&h).unwrap();
        for i in 0..nv {
            let mut a = m.bias_visible()[i];
            for j in (0..nh).rev() {
                a += m.weight(i, j) * h.bits()[j] as f64;
            }
            prop_assert!((pv[i] - sigmoid(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn rbm_conditional_is_a_log_probability(m in rbm_strategy(8, 4, 40.0), vc in 0u64..256, hc in 0u64..16) {
        let x = BinaryVector::from_index(vc % (1 << m.n_visible()), m.n_visible());
        let h = LatentState::Binary(BinaryVector::from_index(hc % (1 << m.n_hidden()), m.n_hidden()));
        let lp = m.log_p_x_given_h(&x, &h).unwrap();
        prop_assert!(lp.is_finite() && lp <= 0.0);
    }

    #[test]
    fn single_component_gmm_marginal_is_its_conditional(
        mean in prop::collection::vec(-5.0f64..5.0, 1..4),
        sigma in 0.1f64..3.0,
        shift in -3.0f64..3.0,
    ) {
        let x: Vec<f64> = mean.iter().map(|m| m + shift).collect();
        let g = GmmModel::new(vec![0.0], vec![mean], sigma).unwrap();
        prop_assert_eq!(g.exact_log_likelihood(&x).unwrap(), g.log_p_x_given_h(&x, &LatentState::Component(0)).unwrap());
    }

    #[test]
    fn gmm_weights_are_log_normalized(w in prop::collection::vec(0.001f64..10.0, 1..6)) {
        let k = w.len();
        let g = GmmModel::from_weights(&w, vec![vec![0.0]; k], 1.0).unwrap();
        prop_assert!(logsumexp(g.log_weights()).abs() < 1e-10);
    }

    #[test]
    fn csl_is_invariant_under_sample_permutation(m in rbm_strategy(6, 5, 2.0), seed in 0u64..1000, rot in 1usize..30) {
        let set = run_chain(&m, &ChainConfig::new(30, seed).with_thin(1).with_burn_in(5)).unwrap();
        let mut shuffled = set.samples().to_vec();
        shuffled.rotate_left(rot);
        shuffled.reverse();
        let other = LatentSampleSet::from_parts(shuffled, LatentKind::for_rbm(&m), set.provenance().clone()).unwrap();
        let xs = all_configs(m.n_visible());
        let a = csl(&m, &set, &xs).unwrap();
        let b = csl(&m, &other, &xs).unwrap();
        for (p, q) in a.per_example_loglik.iter().zip(&b.per_example_loglik) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn report_summaries_are_consistent(vals in prop::collection::vec(-100.0f64..0.0, 1..50)) {
        let r = EvalReport::new("t", vals.clone(), serde_json::Value::Null, 1).unwrap();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        prop_assert!((r.mean_loglik - m).abs() < 1e-12);
        prop_assert!(r.std_error >= 0.0);
    }

    #[test]
    fn thinning_equals_subselection(m in rbm_strategy(5, 4, 2.0), seed in 0u64..1000, k in 1usize..5) {
        let dense = run_chain(&m, &ChainConfig::new(12 * k, seed).with_thin(1).with_burn_in(3)).unwrap();
        let thinned = run_chain(&m, &ChainConfig::new(12, seed).with_thin(k).with_burn_in(3)).unwrap();
        let picked: Vec<_> = dense.samples().iter().skip(k - 1).step_by(k).cloned().collect();
        prop_assert_eq!(picked.as_slice(), thinned.samples());
    }

    #[test]
    fn sample_files_and_models_round_trip(m in rbm_strategy(6, 9, 5.0), seed in 0u64..100) {
        let set = run_chain(&m, &ChainConfig::new(20, seed).with_chains(4).with_thin(1)).unwrap();
        prop_assert_eq!(format::decode(&format::encode(&set).unwrap()).unwrap(), set);
        let model = AnyModel::Rbm(m);
        let back: AnyModel = serde_json::from_str(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn ess_lies_in_range(xs in prop::collection::vec(-10.0f64..10.0, 10..300)) {
        prop_assume!(xs.iter().any(|&x| x != xs[0]));
        let ess = effective_sample_size(&xs).unwrap();
        prop_assert!(ess > 0.0 && ess <= xs.len() as f64);
    }

    #[test]
    fn em_never_decreases_likelihood(
        xs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6..60),
        k in 1usize..4,
        seed in 0u64..50,
    ) {
        let fit = fit_gmm_with_trace(&xs, k, seed, 15).unwrap();
        prop_assert!(fit.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-8));
    }

    #[test]
    fn training_keeps_parameters_finite(
        rows in prop::collection::vec(prop::collection::vec(0u8..=1, 5), 1..20),
        alg in prop::sample::select(vec![TrainAlgorithm::Cd, TrainAlgorithm::Pcd, TrainAlgorithm::ExactGradient]),
        lr in 0.01f64..2.0,
    ) {
        let data: Vec<BinaryVector> = rows.into_iter().map(|r| BinaryVector::new(r).unwrap()).collect();
        let cfg = TrainConfig { algorithm: alg, learning_rate: lr, n_epochs: 5, batch_size: 4, ..TrainConfig::default() };
        let m = train_rbm(&init_rbm(5, 3, 0, 0.5).unwrap(), &data, &cfg).unwrap();
        prop_assert!(m.weights().iter().chain(m.bias_visible()).chain(m.bias_hidden()).all(|p| p.is_finite()));
    }
}
