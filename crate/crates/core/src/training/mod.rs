//! Trainers producing evaluation subjects: CD-k, PCD and exact-gradient RBMs, EM for GMMs.

mod gmm;
mod rbm;

pub use gmm::{em_step, fit_gmm, fit_gmm_with_trace, gmm_mean_log_likelihood, GmmFit};
pub use rbm::{
    exact_log_likelihood_gradient, init_rbm, mean_exact_log_likelihood, model_expectation, train_rbm,
    RbmGradient, TrainAlgorithm, TrainConfig,
};
