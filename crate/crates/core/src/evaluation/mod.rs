//! Prediction metrics, the cannibalization-asymmetry index, and the
//! baselines the stochastic set model is compared against.

mod asymmetry;
mod baselines;
mod harness;
mod metrics;

pub use asymmetry::{asymmetry_exhaustive, asymmetry_index, AsymmetryEstimate, DEFAULT_ASYMMETRY_SAMPLES};
pub use baselines::{
    fit_baselines, fit_independent, fit_mnl, IndependentModel, MnlConfig, MnlFit, MnlModel,
};
pub use harness::{evaluate, train_test_split, Candidate, ModelScore};
pub use metrics::{
    kl_divergence, mape, score, score_model, AssortmentScore, Divergence, MetricsReport,
};
