//! Stochastic set model (SSM) of discrete choice.
//!
//! A customer samples a preselected set of products from a distribution
//! `λ`, then picks uniformly among the preselected products that are
//! offered, or walks away if none are. This crate computes exact choice
//! probabilities, recovers `λ` from complete choice-probability tables,
//! checks the axioms that characterize SSM data, fits `λ` to transactions
//! by EM with column generation, and optimizes assortments exactly (dynamic
//! program over integral prices) or approximately (price discretization).
//!
//! All numeric code is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases at the crate root fix it to `f64`.

pub mod assortment;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod identification;
pub mod io;
pub mod itemset;
pub mod model;
pub mod ranking;
pub mod scalar;
pub mod synthetic;
pub mod table;

#[cfg(test)]
pub(crate) mod testutil;

pub use dataset::ChoiceDataset;
pub use error::{Result, SsmError};
pub use itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
pub use model::{log_likelihood, ChoiceModel, LogLikelihood};
pub use scalar::Scalar;

pub type StochasticSetModel = model::StochasticSetModel<f64>;
pub type ConditionalSetDistribution = model::ConditionalSetDistribution<f64>;
pub type ChoiceProbabilityTable = table::ChoiceProbabilityTable<f64>;
pub type RankingDistribution = ranking::RankingDistribution<f64>;
pub type IdentificationReport = identification::IdentificationReport<f64>;
pub type PriceVector = assortment::PriceVector<f64>;
pub type AssortmentSolution = assortment::AssortmentSolution<f64>;
pub type MnlModel = evaluation::MnlModel<f64>;
pub type IndependentModel = evaluation::IndependentModel<f64>;
