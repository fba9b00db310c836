use rand::seq::SliceRandom;

use super::baselines::{fit_independent, fit_mnl, MnlConfig};
use super::metrics::{score_model, MetricsReport};
use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::estimation::{column_generation_fit, ColumnGenerationConfig};
use crate::model::{log_likelihood, LogLikelihood};
use crate::scalar::Scalar;
use crate::synthetic::{stream, substream};

/// A model family to fit on the training data.
#[derive(Clone, Debug)]
pub enum Candidate {
    Ssm(ColumnGenerationConfig),
    Independent,
    Mnl(MnlConfig),
}

impl Candidate {
    pub fn name(&self) -> &'static str {
        match self {
            Candidate::Ssm(_) => "ssm",
            Candidate::Independent => "independent",
            Candidate::Mnl(_) => "mnl",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelScore<T> {
    pub model: &'static str,
    pub train_log_likelihood: LogLikelihood<T>,
    pub metrics: MetricsReport<T>,
    pub warnings: Vec<String>,
}

/// Fits every candidate on `train` and scores it on `test`.
pub fn evaluate<T: Scalar>(
    candidates: &[Candidate],
    train: &ChoiceDataset,
    test: &ChoiceDataset,
) -> Result<Vec<ModelScore<T>>> {
    if train.is_empty() || test.is_empty() {
        return Err(SsmError::Input("train and test sets must both be nonempty".into()));
    }
    if train.universe() != test.universe() {
        return Err(SsmError::Input("train and test sets have different universes".into()));
    }
    candidates
        .iter()
        .map(|c| {
            let (train_ll, metrics, warnings) = match c {
                Candidate::Ssm(cfg) => {
                    let fit = column_generation_fit::<T>(train, cfg)?;
                    (log_likelihood(&fit.model, train)?, score_model(test, &fit.model)?, Vec::new())
                }
                Candidate::Independent => {
                    let m = fit_independent::<T>(train)?;
                    (log_likelihood(&m, train)?, score_model(test, &m)?, Vec::new())
                }
                Candidate::Mnl(cfg) => {
                    let fit = fit_mnl::<T>(train, cfg)?;
                    (log_likelihood(&fit.model, train)?, score_model(test, &fit.model)?, fit.warnings)
                }
            };
            Ok(ModelScore { model: c.name(), train_log_likelihood: train_ll, metrics, warnings })
        })
        .collect()
}

/// Shuffles the transactions with the seed's split stream and holds out
/// `round(test_fraction · T)` of them.
pub fn train_test_split(data: &ChoiceDataset, test_fraction: f64, seed: u64) -> Result<(ChoiceDataset, ChoiceDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SsmError::Input(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut records = data.records();
    records.shuffle(&mut substream(seed, stream::SPLIT));
    let held = (test_fraction * records.len() as f64).round() as usize;
    if held == 0 || held == records.len() {
        return Err(SsmError::Input(format!("a {test_fraction} split of {} transactions leaves one side empty", records.len())));
    }
    let test = ChoiceDataset::ingest(data.universe(), records[..held].iter().copied())?;
    let train = ChoiceDataset::ingest(data.universe(), records[held..].iter().copied())?;
    Ok((train, test))
}
