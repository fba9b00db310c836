use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, OUTSIDE};
use crate::model::ChoiceModel;
use crate::scalar::{CompensatedSum, Scalar};

/// A KL divergence, infinite when a prediction of zero meets an observed
/// choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Divergence<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }

    pub fn to_scalar(self) -> T {
        self.finite().unwrap_or_else(T::infinity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssortmentScore<T> {
    pub assortment: ItemSet,
    pub transactions: u64,
    pub kl: Divergence<T>,
    pub mape: T,
    pub skipped_cells: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport<T> {
    pub kl: Divergence<T>,
    pub mape: T,
    /// Cells `(S, i)` with empirical frequency zero, left out of MAPE.
    pub skipped_cells: usize,
    pub per_assortment: Vec<AssortmentScore<T>>,
}

fn require_nonempty(test: &ChoiceDataset) -> Result<()> {
    if test.is_empty() {
        Err(SsmError::Input("test set has no transactions".into()))
    } else {
        Ok(())
    }
}

fn score_assortment<T: Scalar, F>(test: &ChoiceDataset, s: ItemSet, predict: &F) -> AssortmentScore<T>
where
    F: Fn(ItemSet, ProductId) -> T,
{
    let n_s = test.assortment_total(s);
    let denom = T::from_count(n_s);
    let mut kl = CompensatedSum::new();
    let mut infinite = false;
    let mut ape = CompensatedSum::new();
    let mut skipped = 0;
    for i in std::iter::once(OUTSIDE).chain(s.iter()) {
        let tau = test.count(s, i);
        if tau == 0 {
            skipped += 1;
            continue;
        }
        let empirical = T::from_count(tau) / denom;
        let predicted = predict(s, i);
        if predicted > T::zero() {
            kl.add(-empirical * (predicted / empirical).ln());
        } else {
            infinite = true;
        }
        ape.add((predicted - empirical).abs() / empirical);
    }
    AssortmentScore {
        assortment: s,
        transactions: n_s,
        kl: if infinite { Divergence::Infinite } else { Divergence::Finite(kl.value()) },
        mape: ape.value(),
        skipped_cells: skipped,
    }
}

/// KL divergence and MAPE of `predict` against the empirical choice
/// frequencies of `test`, each weighted by transactions per assortment.
pub fn score<T: Scalar, F>(test: &ChoiceDataset, predict: F) -> Result<MetricsReport<T>>
where
    F: Fn(ItemSet, ProductId) -> T,
{
    require_nonempty(test)?;
    let per_assortment: Vec<AssortmentScore<T>> =
        test.assortments().map(|s| score_assortment(test, s, &predict)).collect();
    let total = T::from_count(test.total());
    let mut kl = CompensatedSum::new();
    let mut infinite = false;
    let mut mape = CompensatedSum::new();
    for a in &per_assortment {
        let w = T::from_count(a.transactions);
        match a.kl {
            Divergence::Finite(v) => kl.add(w * v),
            Divergence::Infinite => infinite = true,
        }
        mape.add(w * a.mape);
    }
    Ok(MetricsReport {
        kl: if infinite { Divergence::Infinite } else { Divergence::Finite(kl.value() / total) },
        mape: mape.value() / total,
        skipped_cells: per_assortment.iter().map(|a| a.skipped_cells).sum(),
        per_assortment,
    })
}

pub fn score_model<T: Scalar, M: ChoiceModel<T> + ?Sized>(test: &ChoiceDataset, model: &M) -> Result<MetricsReport<T>> {
    if model.universe() != test.universe() {
        return Err(SsmError::Input("model and test data have different universes".into()));
    }
    score(test, |s, i| model.probability_unchecked(s, i))
}

pub fn kl_divergence<T: Scalar, F>(test: &ChoiceDataset, predict: F) -> Result<Divergence<T>>
where
    F: Fn(ItemSet, ProductId) -> T,
{
    Ok(score(test, predict)?.kl)
}

/// MAPE with the number of skipped zero-frequency cells.
pub fn mape<T: Scalar, F>(test: &ChoiceDataset, predict: F) -> Result<(T, usize)>
where
    F: Fn(ItemSet, ProductId) -> T,
{
    let r = score(test, predict)?;
    Ok((r.mape, r.skipped_cells))
}
