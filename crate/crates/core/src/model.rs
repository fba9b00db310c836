//! The stochastic set model and the generic choice-model interface.
//!
//! A stochastic set model is a probability distribution `λ` over subsets of
//! products. A customer draws a set `C ~ λ`, intersects it with the offered
//! assortment `S`, and picks uniformly from `C ∩ S`, or takes the outside
//! option when the intersection is empty.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};

/// Anything that assigns choice probabilities `P_j(S)`.
pub trait ChoiceModel<T: Scalar> {
    fn universe(&self) -> ProductUniverse;

    /// `P_j(S)` without argument validation. Callers guarantee
    /// `S ⊆ N` and `j ∈ S ∪ {0}`.
    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T;

    /// `P_j(S)`; `j` must be offered in `S` or be the outside option.
    fn probability(&self, assortment: ItemSet, choice: ProductId) -> Result<T> {
        let universe = self.universe();
        universe.check_set(assortment)?;
        if choice != OUTSIDE {
            universe.check_product(choice)?;
            if !assortment.contains(choice) {
                return Err(SsmError::Domain(format!("product {choice} is not offered in {assortment}")));
            }
        }
        Ok(self.probability_unchecked(assortment, choice))
    }

    /// Probabilities over `S ∪ {0}`, outside option first, then offered
    /// products in ascending id order.
    fn choice_distribution(&self, assortment: ItemSet) -> Result<Vec<(ProductId, T)>> {
        self.universe().check_set(assortment)?;
        Ok(std::iter::once(OUTSIDE)
            .chain(assortment.iter())
            .map(|j| (j, self.probability_unchecked(assortment, j)))
            .collect())
    }

    /// `Δ_k P_j(S) = P_j(S∖{k}) − P_j(S)`: the demand `k` takes from `j`
    /// in `S`. Requires `j ∈ S` and `j ≠ k`.
    fn cannibalization_effect(&self, assortment: ItemSet, j: ProductId, k: ProductId) -> T {
        self.probability_unchecked(assortment.without(k), j) - self.probability_unchecked(assortment, j)
    }
}

impl<T: Scalar, M: ChoiceModel<T> + ?Sized> ChoiceModel<T> for &M {
    fn universe(&self) -> ProductUniverse {
        (**self).universe()
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        (**self).probability_unchecked(assortment, choice)
    }

    fn choice_distribution(&self, assortment: ItemSet) -> Result<Vec<(ProductId, T)>> {
        (**self).choice_distribution(assortment)
    }

    fn cannibalization_effect(&self, assortment: ItemSet, j: ProductId, k: ProductId) -> T {
        (**self).cannibalization_effect(assortment, j, k)
    }
}

/// Log-likelihood of a dataset; `Impossible` when some observed choice has
/// probability zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LogLikelihood<T> {
    Finite(T),
    Impossible,
}

impl<T: Scalar> LogLikelihood<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            LogLikelihood::Finite(v) => Some(v),
            LogLikelihood::Impossible => None,
        }
    }

    pub fn is_impossible(self) -> bool {
        matches!(self, LogLikelihood::Impossible)
    }

    /// `Impossible` maps to negative infinity, for comparisons and display.
    pub fn to_scalar(self) -> T {
        self.finite().unwrap_or_else(T::neg_infinity)
    }
}

impl<T: Scalar> PartialOrd for LogLikelihood<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_scalar().partial_cmp(&other.to_scalar())
    }
}

/// `Σ τ(S, i) log P_i(S)` under any choice model. Universes must match.
pub fn log_likelihood<T: Scalar, M: ChoiceModel<T> + ?Sized>(
    model: &M,
    data: &ChoiceDataset,
) -> Result<LogLikelihood<T>> {
    if model.universe() != data.universe() {
        return Err(SsmError::Input("model and data have different universes".into()));
    }
    let mut acc = CompensatedSum::new();
    for (s, i, tau) in data.cells() {
        let p = model.probability_unchecked(s, i);
        if p <= T::zero() {
            return Ok(LogLikelihood::Impossible);
        }
        acc.add(T::from_count(tau) * p.ln());
    }
    Ok(LogLikelihood::Finite(acc.value()))
}

/// A stochastic set model: distribution `λ` over preselected sets.
///
/// The support is kept sorted by mask so that every sum over it runs in a
/// deterministic order.
#[derive(Clone, PartialEq)]
pub struct StochasticSetModel<T> {
    universe: ProductUniverse,
    support: Vec<(ItemSet, T)>,
    cumulative: Vec<T>,
}

impl<T: Scalar> StochasticSetModel<T> {
    /// Builds a model; duplicate sets merge their weights. Fails unless all
    /// weights are nonnegative and they sum to one within the scalar's
    /// weight tolerance.
    pub fn new<I>(universe: ProductUniverse, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemSet, T)>,
    {
        let support = Self::merge(universe, entries)?;
        let total = compensated_sum(support.iter().map(|e| e.1));
        if (total - T::one()).abs() > T::weight_tolerance() {
            return Err(SsmError::Domain(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self::from_sorted(universe, support))
    }

    /// Builds a model after rescaling the weights to sum to one.
    pub fn normalized<I>(universe: ProductUniverse, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemSet, T)>,
    {
        let mut support = Self::merge(universe, entries)?;
        let total = compensated_sum(support.iter().map(|e| e.1));
        if total <= T::zero() {
            return Err(SsmError::Domain("cannot normalize weights with zero total".into()));
        }
        for e in &mut support {
            e.1 /= total;
        }
        Ok(Self::from_sorted(universe, support))
    }

    fn merge<I>(universe: ProductUniverse, entries: I) -> Result<Vec<(ItemSet, T)>>
    where
        I: IntoIterator<Item = (ItemSet, T)>,
    {
        let mut merged: BTreeMap<ItemSet, T> = BTreeMap::new();
        for (set, w) in entries {
            universe.check_set(set)?;
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(SsmError::Domain(format!("weight of {set} is {w}, expected a finite value ≥ 0")));
            }
            *merged.entry(set).or_insert_with(T::zero) += w;
        }
        if merged.is_empty() {
            return Err(SsmError::Domain("empty support".into()));
        }
        Ok(merged.into_iter().collect())
    }

    fn from_sorted(universe: ProductUniverse, support: Vec<(ItemSet, T)>) -> Self {
        let mut acc = T::zero();
        let cumulative = support
            .iter()
            .map(|e| {
                acc += e.1;
                acc
            })
            .collect();
        Self { universe, support, cumulative }
    }

    /// The model that puts all mass on the empty set (everyone walks away).
    pub fn no_purchase(universe: ProductUniverse) -> Self {
        Self::from_sorted(universe, vec![(ItemSet::EMPTY, T::one())])
    }

    #[inline]
    pub fn universe(&self) -> ProductUniverse {
        self.universe
    }

    #[inline]
    pub fn support(&self) -> &[(ItemSet, T)] {
        &self.support
    }

    pub fn weight(&self, set: ItemSet) -> T {
        self.support
            .binary_search_by_key(&set, |e| e.0)
            .map(|k| self.support[k].1)
            .unwrap_or_else(|_| T::zero())
    }

    /// Largest preselected-set cardinality in the support.
    pub fn max_set_size(&self) -> usize {
        self.support.iter().map(|e| e.0.len()).max().unwrap_or(0)
    }

    /// Drops support entries with weight at or below `threshold` and
    /// renormalizes.
    pub fn pruned(&self, threshold: T) -> Result<Self> {
        Self::normalized(
            self.universe,
            self.support.iter().copied().filter(|e| e.1 > threshold),
        )
    }

    /// `λ(·|S)`: the distribution of `C ∩ S` for `C ~ λ`. Zero-weight
    /// entries are omitted.
    pub fn conditional_distribution(&self, assortment: ItemSet) -> Result<ConditionalSetDistribution<T>> {
        self.universe.check_set(assortment)?;
        let mut merged: BTreeMap<ItemSet, CompensatedSum<T>> = BTreeMap::new();
        for &(c, w) in &self.support {
            merged.entry(c.intersection(assortment)).or_default().add(w);
        }
        let entries = merged
            .into_iter()
            .map(|(s, acc)| (s, acc.value()))
            .filter(|e| e.1 > T::zero())
            .collect();
        Ok(ConditionalSetDistribution { assortment, entries })
    }

    /// Two-stage draw: `C ~ λ`, then a uniform member of `C ∩ S`, or the
    /// outside option when the intersection is empty.
    pub fn sample_choice<R: Rng + ?Sized>(&self, assortment: ItemSet, rng: &mut R) -> Result<ProductId> {
        self.universe.check_set(assortment)?;
        Ok(self.sample_unchecked(assortment, rng))
    }

    pub(crate) fn sample_unchecked<R: Rng + ?Sized>(&self, assortment: ItemSet, rng: &mut R) -> ProductId {
        let total = *self.cumulative.last().expect("nonempty support");
        let u = T::lit(rng.random::<f64>()) * total;
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.support.len() - 1);
        let offered = self.support[k].0.intersection(assortment);
        if offered.is_empty() {
            return OUTSIDE;
        }
        let pick = rng.random_range(0..offered.len());
        offered.iter().nth(pick).expect("index within set")
    }
}

impl<T: Scalar> ChoiceModel<T> for StochasticSetModel<T> {
    fn universe(&self) -> ProductUniverse {
        self.universe
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        let mut acc = CompensatedSum::new();
        if choice == OUTSIDE {
            for &(c, w) in &self.support {
                if !c.intersects(assortment) {
                    acc.add(w);
                }
            }
        } else {
            for &(c, w) in &self.support {
                if c.contains(choice) {
                    acc.add(w / T::from_count(c.intersection(assortment).len() as u64));
                }
            }
        }
        acc.value()
    }

    fn choice_distribution(&self, assortment: ItemSet) -> Result<Vec<(ProductId, T)>> {
        self.universe.check_set(assortment)?;
        let mut acc: Vec<CompensatedSum<T>> = vec![CompensatedSum::new(); self.universe.n() + 1];
        for &(c, w) in &self.support {
            let offered = c.intersection(assortment);
            if offered.is_empty() {
                acc[OUTSIDE].add(w);
            } else {
                let share = w / T::from_count(offered.len() as u64);
                for j in offered.iter() {
                    acc[j].add(share);
                }
            }
        }
        Ok(std::iter::once(OUTSIDE)
            .chain(assortment.iter())
            .map(|j| (j, acc[j].value()))
            .collect())
    }

    /// Only sets holding both `j` and `k` lose share to `k`; each gives up
    /// `λ(C) (1/(m−1) − 1/m) = λ(C) / (m(m−1))` with `m = |C ∩ S|`. The
    /// expression is symmetric in `j` and `k`, so the symmetric
    /// cannibalization identity holds bit for bit.
    fn cannibalization_effect(&self, assortment: ItemSet, j: ProductId, k: ProductId) -> T {
        if !assortment.contains(k) {
            return T::zero();
        }
        let mut acc = CompensatedSum::new();
        for &(c, w) in &self.support {
            if c.contains(j) && c.contains(k) {
                let m = T::from_count(c.intersection(assortment).len() as u64);
                acc.add(w / (m * (m - T::one())));
            }
        }
        acc.value()
    }
}

impl<T: fmt::Debug> fmt::Debug for StochasticSetModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StochasticSetModel")
            .field("n", &self.universe.n())
            .field("support", &self.support)
            .finish()
    }
}

/// `λ(·|S)`: distribution over subsets of an assortment.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalSetDistribution<T> {
    pub assortment: ItemSet,
    pub entries: Vec<(ItemSet, T)>,
}

impl<T: Scalar> ConditionalSetDistribution<T> {
    pub fn weight(&self, set: ItemSet) -> T {
        self.entries
            .binary_search_by_key(&set, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| T::zero())
    }

    /// Choice probability recomputed from the conditional form
    /// `Σ_{C' ∋ j} λ(C'|S) / |C'|`.
    pub fn choice_probability(&self, choice: ProductId) -> T {
        let mut acc = CompensatedSum::new();
        for &(c, w) in &self.entries {
            if choice == OUTSIDE {
                if c.is_empty() {
                    acc.add(w);
                }
            } else if c.contains(choice) {
                acc.add(w / T::from_count(c.len() as u64));
            }
        }
        acc.value()
    }
}
