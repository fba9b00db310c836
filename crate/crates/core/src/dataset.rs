//! Aggregated choice observations.

use std::collections::BTreeMap;

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};

/// Transaction counts `τ(S, i)` over the observed assortments.
///
/// Assortments iterate in ascending mask order and choices in ascending id
/// order (outside option first), so every sum over the dataset is taken in
/// a fixed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChoiceDataset {
    universe: ProductUniverse,
    counts: BTreeMap<ItemSet, BTreeMap<ProductId, u64>>,
    total: u64,
}

impl ChoiceDataset {
    pub fn new(universe: ProductUniverse) -> Self {
        Self { universe, counts: BTreeMap::new(), total: 0 }
    }

    /// Aggregates `(assortment, choice)` records. Errors carry the 1-based
    /// record number.
    pub fn ingest<I>(universe: ProductUniverse, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ItemSet, ProductId)>,
    {
        let mut data = Self::new(universe);
        for (k, (assortment, choice)) in records.into_iter().enumerate() {
            data.add(assortment, choice, 1).map_err(|e| SsmError::Record {
                line: k + 1,
                message: e.to_string(),
            })?;
        }
        Ok(data)
    }

    /// Adds `count` observations of `choice` under `assortment`.
    pub fn add(&mut self, assortment: ItemSet, choice: ProductId, count: u64) -> Result<()> {
        self.universe.check_set(assortment)?;
        if choice != OUTSIDE && !assortment.contains(choice) {
            return Err(SsmError::Domain(format!(
                "choice {choice} is neither offered in {assortment} nor the outside option"
            )));
        }
        if count == 0 {
            return Ok(());
        }
        *self.counts.entry(assortment).or_default().entry(choice).or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    #[inline]
    pub fn universe(&self) -> ProductUniverse {
        self.universe
    }

    /// Total number of transactions `T`.
    #[inline]
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct assortments `m`.
    pub fn assortment_count(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn assortments(&self) -> impl Iterator<Item = ItemSet> + '_ {
        self.counts.keys().copied()
    }

    pub fn count(&self, assortment: ItemSet, choice: ProductId) -> u64 {
        self.counts.get(&assortment).and_then(|c| c.get(&choice)).copied().unwrap_or(0)
    }

    /// Transactions observed under `assortment` (`n_S`).
    pub fn assortment_total(&self, assortment: ItemSet) -> u64 {
        self.counts.get(&assortment).map(|c| c.values().sum()).unwrap_or(0)
    }

    /// Choice counts under one assortment, outside option first.
    pub fn choices(&self, assortment: ItemSet) -> impl Iterator<Item = (ProductId, u64)> + '_ {
        self.counts.get(&assortment).into_iter().flat_map(|c| c.iter().map(|(&i, &n)| (i, n)))
    }

    /// All cells with a positive count, as `(S, i, τ(S, i))`.
    pub fn cells(&self) -> impl Iterator<Item = (ItemSet, ProductId, u64)> + '_ {
        self.counts
            .iter()
            .flat_map(|(&s, c)| c.iter().map(move |(&i, &n)| (s, i, n)))
    }

    /// Empirical choice frequency `τ(S, i) / n_S`.
    pub fn frequency(&self, assortment: ItemSet, choice: ProductId) -> f64 {
        let n_s = self.assortment_total(assortment);
        if n_s == 0 {
            0.0
        } else {
            self.count(assortment, choice) as f64 / n_s as f64
        }
    }

    /// Expands the counts back into one record per transaction, in
    /// canonical order.
    pub fn records(&self) -> Vec<(ItemSet, ProductId)> {
        let mut out = Vec::with_capacity(self.total as usize);
        for (s, i, n) in self.cells() {
            out.extend(std::iter::repeat_n((s, i), n as usize));
        }
        out
    }

    /// Merges the counts of `other` into `self`.
    pub fn merge(&mut self, other: &ChoiceDataset) -> Result<()> {
        if other.universe != self.universe {
            return Err(SsmError::Input("datasets have different universes".into()));
        }
        for (s, i, n) in other.cells() {
            self.add(s, i, n)?;
        }
        Ok(())
    }
}
