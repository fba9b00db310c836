//! Dense table of choice probabilities over every assortment.

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::model::ChoiceModel;
use crate::scalar::{compensated_sum, Scalar};

/// Largest universe for which a full table is materialized.
pub const MAX_TABLE_PRODUCTS: usize = 16;

/// `P_j(S)` for every `S ⊆ N` and `j ∈ S ∪ {0}`.
///
/// Rows are indexed by assortment mask, columns by product id (`0` is the
/// outside option). Tables read from files may have missing rows; the
/// operations that need a row report it as incomplete input.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiceProbabilityTable<T> {
    universe: ProductUniverse,
    values: Vec<T>,
    present: Vec<bool>,
}

impl<T: Scalar> ChoiceProbabilityTable<T> {
    /// An empty table (no rows present).
    pub fn empty(universe: ProductUniverse) -> Result<Self> {
        let n = universe.n();
        if n > MAX_TABLE_PRODUCTS {
            return Err(SsmError::Capacity(format!(
                "a full table over {n} products has 2^{n} rows; limit is n ≤ {MAX_TABLE_PRODUCTS}"
            )));
        }
        let rows = universe.subset_count() as usize;
        Ok(Self { universe, values: vec![T::zero(); rows * (n + 1)], present: vec![false; rows] })
    }

    /// Materializes every choice probability of `model`.
    pub fn from_model<M: ChoiceModel<T> + ?Sized>(model: &M) -> Result<Self> {
        let mut table = Self::empty(model.universe())?;
        for s in model.universe().subsets() {
            let row = model.choice_distribution(s)?;
            table.set_row_unchecked(s, &row);
        }
        Ok(table)
    }

    #[inline]
    pub fn universe(&self) -> ProductUniverse {
        self.universe
    }

    #[inline]
    fn offset(&self, s: ItemSet) -> usize {
        s.mask() as usize * (self.universe.n() + 1)
    }

    fn set_row_unchecked(&mut self, s: ItemSet, row: &[(ProductId, T)]) {
        let base = self.offset(s);
        for &(j, p) in row {
            self.values[base + j] = p;
        }
        self.present[s.mask() as usize] = true;
    }

    /// Inserts one row after checking that it is a probability distribution
    /// over `S ∪ {0}` within `tol`.
    pub fn set_row(&mut self, s: ItemSet, row: &[(ProductId, T)], tol: T) -> Result<()> {
        self.universe.check_set(s)?;
        let n = self.universe.n();
        let mut full = vec![T::zero(); n + 1];
        let mut seen = vec![false; n + 1];
        for &(j, p) in row {
            if j != OUTSIDE && !s.contains(j) {
                return Err(SsmError::Input(format!("row {s}: probability given for unoffered product {j}")));
            }
            if seen[j] {
                return Err(SsmError::Input(format!("row {s}: duplicate entry for {j}")));
            }
            if !p.is_finite() || p < -tol || p > T::one() + tol {
                return Err(SsmError::Input(format!("row {s}: P_{j} = {p} is not a probability")));
            }
            seen[j] = true;
            full[j] = p;
        }
        let total = compensated_sum(full.iter().copied());
        if (total - T::one()).abs() > tol {
            return Err(SsmError::Input(format!("row {s}: probabilities sum to {total}")));
        }
        let base = self.offset(s);
        self.values[base..base + n + 1].copy_from_slice(&full);
        self.present[s.mask() as usize] = true;
        Ok(())
    }

    #[inline]
    pub fn has_row(&self, s: ItemSet) -> bool {
        self.present[s.mask() as usize]
    }

    pub fn is_complete(&self) -> bool {
        self.present.iter().all(|&p| p)
    }

    /// `P_j(S)`; zero for `j ∉ S ∪ {0}`.
    #[inline]
    pub fn get(&self, s: ItemSet, j: ProductId) -> T {
        self.values[self.offset(s) + j]
    }

    /// Row `S` as `(id, P)` pairs over `S ∪ {0}`; `None` when missing.
    pub fn row(&self, s: ItemSet) -> Option<Vec<(ProductId, T)>> {
        self.has_row(s).then(|| {
            std::iter::once(OUTSIDE)
                .chain(s.iter())
                .map(|j| (j, self.get(s, j)))
                .collect()
        })
    }

    /// Fails with an input error naming the first missing row.
    pub fn require_complete(&self) -> Result<()> {
        match self.present.iter().position(|&p| !p) {
            None => Ok(()),
            Some(k) => Err(SsmError::Input(format!(
                "table is incomplete: row {} is missing",
                ItemSet::from_mask(k as u64)
            ))),
        }
    }

    /// Fails unless every row containing product `j` is present.
    pub fn require_rows_with(&self, j: ProductId) -> Result<()> {
        self.universe.check_product(j)?;
        let rest = self.universe.full().without(j);
        for x in rest.subsets() {
            let s = x.with(j);
            if !self.has_row(s) {
                return Err(SsmError::Input(format!("table is incomplete: row {s} is missing")));
            }
        }
        Ok(())
    }
}

impl<T: Scalar> ChoiceModel<T> for ChoiceProbabilityTable<T> {
    fn universe(&self) -> ProductUniverse {
        self.universe
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        self.get(assortment, choice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StochasticSetModel;
    use crate::testutil::{example_one, random_model, set};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_product_table() {
        let u = ProductUniverse::new(1).unwrap();
        let m = StochasticSetModel::new(u, [(set(&[1]), 0.4), (ItemSet::EMPTY, 0.6)]).unwrap();
        let t = ChoiceProbabilityTable::from_model(&m).unwrap();
        assert_eq!(t.get(set(&[1]), 1), 0.4);
        assert_eq!(t.get(set(&[1]), 0), 0.6);
        assert_eq!(t.get(ItemSet::EMPTY, 0), 1.0);
        assert!(t.is_complete());
    }

    #[test]
    fn example_one_table_contains_worked_values() {
        let t = ChoiceProbabilityTable::from_model(&example_one()).unwrap();
        assert_eq!(t.get(set(&[2, 3]), 2), 0.3);
        assert!((t.get(set(&[2, 3]), 3) - 0.7).abs() < 1e-15);
        // unoffered products read as zero
        assert_eq!(t.get(set(&[2, 3]), 1), 0.0);
    }

    #[test]
    fn random_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_model(6, 20, &mut rng);
        let t = ChoiceProbabilityTable::from_model(&m).unwrap();
        for s in m.universe().subsets() {
            let row = t.row(s).unwrap();
            let total: f64 = row.iter().map(|e| e.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for (j, p) in row {
                assert_eq!(p, m.probability(s, j).unwrap());
            }
        }
    }

    #[test]
    fn capacity_guard() {
        let u = ProductUniverse::new(17).unwrap();
        assert!(matches!(ChoiceProbabilityTable::<f64>::empty(u), Err(SsmError::Capacity(_))));
    }

    #[test]
    fn set_row_validation() {
        let u = ProductUniverse::new(2).unwrap();
        let mut t = ChoiceProbabilityTable::<f64>::empty(u).unwrap();
        assert!(t.set_row(set(&[1]), &[(0, 0.5), (2, 0.5)], 1e-9).is_err());
        assert!(t.set_row(set(&[1]), &[(0, 0.5), (1, 0.4)], 1e-9).is_err());
        t.set_row(set(&[1]), &[(0, 0.5), (1, 0.5)], 1e-9).unwrap();
        assert!(t.has_row(set(&[1])));
        assert!(t.require_complete().is_err());
        assert!(t.require_rows_with(1).is_err());
    }
}
