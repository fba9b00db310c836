use std::time::Instant;

use rayon::prelude::*;

use super::em::RestrictedProgramState;
use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::scalar::{CompensatedSum, Scalar};

/// Largest universe the exhaustive pricing subproblem enumerates.
pub const MAX_BRUTE_FORCE_PRODUCTS: usize = 24;

/// Dual prices of one observed assortment, indexed by product id (`0` is
/// the outside option). Unoffered ids hold zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DualRow<T> {
    pub assortment: ItemSet,
    pub alpha: Vec<T>,
}

/// Duals `α_{S,i} = τ(S,i) / Y_{i,S}` and `β = −T` of the restricted
/// likelihood problem.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPrices<T> {
    pub universe: ProductUniverse,
    pub rows: Vec<DualRow<T>>,
    pub beta: T,
}

impl<T: Scalar> DualPrices<T> {
    pub fn alpha(&self, assortment: ItemSet, choice: ProductId) -> T {
        self.rows
            .binary_search_by_key(&assortment, |r| r.assortment)
            .map(|k| self.rows[k].alpha[choice])
            .unwrap_or_else(|_| T::zero())
    }

    pub fn assortments(&self) -> impl Iterator<Item = ItemSet> + '_ {
        self.rows.iter().map(|r| r.assortment)
    }
}

pub fn dual_prices<T: Scalar>(data: &ChoiceDataset, state: &RestrictedProgramState<T>) -> Result<DualPrices<T>> {
    let universe = data.universe();
    let n = universe.n();
    if state.fitted.len() != data.assortment_count()
        || state.fitted.iter().zip(data.assortments()).any(|(r, s)| r.assortment != s)
    {
        return Err(SsmError::Input("state was fitted on different assortments than the data".into()));
    }
    let mut rows = Vec::with_capacity(state.fitted.len());
    for row in &state.fitted {
        let s = row.assortment;
        let mut alpha = vec![T::zero(); n + 1];
        for &(i, y) in &row.probabilities {
            let tau = data.count(s, i);
            if tau > 0 {
                if !(y > T::zero()) {
                    return Err(SsmError::DegenerateDual { assortment: s, choice: i });
                }
                alpha[i] = T::from_count(tau) / y;
            }
        }
        rows.push(DualRow { assortment: s, alpha });
    }
    Ok(DualPrices { universe, rows, beta: -T::from_count(data.total()) })
}

/// `Σ_S [α_{S,0} 1[C∩S=∅] + Σ_{i∈C∩S} α_{S,i}/|C∩S|] + β`: the rate at which
/// the log-likelihood improves when mass moves onto `C`.
pub fn reduced_cost<T: Scalar>(duals: &DualPrices<T>, c: ItemSet) -> T {
    let mut acc = CompensatedSum::new();
    for row in &duals.rows {
        let overlap = c.intersection(row.assortment);
        if overlap.is_empty() {
            acc.add(row.alpha[OUTSIDE]);
        } else {
            let mut part = T::zero();
            for i in overlap.iter() {
                part += row.alpha[i];
            }
            acc.add(part / T::from_count(overlap.len() as u64));
        }
    }
    acc.add(duals.beta);
    acc.value()
}

/// Best column found by a pricing solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubproblemSolution<T> {
    pub column: ItemSet,
    pub value: T,
    /// False when a time limit cut the search short.
    pub proven_optimal: bool,
}

/// Masks are scanned in blocks of this size between deadline checks.
const BLOCK: u64 = 1 << 14;

fn better<T: Scalar>(a: (T, u64), b: (T, u64)) -> (T, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

pub(crate) fn bruteforce_until<T: Scalar>(
    duals: &DualPrices<T>,
    deadline: Option<Instant>,
) -> Result<SubproblemSolution<T>> {
    let n = duals.universe.n();
    if n > MAX_BRUTE_FORCE_PRODUCTS {
        return Err(SsmError::Capacity(format!(
            "exhaustive pricing is limited to n ≤ {MAX_BRUTE_FORCE_PRODUCTS}; use the MILP backend"
        )));
    }
    let count = duals.universe.subset_count();
    let blocks = count.div_ceil(BLOCK);
    let results: Vec<Option<(T, u64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return None;
            }
            let start = b * BLOCK;
            let end = (start + BLOCK).min(count);
            let mut best: Option<(T, u64)> = None;
            for mask in start..end {
                let cand = (reduced_cost(duals, ItemSet::from_mask(mask)), mask);
                best = Some(match best {
                    None => cand,
                    Some(cur) => better(cur, cand),
                });
            }
            best
        })
        .collect();
    let complete = results.iter().all(Option::is_some);
    let best = results
        .into_iter()
        .flatten()
        .reduce(better)
        .unwrap_or_else(|| (reduced_cost(duals, ItemSet::EMPTY), 0));
    Ok(SubproblemSolution { column: ItemSet::from_mask(best.1), value: best.0, proven_optimal: complete })
}

/// Maximizes the reduced cost over all `2^n` sets; ties go to the smallest
/// mask.
pub fn cg_subproblem_bruteforce<T: Scalar>(duals: &DualPrices<T>) -> Result<SubproblemSolution<T>> {
    bruteforce_until(duals, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::em::{em_fit, EmConfig};
    use crate::testutil::set;

    fn one_product_state(n: usize) -> (ChoiceDataset, RestrictedProgramState<f64>) {
        let mut d = ChoiceDataset::new(ProductUniverse::new(n).unwrap());
        d.add(set(&[1]), 1, 1).unwrap();
        let st = em_fit(&d, &[set(&[1])], None, &EmConfig::default()).unwrap();
        (d, st)
    }

    #[test]
    fn single_observation_duals() {
        let (d, st) = one_product_state(1);
        let duals = dual_prices(&d, &st).unwrap();
        assert_eq!(duals.alpha(set(&[1]), 1), 1.0);
        assert_eq!(duals.alpha(set(&[1]), 0), 0.0);
        assert_eq!(duals.beta, -1.0);
        assert_eq!(reduced_cost(&duals, set(&[1])), 0.0);
        assert_eq!(reduced_cost(&duals, ItemSet::EMPTY), -1.0);
        let best = cg_subproblem_bruteforce(&duals).unwrap();
        assert_eq!(best, SubproblemSolution { column: set(&[1]), value: 0.0, proven_optimal: true });
    }

    #[test]
    fn disjoint_column_in_larger_universe() {
        let (d, st) = one_product_state(2);
        let duals = dual_prices(&d, &st).unwrap();
        assert_eq!(reduced_cost(&duals, set(&[2])), -1.0);
        // {1} and {1,2} tie at zero; the smaller mask wins
        assert_eq!(cg_subproblem_bruteforce(&duals).unwrap().column, set(&[1]));
    }

    #[test]
    fn duals_match_ratio() {
        let mut d = ChoiceDataset::new(ProductUniverse::new(3).unwrap());
        d.add(set(&[1, 2]), 1, 4).unwrap();
        d.add(set(&[1, 2]), 0, 1).unwrap();
        d.add(set(&[2, 3]), 3, 5).unwrap();
        let support = [ItemSet::EMPTY, set(&[1]), set(&[2]), set(&[3])];
        let st = em_fit::<f64>(&d, &support, None, &EmConfig { max_iters: 3, ll_tol: 0.0, accelerate: false }).unwrap();
        let duals = dual_prices(&d, &st).unwrap();
        for (s, i, tau) in d.cells() {
            assert_eq!(duals.alpha(s, i), tau as f64 / st.fitted(s, i).unwrap());
        }
        assert_eq!(duals.alpha(set(&[1, 2]), 2), 0.0);
    }

    #[test]
    fn degenerate_dual() {
        let mut d = ChoiceDataset::new(ProductUniverse::new(2).unwrap());
        d.add(set(&[1]), 1, 1).unwrap();
        let mut st = em_fit(&d, &[set(&[1])], None, &EmConfig::default()).unwrap();
        st.fitted[0].probabilities = vec![(0, 1.0), (1, 0.0)];
        assert!(matches!(dual_prices(&d, &st), Err(SsmError::DegenerateDual { choice: 1, .. })));
    }

    #[test]
    fn capacity_guard() {
        let duals = DualPrices::<f64> { universe: ProductUniverse::new(25).unwrap(), rows: vec![], beta: 0.0 };
        assert!(matches!(cg_subproblem_bruteforce(&duals), Err(SsmError::Capacity(_))));
    }
}
