//! Embedding of stochastic set models into distributions over rankings.

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::model::{ChoiceModel, StochasticSetModel};
use crate::scalar::{CompensatedSum, Scalar};

/// Largest preselected set expanded into rankings (`8! = 40320` orders).
pub const MAX_RANKED_SET: usize = 8;

/// Distribution over preference lists. Each list ranks some products and
/// ends with the outside option; unlisted products rank below it.
#[derive(Clone, Debug, PartialEq)]
pub struct RankingDistribution<T> {
    universe: ProductUniverse,
    rankings: Vec<(Vec<ProductId>, T)>,
}

impl<T: Scalar> RankingDistribution<T> {
    pub fn rankings(&self) -> &[(Vec<ProductId>, T)] {
        &self.rankings
    }

    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }
}

/// Top choice of a preference list under assortment `s`.
fn top_choice(order: &[ProductId], s: ItemSet) -> ProductId {
    order
        .iter()
        .copied()
        .find(|&e| e == OUTSIDE || s.contains(e))
        .unwrap_or(OUTSIDE)
}

impl<T: Scalar> ChoiceModel<T> for RankingDistribution<T> {
    fn universe(&self) -> ProductUniverse {
        self.universe
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        let mut acc = CompensatedSum::new();
        for (order, w) in &self.rankings {
            if top_choice(order, assortment) == choice {
                acc.add(*w);
            }
        }
        acc.value()
    }
}

/// Lexicographic successor permutation; false once the last one is reached.
fn next_permutation(v: &mut [ProductId]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("successor exists");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

impl<T: Scalar> StochasticSetModel<T> {
    /// Every preselected set `C` becomes its `|C|!` orderings, each followed
    /// by the outside option and weighted `λ(C)/|C|!`.
    pub fn to_rankings(&self) -> Result<RankingDistribution<T>> {
        if let Some((c, _)) = self.support().iter().find(|e| e.0.len() > MAX_RANKED_SET) {
            return Err(SsmError::Capacity(format!(
                "set {c} has {} members; ranking expansion is limited to {MAX_RANKED_SET}",
                c.len()
            )));
        }
        let mut rankings = Vec::new();
        for &(c, w) in self.support() {
            let mut members = c.to_vec();
            let orders: u64 = (1..=members.len() as u64).product();
            let each = w / T::from_count(orders);
            loop {
                let mut order = members.clone();
                order.push(OUTSIDE);
                rankings.push((order, each));
                if !next_permutation(&mut members) {
                    break;
                }
            }
        }
        Ok(RankingDistribution { universe: self.universe(), rankings })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ChoiceProbabilityTable;
    use crate::testutil::{example_one, random_model_bounded, set};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_expands_symmetrically() {
        let u = ProductUniverse::new(2).unwrap();
        let m = StochasticSetModel::new(u, [(set(&[1, 2]), 1.0)]).unwrap();
        let r = m.to_rankings().unwrap();
        assert_eq!(r.rankings(), &[(vec![1, 2, 0], 0.5), (vec![2, 1, 0], 0.5)]);
    }

    #[test]
    fn example_one_ranking_count() {
        let r = example_one().to_rankings().unwrap();
        assert_eq!(r.len(), 36);
        // brute count of top choices
        let s = set(&[2, 3]);
        let p3: f64 = r
            .rankings()
            .iter()
            .filter(|(o, _)| o.iter().find(|&&e| e == 0 || s.contains(e)) == Some(&3))
            .map(|e| e.1)
            .sum();
        assert!((p3 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_single_ranking() {
        let u = ProductUniverse::new(3).unwrap();
        let r = StochasticSetModel::<f64>::no_purchase(u).to_rankings().unwrap();
        assert_eq!(r.rankings(), &[(vec![0], 1.0)]);
    }

    #[test]
    fn capacity_guard() {
        let u = ProductUniverse::new(9).unwrap();
        let m = StochasticSetModel::new(u, [(u.full(), 1.0)]).unwrap();
        assert!(matches!(m.to_rankings(), Err(SsmError::Capacity(_))));
    }

    #[test]
    fn tables_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let m = random_model_bounded(n, 8, 5, &mut rng);
            let a = ChoiceProbabilityTable::from_model(&m).unwrap();
            let b = ChoiceProbabilityTable::from_model(&m.to_rankings().unwrap()).unwrap();
            for s in m.universe().subsets() {
                for j in std::iter::once(0).chain(s.iter()) {
                    assert!((a.get(s, j) - b.get(s, j)).abs() <= 1e-12);
                }
            }
        }
    }
}
