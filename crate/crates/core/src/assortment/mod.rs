//! Revenue-maximizing assortments under a fixed stochastic set model.

mod dp;
mod reduction;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse};
use crate::model::{ChoiceModel, StochasticSetModel};
use crate::scalar::{CompensatedSum, Scalar};

pub use dp::{
    discretize_prices, discretized_revenue, dp_exact_assortment, dp_trace, fptas_assortment, DpState, MAX_DP_TYPES,
    MAX_DP_STATES,
};
pub use reduction::{vertex_cover_instance, Graph, VertexCoverInstance};

/// Largest universe brute-force optimization enumerates.
pub const MAX_BRUTE_FORCE_ASSORTMENT: usize = 20;

/// Positive prices for every product, with the products sorted by
/// nonincreasing price (ties by id).
#[derive(Clone, Debug, PartialEq)]
pub struct PriceVector<T> {
    universe: ProductUniverse,
    prices: Vec<T>,
    order: Vec<ProductId>,
}

impl<T: Scalar> PriceVector<T> {
    /// `prices[i - 1]` is `r_i`.
    pub fn new(universe: ProductUniverse, prices: Vec<T>) -> Result<Self> {
        if prices.len() != universe.n() {
            return Err(SsmError::Input(format!("expected {} prices, got {}", universe.n(), prices.len())));
        }
        if let Some((k, r)) = prices.iter().enumerate().find(|(_, r)| !(**r > T::zero()) || !r.is_finite()) {
            return Err(SsmError::Input(format!("price of product {} is {r}, expected > 0", k + 1)));
        }
        let mut order: Vec<ProductId> = universe.products().collect();
        order.sort_by(|&a, &b| prices[b - 1].partial_cmp(&prices[a - 1]).expect("finite").then(a.cmp(&b)));
        Ok(Self { universe, prices, order })
    }

    /// From `(id, price)` pairs; every product needs exactly one price.
    pub fn from_pairs(universe: ProductUniverse, pairs: &[(ProductId, T)]) -> Result<Self> {
        let mut prices: Vec<Option<T>> = vec![None; universe.n()];
        for &(id, r) in pairs {
            universe.check_product(id).map_err(|e| SsmError::Input(e.to_string()))?;
            if prices[id - 1].replace(r).is_some() {
                return Err(SsmError::Input(format!("duplicate price for product {id}")));
            }
        }
        let prices = prices
            .into_iter()
            .enumerate()
            .map(|(k, r)| r.ok_or_else(|| SsmError::Input(format!("missing price for product {}", k + 1))))
            .collect::<Result<Vec<T>>>()?;
        Self::new(universe, prices)
    }

    pub fn universe(&self) -> ProductUniverse {
        self.universe
    }

    #[inline]
    pub fn price(&self, id: ProductId) -> T {
        self.prices[id - 1]
    }

    pub fn prices(&self) -> &[T] {
        &self.prices
    }

    /// Product ids by nonincreasing price.
    pub fn sorted_order(&self) -> &[ProductId] {
        &self.order
    }

    /// The smallest price `r_n`.
    pub fn min_price(&self) -> T {
        self.price(*self.order.last().expect("nonempty universe"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Brute,
    DpExact,
    Fptas { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssortmentSolution<T> {
    pub assortment: ItemSet,
    /// Recomputed with the original prices.
    pub expected_revenue: T,
    pub method: Method,
}

fn check_universes<T: Scalar>(model: &StochasticSetModel<T>, prices: &PriceVector<T>) -> Result<()> {
    if model.universe() != prices.universe() {
        return Err(SsmError::Input(format!(
            "model has {} products but prices cover {}",
            model.universe().n(),
            prices.universe().n()
        )));
    }
    Ok(())
}

/// `Σ_C λ(C) · mean price of C ∩ S` (types missing `S` contribute zero).
pub fn expected_revenue<T: Scalar>(model: &StochasticSetModel<T>, s: ItemSet, prices: &PriceVector<T>) -> Result<T> {
    check_universes(model, prices)?;
    model.universe().check_set(s)?;
    Ok(revenue_unchecked(model, s, prices))
}

pub(crate) fn revenue_unchecked<T: Scalar>(model: &StochasticSetModel<T>, s: ItemSet, prices: &PriceVector<T>) -> T {
    let mut acc = CompensatedSum::new();
    for &(c, w) in model.support() {
        let overlap = c.intersection(s);
        if !overlap.is_empty() {
            let mut sum = T::zero();
            for i in overlap.iter() {
                sum += prices.price(i);
            }
            acc.add(w * sum / T::from_count(overlap.len() as u64));
        }
    }
    acc.value()
}

/// Exhaustive search; ties go to the smallest mask.
pub fn brute_force_assortment<T: Scalar>(
    model: &StochasticSetModel<T>,
    prices: &PriceVector<T>,
) -> Result<AssortmentSolution<T>> {
    check_universes(model, prices)?;
    let n = model.universe().n();
    if n > MAX_BRUTE_FORCE_ASSORTMENT {
        return Err(SsmError::Capacity(format!(
            "brute force is limited to n ≤ {MAX_BRUTE_FORCE_ASSORTMENT}, got {n}"
        )));
    }
    let (revenue, mask) = (0..model.universe().subset_count())
        .into_par_iter()
        .map(|m| (revenue_unchecked(model, ItemSet::from_mask(m), prices), m))
        .reduce(
            || (T::neg_infinity(), u64::MAX),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok(AssortmentSolution { assortment: ItemSet::from_mask(mask), expected_revenue: revenue, method: Method::Brute })
}

/// Check used by tests and the CLI: probabilities times prices.
pub fn expected_revenue_from_probabilities<T: Scalar>(
    model: &StochasticSetModel<T>,
    s: ItemSet,
    prices: &PriceVector<T>,
) -> Result<T> {
    check_universes(model, prices)?;
    let mut acc = CompensatedSum::new();
    for i in s.iter() {
        acc.add(model.probability(s, i)? * prices.price(i));
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{example_one, set};

    fn prices(r: &[f64]) -> PriceVector<f64> {
        PriceVector::new(ProductUniverse::new(r.len()).unwrap(), r.to_vec()).unwrap()
    }

    #[test]
    fn example_one_revenue() {
        let r = prices(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        let m = example_one();
        let v = expected_revenue(&m, set(&[2, 3]), &r).unwrap();
        assert!((v - 3.3).abs() < 1e-15);
        assert_eq!(expected_revenue(&m, ItemSet::EMPTY, &r).unwrap(), 0.0);
        let via_probs = expected_revenue_from_probabilities(&m, set(&[2, 3]), &r).unwrap();
        assert!((v - via_probs).abs() < 1e-15);
    }

    #[test]
    fn single_type_full_offer_is_mean() {
        let u = ProductUniverse::new(3).unwrap();
        let m = StochasticSetModel::new(u, [(set(&[1, 3]), 1.0)]).unwrap();
        let r = prices(&[2.0, 7.0, 6.0]);
        assert_eq!(expected_revenue(&m, u.full(), &r).unwrap(), 4.0);
        let best = brute_force_assortment(&m, &r).unwrap();
        assert_eq!(best.assortment, set(&[3]));
        assert_eq!(best.expected_revenue, 6.0);
    }

    #[test]
    fn price_validation() {
        let u = ProductUniverse::new(2).unwrap();
        assert!(PriceVector::new(u, vec![1.0, 0.0]).is_err());
        assert!(matches!(PriceVector::from_pairs(u, &[(1, 2.0)]), Err(SsmError::Input(_))));
        let p = PriceVector::from_pairs(u, &[(2, 3.0), (1, 3.0)]).unwrap();
        assert_eq!(p.sorted_order(), &[1, 2]);
        assert_eq!(p.min_price(), 3.0);
    }

    #[test]
    fn trivial_single_product() {
        let u = ProductUniverse::new(1).unwrap();
        let m = StochasticSetModel::new(u, [(set(&[1]), 1.0)]).unwrap();
        let best = brute_force_assortment(&m, &prices(&[1.0])).unwrap();
        assert_eq!((best.assortment, best.expected_revenue), (set(&[1]), 1.0));
    }
}
