use rand::Rng;

use crate::itemset::{ItemSet, ProductUniverse};
use crate::model::StochasticSetModel;

pub fn set(ids: &[usize]) -> ItemSet {
    ItemSet::from_ids(ids.iter().copied()).unwrap()
}

/// The five-product, three-type model used as the running example.
pub fn example_one() -> StochasticSetModel<f64> {
    StochasticSetModel::new(
        ProductUniverse::new(5).unwrap(),
        [(set(&[1, 3, 5]), 0.1), (set(&[1, 2, 3, 4]), 0.6), (set(&[3, 4, 5]), 0.3)],
    )
    .unwrap()
}

/// Random model with a random support size in `1..=max_support`.
pub fn random_model<R: Rng>(n: usize, max_support: usize, rng: &mut R) -> StochasticSetModel<f64> {
    let k = rng.random_range(1..=max_support);
    crate::synthetic::random_model(ProductUniverse::new(n).unwrap(), k, n, rng)
}

pub fn random_model_bounded<R: Rng>(
    n: usize,
    max_support: usize,
    max_set: usize,
    rng: &mut R,
) -> StochasticSetModel<f64> {
    let k = rng.random_range(1..=max_support);
    crate::synthetic::random_model(ProductUniverse::new(n).unwrap(), k, max_set, rng)
}
