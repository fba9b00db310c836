//! Random models and synthetic transaction data.
//!
//! Every random quantity comes from a ChaCha stream derived from one seed,
//! so a seed reproduces the same model and the same transactions.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse};
use crate::model::StochasticSetModel;
use crate::scalar::Scalar;

/// Named sub-streams of a seed.
pub mod stream {
    pub const MODEL: u64 = 1;
    pub const ASSORTMENTS: u64 = 2;
    pub const CHOICES: u64 = 3;
    pub const SPLIT: u64 = 4;
    pub const MONTE_CARLO: u64 = 5;
    pub const CHECKS: u64 = 6;
}

/// Independent generator for `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Flat Dirichlet weights (normalized unit exponentials).
pub fn dirichlet_weights<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Uniformly random subset of `within`.
pub fn random_subset<R: Rng + ?Sized>(within: ItemSet, rng: &mut R) -> ItemSet {
    let mask = rng.random::<u64>() & within.mask();
    ItemSet::from_mask(mask)
}

/// Random model with `support_size` distinct preselected sets (capped at
/// `2^n`), each of at most `max_set_size` products, and flat Dirichlet
/// weights. The empty set may be drawn.
pub fn random_model<T: Scalar, R: Rng + ?Sized>(
    universe: ProductUniverse,
    support_size: usize,
    max_set_size: usize,
    rng: &mut R,
) -> StochasticSetModel<T> {
    let n = universe.n();
    let available: u128 = (0..=max_set_size.min(n)).map(|k| binomial(n, k)).sum();
    let k = (support_size.max(1) as u128).min(available) as usize;
    let mut sets = BTreeSet::new();
    while sets.len() < k {
        let s = random_subset(universe.full(), rng);
        if s.len() <= max_set_size {
            sets.insert(s);
        }
    }
    let weights = dirichlet_weights(k, rng);
    StochasticSetModel::normalized(universe, sets.into_iter().zip(weights.into_iter().map(T::lit)))
        .expect("valid random model")
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// How assortments are drawn for each transaction.
#[derive(Clone, Debug, PartialEq)]
pub enum AssortmentSampler {
    /// A fresh uniformly random nonempty assortment per transaction.
    Uniform,
    /// `size` distinct nonempty assortments drawn once; each transaction
    /// picks one uniformly.
    Pool { size: usize },
    /// Each transaction picks one of these uniformly.
    Fixed(Vec<ItemSet>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub support_size: usize,
    pub max_set_size: usize,
    pub sampler: AssortmentSampler,
    pub transactions: usize,
}

impl SyntheticSpec {
    pub fn new(n: usize, support_size: usize, transactions: usize) -> Self {
        Self { n, support_size, max_set_size: n, sampler: AssortmentSampler::Pool { size: 2 * n }, transactions }
    }
}

/// Draws `count` transactions from `model`, assortments chosen by `sampler`.
pub fn sample_transactions<T: Scalar>(
    model: &StochasticSetModel<T>,
    sampler: &AssortmentSampler,
    count: usize,
    seed: u64,
) -> Result<Vec<(ItemSet, ProductId)>> {
    let universe = model.universe();
    let full = universe.full();
    let mut assortment_rng = substream(seed, stream::ASSORTMENTS);
    let mut choice_rng = substream(seed, stream::CHOICES);
    let nonempty = |rng: &mut ChaCha8Rng| loop {
        let s = random_subset(full, rng);
        if !s.is_empty() {
            break s;
        }
    };
    let pool: Vec<ItemSet> = match sampler {
        AssortmentSampler::Uniform => Vec::new(),
        AssortmentSampler::Pool { size } => {
            let cap = (universe.subset_count() - 1).min(*size as u64) as usize;
            if cap == 0 {
                return Err(SsmError::Input("assortment pool must be nonempty".into()));
            }
            let mut sets = BTreeSet::new();
            while sets.len() < cap {
                sets.insert(nonempty(&mut assortment_rng));
            }
            sets.into_iter().collect()
        }
        AssortmentSampler::Fixed(sets) => {
            if sets.is_empty() {
                return Err(SsmError::Input("fixed assortment list is empty".into()));
            }
            for &s in sets {
                universe.check_set(s)?;
            }
            sets.clone()
        }
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let s = if pool.is_empty() {
            nonempty(&mut assortment_rng)
        } else {
            pool[assortment_rng.random_range(0..pool.len())]
        };
        out.push((s, model.sample_unchecked(s, &mut choice_rng)));
    }
    Ok(out)
}

/// Random model plus transactions sampled from it.
pub fn simulate(spec: &SyntheticSpec, seed: u64) -> Result<(StochasticSetModel<f64>, Vec<(ItemSet, ProductId)>)> {
    if spec.n > 16 {
        return Err(SsmError::Capacity(format!("simulation is limited to n ≤ 16, got {}", spec.n)));
    }
    let universe = ProductUniverse::new(spec.n)?;
    let mut model_rng = substream(seed, stream::MODEL);
    let model = random_model(universe, spec.support_size, spec.max_set_size, &mut model_rng);
    let records = sample_transactions(&model, &spec.sampler, spec.transactions, seed)?;
    Ok((model, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_is_reproducible() {
        let spec = SyntheticSpec::new(5, 3, 1000);
        let a = simulate(&spec, 42).unwrap();
        let b = simulate(&spec, 42).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.support().len(), 3);
        let c = simulate(&spec, 43).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn support_capped_by_power_set() {
        let mut rng = substream(1, 0);
        let m: StochasticSetModel<f64> = random_model(ProductUniverse::new(2).unwrap(), 50, 2, &mut rng);
        assert_eq!(m.support().len(), 4);
        let m: StochasticSetModel<f64> = random_model(ProductUniverse::new(4).unwrap(), 50, 1, &mut rng);
        assert_eq!(m.support().len(), 5);
    }

    #[test]
    fn zero_transactions() {
        let spec = SyntheticSpec::new(3, 2, 0);
        assert!(simulate(&spec, 1).unwrap().1.is_empty());
    }
}
