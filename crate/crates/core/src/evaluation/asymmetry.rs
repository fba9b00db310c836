use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SsmError};
use crate::identification::{cannibalization_gap, EXHAUSTIVE_CHECK_LIMIT};
use crate::itemset::{ItemSet, ProductId};
use crate::model::ChoiceModel;
use crate::scalar::{CompensatedSum, Scalar};
use crate::synthetic::{random_subset, stream};

pub const DEFAULT_ASYMMETRY_SAMPLES: usize = 10_000;

/// Samples are drawn in this many independently seeded chunks, so the
/// estimate does not depend on the thread count.
const CHUNKS: usize = 64;

/// Give up after this many consecutive zero-demand draws.
const MAX_CONSECUTIVE_RESAMPLES: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct AsymmetryEstimate<T> {
    pub index: T,
    /// Monte Carlo standard error; zero for the exhaustive value.
    pub std_error: T,
    /// Accepted samples (or weighted pairs in exhaustive mode).
    pub n_samples: usize,
    /// Draws rejected because `P_j(S) + P_k(S) = 0`.
    pub resampled: u64,
    pub seed: Option<u64>,
}

/// Normalized violation of symmetric cannibalization for one pair; `None`
/// when neither product sells in `S`.
fn term<T: Scalar, M: ChoiceModel<T> + ?Sized>(model: &M, s: ItemSet, j: ProductId, k: ProductId) -> Option<T> {
    let denom = model.probability_unchecked(s, j) + model.probability_unchecked(s, k);
    if denom > T::zero() {
        Some(cannibalization_gap(model, s, j, k).abs() / denom)
    } else {
        None
    }
}

fn require_pairs(n: usize) -> Result<()> {
    if n < 2 {
        return Err(SsmError::Input("the asymmetry index needs at least two products".into()));
    }
    Ok(())
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug)]
struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn new() -> Self {
        Self { count: 0, mean: 0.0, m2: 0.0 }
    }

    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * self.count as f64 * other.count as f64 / count as f64;
        Welford { count, mean, m2 }
    }
}

/// Monte Carlo estimate: `S` uniform over assortments with at least two
/// products, `{j, k}` uniform over pairs in `S`.
pub fn asymmetry_index<T, M>(model: &M, n_samples: usize, seed: u64) -> Result<AsymmetryEstimate<T>>
where
    T: Scalar,
    M: ChoiceModel<T> + Sync + ?Sized,
{
    let universe = model.universe();
    require_pairs(universe.n())?;
    if n_samples == 0 {
        return Err(SsmError::Input("n_samples must be positive".into()));
    }
    let full = universe.full();
    let chunks: Vec<Result<(Welford, u64)>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let quota = n_samples / CHUNKS + usize::from(c < n_samples % CHUNKS);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream::MONTE_CARLO << 32 | c as u64);
            let mut stats = Welford::new();
            let mut resampled = 0u64;
            let mut streak = 0u64;
            while (stats.count as usize) < quota {
                let s = loop {
                    let s = random_subset(full, &mut rng);
                    if s.len() >= 2 {
                        break s;
                    }
                };
                let members = s.to_vec();
                let a = rng.random_range(0..members.len());
                let mut b = rng.random_range(0..members.len() - 1);
                if b >= a {
                    b += 1;
                }
                let (j, k) = (members[a.min(b)], members[a.max(b)]);
                match term(model, s, j, k) {
                    Some(t) => {
                        stats.push(t.as_f64());
                        streak = 0;
                    }
                    None => {
                        resampled += 1;
                        streak += 1;
                        if streak > MAX_CONSECUTIVE_RESAMPLES {
                            return Err(SsmError::Domain(
                                "no sampled product pair has positive demand".into(),
                            ));
                        }
                    }
                }
            }
            Ok((stats, resampled))
        })
        .collect();
    let mut total = Welford::new();
    let mut resampled = 0;
    for chunk in chunks {
        let (w, r) = chunk?;
        total = total.merge(w);
        resampled += r;
    }
    let variance = if total.count > 1 { total.m2 / (total.count - 1) as f64 } else { 0.0 };
    Ok(AsymmetryEstimate {
        index: T::lit(total.mean),
        std_error: T::lit((variance / total.count as f64).sqrt()),
        n_samples: total.count as usize,
        resampled,
        seed: Some(seed),
    })
}

/// Exact value of the index by enumerating every assortment and pair, each
/// pair weighted as the sampler weights it. Zero-demand pairs are dropped
/// and the remaining weights renormalized, which matches resampling.
pub fn asymmetry_exhaustive<T, M>(model: &M) -> Result<AsymmetryEstimate<T>>
where
    T: Scalar,
    M: ChoiceModel<T> + ?Sized,
{
    let universe = model.universe();
    let n = universe.n();
    require_pairs(n)?;
    if n > EXHAUSTIVE_CHECK_LIMIT {
        return Err(SsmError::Capacity(format!(
            "exhaustive asymmetry index is limited to n ≤ {EXHAUSTIVE_CHECK_LIMIT}; use sampling"
        )));
    }
    let mut weighted = CompensatedSum::new();
    let mut mass = CompensatedSum::new();
    let mut pairs = 0usize;
    let mut dropped = 0u64;
    for s in universe.subsets().filter(|s| s.len() >= 2) {
        let m = s.len() as u64;
        let w = T::one() / T::from_count(m * (m - 1) / 2);
        for j in s.iter() {
            for k in s.iter().filter(|&k| k > j) {
                match term(model, s, j, k) {
                    Some(t) => {
                        weighted.add(w * t);
                        mass.add(w);
                        pairs += 1;
                    }
                    None => dropped += 1,
                }
            }
        }
    }
    if pairs == 0 {
        return Err(SsmError::Domain("no product pair has positive demand".into()));
    }
    Ok(AsymmetryEstimate {
        index: weighted.value() / mass.value(),
        std_error: T::zero(),
        n_samples: pairs,
        resampled: dropped,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::MnlModel;
    use crate::itemset::ProductUniverse;
    use crate::model::StochasticSetModel;
    use crate::testutil::{example_one, random_model};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mnl_pair_hand_value() {
        let m = MnlModel::new(ProductUniverse::new(2).unwrap(), vec![1.0f64, 2.0]).unwrap();
        let exact = asymmetry_exhaustive(&m).unwrap();
        assert!((exact.index - 1.0 / 9.0).abs() < 1e-15);
        let mc = asymmetry_index(&m, 1000, 3).unwrap();
        assert_eq!(mc.n_samples, 1000);
        assert!((mc.index - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn ssm_terms_vanish_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=8 {
            let m = random_model(n, 20, &mut rng);
            if let Ok(e) = asymmetry_exhaustive(&m) {
                assert_eq!(e.index, 0.0);
            }
        }
        let e = asymmetry_index(&example_one(), 2000, 1).unwrap();
        assert_eq!(e.index, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn symmetric_mnl_is_zero() {
        let m = MnlModel::new(ProductUniverse::new(4).unwrap(), vec![0.7f64; 4]).unwrap();
        assert!(asymmetry_exhaustive(&m).unwrap().index.abs() < 1e-15);
    }

    #[test]
    fn sampling_agrees_with_enumeration() {
        let m = MnlModel::new(ProductUniverse::new(5).unwrap(), vec![0.3f64, 1.0, 2.0, 4.0, 0.1]).unwrap();
        let exact = asymmetry_exhaustive(&m).unwrap().index;
        let mc = asymmetry_index(&m, 10_000, 11).unwrap();
        assert!((mc.index - exact).abs() <= 3.0 * mc.std_error, "{} vs {exact}", mc.index);
        let again = asymmetry_index(&m, 10_000, 11).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn zero_demand_pairs_are_resampled() {
        let u = ProductUniverse::new(3).unwrap();
        let m = StochasticSetModel::new(u, [(crate::testutil::set(&[1]), 0.5), (ItemSet::EMPTY, 0.5)]).unwrap();
        let e = asymmetry_index(&m, 500, 2).unwrap();
        assert_eq!(e.n_samples, 500);
        assert!(e.resampled > 0);
        let none = StochasticSetModel::<f64>::no_purchase(u);
        assert!(asymmetry_exhaustive(&none).is_err());
    }

    #[test]
    fn single_product_rejected() {
        let m = MnlModel::new(ProductUniverse::new(1).unwrap(), vec![1.0]).unwrap();
        assert!(matches!(asymmetry_index(&m, 10, 0), Err(SsmError::Input(_))));
    }
}
