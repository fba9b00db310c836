use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ssm_core::assortment::{brute_force_assortment, dp_exact_assortment, dp_trace, PriceVector};
use ssm_core::estimation::{
    column_generation_fit, dual_prices, em_fit, reduced_cost, ColumnGenerationConfig, EmConfig,
};
use ssm_core::evaluation::{fit_mnl, score, Divergence, MnlConfig};
use ssm_core::identification::{
    check_d_regularity, check_s_cannibalization, identify_from_item, identify_full, identify_raw, Strategy,
};
use ssm_core::synthetic::{random_model, sample_transactions, substream, AssortmentSampler};
use ssm_core::{
    ChoiceDataset, ChoiceModel, ChoiceProbabilityTable, ItemSet, MnlModel, ProductId, ProductUniverse, SsmError,
    StochasticSetModel,
};

fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, 1)
}

fn model(seed: u64, n: usize, max_support: usize) -> StochasticSetModel {
    let mut r = rng(seed);
    let k = r.random_range(1..=max_support);
    random_model(ProductUniverse::new(n).unwrap(), k, n, &mut r)
}

fn dataset(truth: &StochasticSetModel, transactions: usize, seed: u64) -> ChoiceDataset {
    let sampler = AssortmentSampler::Pool { size: 2 * truth.universe().n() };
    let records = sample_transactions(truth, &sampler, transactions, seed).unwrap();
    ChoiceDataset::ingest(truth.universe(), records).unwrap()
}

/// Convex combination of an SSM and an MNL.
struct Mixture {
    ssm: StochasticSetModel,
    mnl: MnlModel,
    w: f64,
}

impl ChoiceModel<f64> for Mixture {
    fn universe(&self) -> ProductUniverse {
        self.ssm.universe()
    }

    fn probability_unchecked(&self, s: ItemSet, j: ProductId) -> f64 {
        self.w * self.ssm.probability_unchecked(s, j) + (1.0 - self.w) * self.mnl.probability_unchecked(s, j)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conditional_distribution_shrinks_with_assortment(seed in any::<u64>(), n in 1usize..=6, a in any::<u64>(), b in any::<u64>()) {
        let m = model(seed, n, 10);
        let full = m.universe().full().mask();
        let outer = ItemSet::from_mask(a & full);
        let inner = ItemSet::from_mask(b & outer.mask());
        let big = m.conditional_distribution(outer).unwrap();
        let small = m.conditional_distribution(inner).unwrap();
        for c in inner.subsets() {
            prop_assert!(small.weight(c) >= big.weight(c) - 1e-12);
        }
    }

    #[test]
    fn regularity(seed in any::<u64>(), n in 1usize..=6) {
        let m = model(seed, n, 10);
        for big in m.universe().subsets() {
            for small in big.subsets() {
                for j in small.iter() {
                    prop_assert!(m.probability(small, j).unwrap() >= m.probability(big, j).unwrap() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn strategies_and_items_agree(seed in any::<u64>(), n in 2usize..=6) {
        let m = model(seed, n, 12);
        let table = ChoiceProbabilityTable::from_model(&m).unwrap();
        let a = identify_raw(&table, Strategy::PerItem).unwrap();
        let b = identify_raw(&table, Strategy::Outside).unwrap();
        for (x, y) in a.estimates.iter().zip(&b.estimates) {
            prop_assert_eq!(x.0, y.0);
            prop_assert!((x.1 - y.1).abs() <= 1e-8);
        }
        let per_item: Vec<Vec<(ItemSet, f64)>> =
            (1..=n).map(|j| identify_from_item(&table, j).unwrap()).collect();
        for j in 1..=n {
            for k in j + 1..=n {
                for &(c, v) in &per_item[j - 1] {
                    if c.contains(k) {
                        let w = per_item[k - 1].iter().find(|e| e.0 == c).unwrap().1;
                        prop_assert!((v - w).abs() <= 1e-8, "{} via {} and {}: {} {}", c, j, k, v, w);
                    }
                }
            }
        }
    }

    #[test]
    fn axioms_decide_identification(seed in any::<u64>(), n in 2usize..=5, mix in 0.0f64..1.0) {
        let mut r = rng(seed ^ 0x5eed);
        let weights: Vec<f64> = (0..n).map(|_| r.random_range(0.2..4.0)).collect();
        let mixture = Mixture { ssm: model(seed, n, 8), mnl: MnlModel::new(ProductUniverse::new(n).unwrap(), weights).unwrap(), w: mix };
        let table = ChoiceProbabilityTable::from_model(&mixture).unwrap();
        let passes = check_s_cannibalization(&table, 1e-10).unwrap().is_empty()
            && check_d_regularity(&table, 1e-10).unwrap().is_empty();
        for strategy in [Strategy::PerItem, Strategy::Outside] {
            match identify_full(&table, strategy, 1e-8) {
                Ok(report) => {
                    prop_assert!(passes, "non-SSM table accepted");
                    prop_assert!(report.reproduction_error <= 1e-8);
                    prop_assert!(report.residual_negativity <= 1e-8 && report.normalization_gap <= 1e-8);
                }
                Err(SsmError::Inconsistent(_)) => prop_assert!(!passes, "SSM table rejected"),
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }

    #[test]
    fn em_is_monotone_and_deterministic(seed in any::<u64>(), n in 2usize..=5, accelerate in any::<bool>()) {
        let truth = model(seed, n, 6);
        let d = dataset(&truth, 500, seed);
        let support: Vec<ItemSet> = d.universe().subsets().collect();
        let cfg = EmConfig { max_iters: 200, ll_tol: 0.0, accelerate };
        let a = em_fit::<f64>(&d, &support, None, &cfg).unwrap();
        prop_assert!(a.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let b = em_fit::<f64>(&d, &support, None, &cfg).unwrap();
        prop_assert_eq!(a.lambda, b.lambda);
    }

    #[test]
    fn dp_states_grow_along_paths(seed in any::<u64>(), n in 1usize..=8, mask in any::<u64>()) {
        let mut r = rng(seed ^ 0xd9);
        let k = r.random_range(1..=4);
        let m: StochasticSetModel = random_model(ProductUniverse::new(n).unwrap(), k, n, &mut r);
        let prices: Vec<f64> = (0..n).map(|_| r.random_range(1..=20u32) as f64).collect();
        let p = PriceVector::new(m.universe(), prices).unwrap();
        let s = ItemSet::from_mask(mask & m.universe().full().mask());
        let trace = dp_trace(&m, &p, None, s).unwrap();
        for w in trace.windows(2) {
            for (x, y) in w[0].accumulated.iter().zip(&w[1].accumulated) {
                prop_assert!(y.0 >= x.0 && y.1 >= x.1);
            }
        }
    }

    #[test]
    fn optimum_at_least_min_price(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed ^ 0x77);
        let k = r.random_range(1..=4);
        let m: StochasticSetModel = random_model(ProductUniverse::new(n).unwrap(), k, n, &mut r);
        let prices: Vec<f64> = (0..n).map(|_| r.random_range(1.0..20.0)).collect();
        let p = PriceVector::new(m.universe(), prices).unwrap();
        let best = brute_force_assortment(&m, &p).unwrap();
        if m.support().iter().any(|e| !e.0.is_empty() && e.1 > 0.0) {
            let buy_mass: f64 = m.support().iter().filter(|e| !e.0.is_empty()).map(|e| e.1).sum();
            prop_assert!(best.expected_revenue >= p.min_price() * buy_mass - 1e-12);
        }
        let integral = PriceVector::new(m.universe(), p.prices().iter().map(|x| x.ceil()).collect()).unwrap();
        let exact = dp_exact_assortment(&m, &integral).unwrap();
        let brute = brute_force_assortment(&m, &integral).unwrap();
        prop_assert!((exact.expected_revenue - brute.expected_revenue).abs() <= 1e-9);
    }

    #[test]
    fn metrics_vanish_only_on_exact_predictions(seed in any::<u64>(), n in 2usize..=5, bump in 1e-6f64..0.1) {
        let truth = model(seed, n, 6);
        let d = dataset(&truth, 300, seed);
        let exact = score::<f64, _>(&d, |s, j| d.frequency(s, j)).unwrap();
        prop_assert_eq!(exact.kl, Divergence::Finite(0.0));
        prop_assert_eq!(exact.mape, 0.0);
        // Shift mass between the outside option and the lowest-id product.
        let off = score::<f64, _>(&d, |s, j| {
            let f = d.frequency(s, j);
            let first = s.first().unwrap();
            let shift = bump.min(d.frequency(s, 0)).min(1.0 - d.frequency(s, first));
            if j == first { f + shift } else if j == 0 { f - shift } else { f }
        })
        .unwrap();
        let moved = d.assortments().any(|s| {
            let first = s.first().unwrap();
            d.frequency(s, 0) > 0.0 && d.frequency(s, first) < 1.0
        });
        if moved {
            prop_assert!(off.mape > 0.0);
            prop_assert!(off.kl.to_scalar() > 0.0);
        }
    }
}

#[test]
fn regularity_exhaustive_at_eight_products() {
    for seed in 0..3 {
        let m = model(seed, 8, 20);
        let table = ChoiceProbabilityTable::from_model(&m).unwrap();
        for big in m.universe().subsets() {
            for j in big.iter() {
                let p = table.get(big, j);
                for k in big.iter().filter(|&k| k != j) {
                    assert!(table.get(big.without(k), j) >= p - 1e-12);
                }
            }
        }
    }
}

#[test]
fn sampled_frequencies_within_four_sigma() {
    let m = model(11, 5, 6);
    let mut r = rng(99);
    let draws = 20_000;
    for s in [m.universe().full(), ItemSet::from_mask(0b10110), ItemSet::from_mask(0b1)] {
        let mut counts = [0u64; 6];
        for _ in 0..draws {
            counts[m.sample_choice(s, &mut r).unwrap()] += 1;
        }
        for j in std::iter::once(0).chain(s.iter()) {
            let p = m.probability(s, j).unwrap();
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            let f = counts[j] as f64 / draws as f64;
            assert!((f - p).abs() <= 4.0 * sigma + 1e-12, "{s} {j}: {f} vs {p}");
        }
    }
}

#[test]
fn fitted_support_prices_nonpositive() {
    for seed in 0..4 {
        let truth = model(seed, 4, 5);
        let d = dataset(&truth, 2000, seed);
        let fit = column_generation_fit::<f64>(&d, &ColumnGenerationConfig::default()).unwrap();
        let duals = dual_prices(&d, &fit.state).unwrap();
        let t = d.total() as f64;
        for (&c, &w) in fit.state.support.iter().zip(&fit.state.lambda) {
            let rc = reduced_cost(&duals, c);
            assert!(rc <= 1e-6 * t, "{c}: {rc}");
            if w > 1e-2 {
                assert!(rc.abs() <= 1e-6 * t, "{c} ({w}): {rc}");
            }
        }
        let again = column_generation_fit::<f64>(&d, &ColumnGenerationConfig::default()).unwrap();
        assert_eq!(fit.model, again.model);
    }
}

#[test]
fn mnl_likelihood_ascends() {
    for seed in 0..5 {
        let truth = model(seed, 4, 6);
        let d = dataset(&truth, 1500, seed);
        let fit = fit_mnl::<f64>(&d, &MnlConfig::default()).unwrap();
        assert!(fit.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
