//! Closed-form recovery of `λ` from choice-probability tables, and the
//! axiom checks that characterize tables generated by a stochastic set
//! model.
//!
//! Two inversions are available:
//!
//! * **per item**: `λ(C)` for every `C ∋ j` from the probabilities of one
//!   product `j` across all assortments containing it;
//! * **outside option**: `λ(C)` for every `C` by inclusion–exclusion over
//!   the no-purchase probabilities, `λ(C) = Σ_{X⊆C} (−1)^{|C|−|X|} P_0(N∖X)`.
//!
//! The per-item inversion is `Σ_{X∋j} 1[|C∪X| ≥ n−1] n^{|C∪X|−n+1}
//! (−1)^{|C|+|X|−n+1} P_j(X)`. Only `X` covering all of `N∖C` except at most
//! one product contribute, so with `M = N∖C` and `Y = X ∩ C` the sum
//! collapses to
//!
//! ```text
//! Σ_{Y⊆C, j∈Y} (−1)^{|Y|+1} [ n·P_j(M∪Y) − Σ_{e∈M} P_j((M∖{e})∪Y) ]
//! ```
//!
//! which is what [`item_estimate`] evaluates. All alternating sums use
//! compensated accumulation in ascending subset order.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse};
use crate::model::{ChoiceModel, StochasticSetModel};
use crate::scalar::{compensated_sum, CompensatedSum, Scalar};
use crate::synthetic::{random_subset, stream, substream};
use crate::table::ChoiceProbabilityTable;

/// Default tolerance for axiom checks on exactly computed tables.
pub const DEFAULT_AXIOM_TOL: f64 = 1e-9;

/// Default tolerance for identification diagnostics.
pub const DEFAULT_IDENTIFY_TOL: f64 = 1e-8;

/// Largest universe for the exhaustive corollary and monotonicity checks.
pub const EXHAUSTIVE_CHECK_LIMIT: usize = 8;

/// `λ̂(C)` from the probabilities of product `j ∈ C`.
pub fn item_estimate<T: Scalar>(table: &ChoiceProbabilityTable<T>, j: ProductId, c: ItemSet) -> T {
    debug_assert!(c.contains(j));
    let n = table.universe().n();
    let rest = table.universe().full().difference(c);
    let scale = T::from_count(n as u64);
    let mut acc = CompensatedSum::new();
    for z in c.without(j).subsets() {
        let y = z.with(j);
        let full_cover = scale * table.get(rest.union(y), j);
        let near_cover = compensated_sum(rest.iter().map(|e| table.get(rest.without(e).union(y), j)));
        let term = full_cover - near_cover;
        // (−1)^{|Y|+1}
        if y.len() % 2 == 1 {
            acc.add(term);
        } else {
            acc.add(-term);
        }
    }
    acc.value()
}

/// `Σ_{X⊆S} (−1)^{|S|−|X|} P_0(N∖X)`: `λ̂(S)` by inclusion–exclusion, and
/// the quantity D-regularity requires to be nonnegative.
pub fn outside_estimate<T: Scalar>(table: &ChoiceProbabilityTable<T>, s: ItemSet) -> T {
    let full = table.universe().full();
    let parity = s.len() % 2;
    let mut acc = CompensatedSum::new();
    for x in s.subsets() {
        let p = table.get(full.difference(x), 0);
        if x.len() % 2 == parity {
            acc.add(p);
        } else {
            acc.add(-p);
        }
    }
    acc.value()
}

/// `λ̂(C)` for every `C ∋ j`, in ascending mask order.
pub fn identify_from_item<T: Scalar>(table: &ChoiceProbabilityTable<T>, j: ProductId) -> Result<Vec<(ItemSet, T)>> {
    table.require_rows_with(j)?;
    let others: Vec<ItemSet> = table.universe().full().without(j).subsets().collect();
    Ok(others
        .into_par_iter()
        .map(|x| {
            let c = x.with(j);
            (c, item_estimate(table, j, c))
        })
        .collect())
}

/// `λ̂(C)` for every `C ⊆ N` (including `∅`) from outside-option
/// probabilities, in ascending mask order.
pub fn identify_from_outside<T: Scalar>(table: &ChoiceProbabilityTable<T>) -> Result<Vec<(ItemSet, T)>> {
    table.require_complete()?;
    let sets: Vec<ItemSet> = table.universe().subsets().collect();
    Ok(sets.into_par_iter().map(|c| (c, outside_estimate(table, c))).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Per-item inversion using the lowest-id member of each set;
    /// `λ̂(∅)` closes the distribution.
    PerItem,
    /// Inclusion–exclusion over outside-option probabilities.
    Outside,
}

/// Raw estimates with their consistency diagnostics.
#[derive(Clone, Debug)]
pub struct RawIdentification<T> {
    pub strategy: Strategy,
    /// `λ̂(C)` for every `C ⊆ N`, ascending mask order.
    pub estimates: Vec<(ItemSet, T)>,
    /// `max_C max(0, −λ̂(C))`.
    pub residual_negativity: T,
    /// `|Σ λ̂ − 1|`.
    pub normalization_gap: T,
}

#[derive(Clone, Debug)]
pub struct IdentificationReport<T> {
    pub recovered: StochasticSetModel<T>,
    pub residual_negativity: T,
    pub normalization_gap: T,
    /// Largest `|P̂_j(S) − P_j(S)|` of the recovered model against the input.
    pub reproduction_error: T,
    /// Raw `λ̂` before clamping.
    pub estimates: Vec<(ItemSet, T)>,
}

/// Raw inversion of a table under `strategy`, without consistency checks.
pub fn identify_raw<T: Scalar>(table: &ChoiceProbabilityTable<T>, strategy: Strategy) -> Result<RawIdentification<T>> {
    table.require_complete()?;
    let universe = table.universe();
    let estimates = match strategy {
        Strategy::Outside => identify_from_outside(table)?,
        Strategy::PerItem => {
            let nonempty: Vec<ItemSet> = universe.subsets().skip(1).collect();
            let mut est: Vec<(ItemSet, T)> = nonempty
                .into_par_iter()
                .map(|c| (c, item_estimate(table, c.first().expect("nonempty"), c)))
                .collect();
            let empty = T::one() - compensated_sum(est.iter().map(|e| e.1));
            est.insert(0, (ItemSet::EMPTY, empty));
            est
        }
    };
    let residual_negativity = estimates
        .iter()
        .map(|e| -e.1)
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let normalization_gap = (compensated_sum(estimates.iter().map(|e| e.1)) - T::one()).abs();
    Ok(RawIdentification { strategy, estimates, residual_negativity, normalization_gap })
}

/// Recovers the model behind `table`.
///
/// Estimates at or below `tol` are zeroed (negative ones only inside the
/// tolerance band) and the rest renormalized. The recovered model must
/// reproduce every table entry within `tol`; otherwise the table is not
/// SSM-consistent and an [`SsmError::Inconsistent`] error is returned.
pub fn identify_full<T: Scalar>(
    table: &ChoiceProbabilityTable<T>,
    strategy: Strategy,
    tol: T,
) -> Result<IdentificationReport<T>> {
    let raw = identify_raw(table, strategy)?;
    if raw.residual_negativity > tol || raw.normalization_gap > tol {
        return Err(SsmError::Inconsistent(format!(
            "negativity {} and normalization gap {} exceed tolerance {tol}",
            raw.residual_negativity, raw.normalization_gap
        )));
    }
    let kept = raw.estimates.iter().copied().filter(|e| e.1 > tol);
    let recovered = StochasticSetModel::normalized(table.universe(), kept).map_err(|_| {
        SsmError::Inconsistent("every estimated weight is within tolerance of zero".into())
    })?;
    let reproduction_error = max_table_deviation(&recovered, table);
    if !(reproduction_error <= tol) {
        return Err(SsmError::Inconsistent(format!(
            "recovered model misses the table by {reproduction_error} (tolerance {tol})"
        )));
    }
    Ok(IdentificationReport {
        recovered,
        residual_negativity: raw.residual_negativity,
        normalization_gap: raw.normalization_gap,
        reproduction_error,
        estimates: raw.estimates,
    })
}

/// Largest absolute difference between a model's probabilities and a table.
pub fn max_table_deviation<T: Scalar, M: ChoiceModel<T> + Sync>(model: &M, table: &ChoiceProbabilityTable<T>) -> T {
    let sets: Vec<ItemSet> = table.universe().subsets().collect();
    sets.into_par_iter()
        .map(|s| {
            let row = model.choice_distribution(s).expect("same universe");
            row.into_iter()
                .map(|(j, p)| (p - table.get(s, j)).abs())
                .fold(T::zero(), |a, b| if b > a { b } else { a })
        })
        .reduce(T::zero, |a, b| if b > a { b } else { a })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SCannibalization,
    DRegularity,
    Corollary1,
    Corollary2,
    CannibalizationMonotonicity,
}

/// Where a violation was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    /// `(S, j, k)`.
    Pair { assortment: ItemSet, j: ProductId, k: ProductId },
    /// An assortment `S` or preselected set `C`.
    Set { set: ItemSet },
    /// Two per-item inversions of `λ(C)` disagree.
    ItemPair { set: ItemSet, j: ProductId, k: ProductId },
    /// Outside-option and per-item inversions of `λ(C)` disagree.
    Item { set: ItemSet, j: ProductId },
    /// `Δ_k P_j(inner) < Δ_k P_j(outer)` with `inner ⊆ outer`.
    Nested { inner: ItemSet, outer: ItemSet, j: ProductId, k: ProductId },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomViolation<T> {
    pub kind: ViolationKind,
    pub witness: Witness,
    pub magnitude: T,
}

/// `[P_j(S∖{k}) − P_j(S)] − [P_k(S∖{j}) − P_k(S)]`.
pub fn cannibalization_gap<T: Scalar, M: ChoiceModel<T> + ?Sized>(
    model: &M,
    s: ItemSet,
    j: ProductId,
    k: ProductId,
) -> T {
    model.cannibalization_effect(s, j, k) - model.cannibalization_effect(s, k, j)
}

/// Every `(S, j, k)`, `j < k` in `S`, whose cannibalization effects differ
/// by more than `tol`.
pub fn check_s_cannibalization<T: Scalar>(table: &ChoiceProbabilityTable<T>, tol: T) -> Result<Vec<AxiomViolation<T>>> {
    table.require_complete()?;
    let mut out = Vec::new();
    for s in table.universe().subsets() {
        for j in s.iter() {
            for k in s.iter().filter(|&k| k > j) {
                let gap = cannibalization_gap(table, s, j, k).abs();
                if gap > tol {
                    out.push(AxiomViolation {
                        kind: ViolationKind::SCannibalization,
                        witness: Witness::Pair { assortment: s, j, k },
                        magnitude: gap,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Every `S` whose inclusion–exclusion sum of outside probabilities is
/// below `−tol`.
pub fn check_d_regularity<T: Scalar>(table: &ChoiceProbabilityTable<T>, tol: T) -> Result<Vec<AxiomViolation<T>>> {
    table.require_complete()?;
    let sets: Vec<ItemSet> = table.universe().subsets().collect();
    Ok(sets
        .into_par_iter()
        .filter_map(|s| {
            let v = outside_estimate(table, s);
            (v < -tol).then_some(AxiomViolation {
                kind: ViolationKind::DRegularity,
                witness: Witness::Set { set: s },
                magnitude: -v,
            })
        })
        .collect())
}

/// How the corollary check visits sets.
#[derive(Clone, Copy, Debug)]
pub struct CorollaryCheck {
    /// Universes up to this size are enumerated exhaustively.
    pub exhaustive_limit: usize,
    /// Number of random `(C, j, k)` draws above the limit.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CorollaryCheck {
    fn default() -> Self {
        Self { exhaustive_limit: EXHAUSTIVE_CHECK_LIMIT, samples: 10_000, seed: 0 }
    }
}

fn corollaries_for<T: Scalar>(
    table: &ChoiceProbabilityTable<T>,
    c: ItemSet,
    pairs: &[(ProductId, ProductId)],
    tol: T,
    out: &mut Vec<AxiomViolation<T>>,
) {
    let outside = outside_estimate(table, c);
    for &(j, k) in pairs {
        let vj = item_estimate(table, j, c);
        if j != k {
            let vk = item_estimate(table, k, c);
            let gap = (vj - vk).abs();
            if gap > tol {
                out.push(AxiomViolation {
                    kind: ViolationKind::Corollary1,
                    witness: Witness::ItemPair { set: c, j, k },
                    magnitude: gap,
                });
            }
        }
        let gap = (outside - vj).abs();
        if gap > tol {
            out.push(AxiomViolation {
                kind: ViolationKind::Corollary2,
                witness: Witness::Item { set: c, j },
                magnitude: gap,
            });
        }
    }
}

/// Agreement between the different inversions of the same `λ(C)`: per-item
/// inversions for two members (`corollary1`), and outside-option versus
/// per-item (`corollary2`).
pub fn check_corollaries<T: Scalar>(
    table: &ChoiceProbabilityTable<T>,
    tol: T,
    mode: CorollaryCheck,
) -> Result<Vec<AxiomViolation<T>>> {
    table.require_complete()?;
    let universe = table.universe();
    let mut out = Vec::new();
    if universe.n() <= mode.exhaustive_limit {
        for c in universe.subsets().skip(1) {
            let rep = c.first().expect("nonempty");
            let pairs: Vec<_> = c.iter().map(|k| (rep, k)).collect();
            corollaries_for(table, c, &pairs, tol, &mut out);
        }
    } else {
        let mut rng = substream(mode.seed, stream::CHECKS);
        for _ in 0..mode.samples {
            let c = loop {
                let c = random_subset(universe.full(), &mut rng);
                if !c.is_empty() {
                    break c;
                }
            };
            let members = c.to_vec();
            let j = members[rng.random_range(0..members.len())];
            let k = members[rng.random_range(0..members.len())];
            corollaries_for(table, c, &[(j, k)], tol, &mut out);
        }
    }
    Ok(out)
}

/// Every `(S₁ ⊆ S₂, j ≠ k ∈ S₁)` where the cannibalization of `j` by `k`
/// grows when the assortment is enlarged from `S₁` to `S₂`.
pub fn check_cannibalization_monotonicity<T: Scalar>(
    table: &ChoiceProbabilityTable<T>,
    tol: T,
) -> Result<Vec<AxiomViolation<T>>> {
    table.require_complete()?;
    let universe: ProductUniverse = table.universe();
    if universe.n() > EXHAUSTIVE_CHECK_LIMIT {
        return Err(SsmError::Capacity(format!(
            "monotonicity check enumerates nested pairs; limit is n ≤ {EXHAUSTIVE_CHECK_LIMIT}"
        )));
    }
    let mut out = Vec::new();
    for outer in universe.subsets() {
        for inner in outer.subsets() {
            for j in inner.iter() {
                for k in inner.iter().filter(|&k| k != j) {
                    let small = table.cannibalization_effect(inner, j, k);
                    let large = table.cannibalization_effect(outer, j, k);
                    if small < large - tol {
                        out.push(AxiomViolation {
                            kind: ViolationKind::CannibalizationMonotonicity,
                            witness: Witness::Nested { inner, outer, j, k },
                            magnitude: large - small,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
