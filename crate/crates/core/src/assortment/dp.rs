//! Forward dynamic program over per-type revenue and count accumulators.
//!
//! Products are scanned by nonincreasing price. For each customer type `m`
//! the state tracks `a_m`, the summed (integral) prices of offered products
//! in `C_m`, and `b_m`, their number; a type then pays `f(a_m, b_m) = a_m/b_m`.
//! Only reachable states are stored.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use super::{check_universes, revenue_unchecked, AssortmentSolution, Method, PriceVector};
use crate::error::{Result, SsmError};
use crate::itemset::ItemSet;
use crate::model::StochasticSetModel;
use crate::scalar::Scalar;

/// Largest number of nonempty customer types the DP accepts.
pub const MAX_DP_TYPES: usize = 6;

/// State-count budget per layer.
pub const MAX_DP_STATES: usize = 4_000_000;

/// Types lighter than this are dropped before the DP.
const TYPE_FLOOR: f64 = 1e-12;

/// Accumulators `(a_m, b_m)` per type before product `next` (an index into
/// the price order) is decided.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DpState {
    pub next: usize,
    pub accumulated: Vec<(u64, u32)>,
}

fn dp_types<T: Scalar>(model: &StochasticSetModel<T>) -> Result<Vec<(ItemSet, T)>> {
    let floor = T::lit(TYPE_FLOOR);
    let types: Vec<(ItemSet, T)> =
        model.support().iter().copied().filter(|(c, w)| !c.is_empty() && *w >= floor).collect();
    if types.len() > MAX_DP_TYPES {
        return Err(SsmError::Capacity(format!(
            "{} customer types; the dynamic program is limited to {MAX_DP_TYPES}",
            types.len()
        )));
    }
    Ok(types)
}

/// `r̃_i = ⌊r_i / (r_n ε)⌋`, indexed by `id - 1`.
pub fn discretize_prices<T: Scalar>(prices: &PriceVector<T>, epsilon: f64) -> Result<Vec<u64>> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(SsmError::Input(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    let unit = prices.min_price() * T::lit(epsilon);
    prices
        .prices()
        .iter()
        .map(|&r| {
            let q = (r / unit).floor();
            q.to_u64()
                .filter(|&v| v < 1 << 53)
                .map(|v| v.max(1))
                .ok_or_else(|| SsmError::Capacity(format!("discretized price {q} is too large")))
        })
        .collect()
}

fn integral_prices<T: Scalar>(prices: &PriceVector<T>) -> Result<Vec<u64>> {
    prices
        .prices()
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            if r.fract() != T::zero() || r >= T::lit(9_007_199_254_740_992.0) {
                Err(SsmError::Input(format!("price of product {} is {r}, expected an integer", k + 1)))
            } else {
                Ok(r.to_u64().expect("positive integer"))
            }
        })
        .collect()
}

fn scaled_prices<T: Scalar>(prices: &PriceVector<T>, epsilon: Option<f64>) -> Result<Vec<u64>> {
    match epsilon {
        None => integral_prices(prices),
        Some(e) => discretize_prices(prices, e),
    }
}

/// `Σ_C λ(C) f(Σ_{i∈C∩S} r̃_i, |C ∩ S|)` for integer prices `r̃`.
pub fn discretized_revenue<T: Scalar>(model: &StochasticSetModel<T>, s: ItemSet, scaled: &[u64]) -> T {
    let mut total = T::zero();
    for &(c, w) in model.support() {
        let overlap = c.intersection(s);
        if !overlap.is_empty() {
            let a: u64 = overlap.iter().map(|i| scaled[i - 1]).sum();
            total += w * T::from_count(a) / T::from_count(overlap.len() as u64);
        }
    }
    total
}

fn terminal<T: Scalar>(acc: &[(u64, u32)], types: &[(ItemSet, T)]) -> T {
    let mut total = T::zero();
    for (&(a, b), &(_, w)) in acc.iter().zip(types) {
        if b > 0 {
            total += w * T::from_count(a) / T::from_count(u64::from(b));
        }
    }
    total
}

/// Smaller assortments first, then smaller masks.
fn preferred(a: ItemSet, b: ItemSet) -> bool {
    (a.len(), a.mask()) < (b.len(), b.mask())
}

fn keep(layer: &mut HashMap<Vec<(u64, u32)>, ItemSet>, state: Vec<(u64, u32)>, mask: ItemSet) {
    match layer.entry(state) {
        Entry::Vacant(e) => {
            e.insert(mask);
        }
        Entry::Occupied(mut e) => {
            if preferred(mask, *e.get()) {
                e.insert(mask);
            }
        }
    }
}

/// Optimal assortment and its value `J_1(0, …, 0)` under integer prices.
fn run<T: Scalar>(types: &[(ItemSet, T)], scaled: &[u64], order: &[usize]) -> Result<(ItemSet, T)> {
    let mut layer: HashMap<Vec<(u64, u32)>, ItemSet> = HashMap::new();
    layer.insert(vec![(0, 0); types.len()], ItemSet::EMPTY);
    for &i in order {
        let members: Vec<usize> = (0..types.len()).filter(|&m| types[m].0.contains(i)).collect();
        if members.is_empty() {
            // offering i changes no type's payoff; excluding it wins the tie
            continue;
        }
        let r = scaled[i - 1];
        let mut next = HashMap::with_capacity(layer.len() * 2);
        for (state, mask) in layer {
            let mut with = state.clone();
            for &m in &members {
                with[m].0 += r;
                with[m].1 += 1;
            }
            keep(&mut next, state, mask);
            keep(&mut next, with, mask.with(i));
        }
        if next.len() > MAX_DP_STATES {
            return Err(SsmError::Capacity(format!(
                "dynamic program exceeded {MAX_DP_STATES} states; use coarser prices"
            )));
        }
        layer = next;
    }
    let mut best: Option<(T, ItemSet)> = None;
    for (state, mask) in layer {
        let v = terminal(&state, types);
        best = Some(match best {
            None => (v, mask),
            Some((bv, bm)) if v > bv || (v == bv && preferred(mask, bm)) => (v, mask),
            Some(cur) => cur,
        });
    }
    let (value, mask) = best.expect("at least the empty assortment");
    Ok((mask, value))
}

/// Exact optimum for integral prices.
pub fn dp_exact_assortment<T: Scalar>(
    model: &StochasticSetModel<T>,
    prices: &PriceVector<T>,
) -> Result<AssortmentSolution<T>> {
    check_universes(model, prices)?;
    let scaled = integral_prices(prices)?;
    let types = dp_types(model)?;
    let (assortment, value) = run(&types, &scaled, prices.sorted_order())?;
    let expected_revenue = revenue_unchecked(model, assortment, prices);
    debug_assert!((value - expected_revenue).abs() <= T::lit(1e-9) * (T::one() + value.abs()));
    Ok(AssortmentSolution { assortment, expected_revenue, method: Method::DpExact })
}

/// `(1 − ε)`-optimal assortment: the exact DP over discretized prices,
/// reported at the original prices.
pub fn fptas_assortment<T: Scalar>(
    model: &StochasticSetModel<T>,
    prices: &PriceVector<T>,
    epsilon: f64,
) -> Result<AssortmentSolution<T>> {
    check_universes(model, prices)?;
    let scaled = discretize_prices(prices, epsilon)?;
    let types = dp_types(model)?;
    let (assortment, _) = run(&types, &scaled, prices.sorted_order())?;
    Ok(AssortmentSolution {
        assortment,
        expected_revenue: revenue_unchecked(model, assortment, prices),
        method: Method::Fptas { epsilon },
    })
}

/// DP states visited when deciding `s`, one per product in price order
/// plus the terminal state. `epsilon = None` uses the integral prices.
pub fn dp_trace<T: Scalar>(
    model: &StochasticSetModel<T>,
    prices: &PriceVector<T>,
    epsilon: Option<f64>,
    s: ItemSet,
) -> Result<Vec<DpState>> {
    check_universes(model, prices)?;
    let scaled = scaled_prices(prices, epsilon)?;
    let types = dp_types(model)?;
    let mut acc = vec![(0u64, 0u32); types.len()];
    let mut out = vec![DpState { next: 0, accumulated: acc.clone() }];
    for (k, &i) in prices.sorted_order().iter().enumerate() {
        if s.contains(i) {
            for (m, &(c, _)) in types.iter().enumerate() {
                if c.contains(i) {
                    acc[m].0 += scaled[i - 1];
                    acc[m].1 += 1;
                }
            }
        }
        out.push(DpState { next: k + 1, accumulated: acc.clone() });
    }
    Ok(out)
}
