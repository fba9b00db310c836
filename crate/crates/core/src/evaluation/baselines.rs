use log::warn;

use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, ProductUniverse, OUTSIDE};
use crate::model::ChoiceModel;
use crate::scalar::{CompensatedSum, Scalar};

/// Multinomial logit with the outside option's weight fixed at one.
#[derive(Clone, Debug, PartialEq)]
pub struct MnlModel<T> {
    universe: ProductUniverse,
    weights: Vec<T>,
}

impl<T: Scalar> MnlModel<T> {
    /// `weights[i - 1]` is `v_i`; every weight must be positive and finite.
    pub fn new(universe: ProductUniverse, weights: Vec<T>) -> Result<Self> {
        if weights.len() != universe.n() {
            return Err(SsmError::Domain(format!("expected {} weights, got {}", universe.n(), weights.len())));
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > T::zero()) || !w.is_finite()) {
            return Err(SsmError::Domain(format!("weight of product {} is {w}, expected > 0", k + 1)));
        }
        Ok(Self { universe, weights })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn denominator(&self, s: ItemSet) -> T {
        let mut acc = CompensatedSum::new();
        acc.add(T::one());
        for k in s.iter() {
            acc.add(self.weights[k - 1]);
        }
        acc.value()
    }
}

impl<T: Scalar> ChoiceModel<T> for MnlModel<T> {
    fn universe(&self) -> ProductUniverse {
        self.universe
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        let numerator = if choice == OUTSIDE { T::one() } else { self.weights[choice - 1] };
        numerator / self.denominator(assortment)
    }
}

/// Independent demand: product `j` sells with probability `share_j`
/// whenever offered, and the outside option absorbs the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependentModel<T> {
    universe: ProductUniverse,
    shares: Vec<T>,
}

impl<T: Scalar> IndependentModel<T> {
    pub fn new(universe: ProductUniverse, shares: Vec<T>) -> Result<Self> {
        if shares.len() != universe.n() {
            return Err(SsmError::Domain(format!("expected {} shares, got {}", universe.n(), shares.len())));
        }
        if shares.iter().any(|s| !(*s >= T::zero()) || !s.is_finite()) {
            return Err(SsmError::Domain("shares must be finite and nonnegative".into()));
        }
        let total: CompensatedSum<T> = shares.iter().copied().collect();
        if total.value() > T::one() + T::weight_tolerance() {
            return Err(SsmError::Domain(format!("shares sum to {}, above 1", total.value())));
        }
        Ok(Self { universe, shares })
    }

    pub fn shares(&self) -> &[T] {
        &self.shares
    }
}

impl<T: Scalar> ChoiceModel<T> for IndependentModel<T> {
    fn universe(&self) -> ProductUniverse {
        self.universe
    }

    fn probability_unchecked(&self, assortment: ItemSet, choice: ProductId) -> T {
        if choice != OUTSIDE {
            return self.shares[choice - 1];
        }
        let mut acc = CompensatedSum::new();
        acc.add(T::one());
        for k in assortment.iter() {
            acc.add(-self.shares[k - 1]);
        }
        acc.value().max(T::zero())
    }
}

/// Overall sales share of each product among all transactions.
pub fn fit_independent<T: Scalar>(train: &ChoiceDataset) -> Result<IndependentModel<T>> {
    if train.is_empty() {
        return Err(SsmError::Input("cannot fit on an empty dataset".into()));
    }
    let universe = train.universe();
    let mut sold = vec![0u64; universe.n() + 1];
    for (_, i, tau) in train.cells() {
        sold[i] += tau;
    }
    let total = T::from_count(train.total());
    let mut shares: Vec<T> = sold[1..].iter().map(|&c| T::from_count(c) / total).collect();
    let sum: T = shares.iter().copied().collect::<CompensatedSum<T>>().value();
    if sum > T::one() {
        for s in &mut shares {
            *s /= sum;
        }
    }
    IndependentModel::new(universe, shares)
}

#[derive(Clone, Copy, Debug)]
pub struct MnlConfig {
    pub max_iters: usize,
    /// Stop once the gradient of the per-transaction log-likelihood is
    /// this small in Euclidean norm.
    pub grad_tol: f64,
    /// Weight given to products without information, and the floor applied
    /// to products that were offered but never chosen.
    pub floor: f64,
    /// Iteration stops with a warning once any weight exceeds this.
    pub cap: f64,
}

impl Default for MnlConfig {
    fn default() -> Self {
        Self { max_iters: 100_000, grad_tol: 1e-8, floor: 1e-6, cap: 1e6 }
    }
}

#[derive(Clone, Debug)]
pub struct MnlFit<T> {
    pub model: MnlModel<T>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: T,
    /// Training log-likelihood after every iteration, starting from `v = 1`.
    pub log_likelihood_trace: Vec<T>,
    pub warnings: Vec<String>,
}

/// Maximum-likelihood MNL by minorize–maximize updates
/// `v_j ← W_j / Σ_{S∋j} n_S / (1 + Σ_{k∈S} v_k)`, where `W_j` is the number
/// of sales of `j`. Each update cannot decrease the likelihood.
pub fn fit_mnl<T: Scalar>(train: &ChoiceDataset, cfg: &MnlConfig) -> Result<MnlFit<T>> {
    if train.is_empty() {
        return Err(SsmError::Input("cannot fit on an empty dataset".into()));
    }
    let universe = train.universe();
    let n = universe.n();
    let total = T::from_count(train.total());
    let rows: Vec<(ItemSet, T)> = train.assortments().map(|s| (s, T::from_count(train.assortment_total(s)))).collect();
    let mut wins = vec![T::zero(); n];
    let mut offered = vec![false; n];
    for (s, i, tau) in train.cells() {
        if i != OUTSIDE {
            wins[i - 1] += T::from_count(tau);
        }
        for k in s.iter() {
            offered[k - 1] = true;
        }
    }
    let mut warnings = Vec::new();
    for (k, &o) in offered.iter().enumerate() {
        if !o {
            warnings.push(format!("product {} never offered; weight pinned at {}", k + 1, cfg.floor));
        }
    }
    let outside_sales: u64 = train.cells().filter(|c| c.1 == OUTSIDE).map(|c| c.2).sum();
    if outside_sales == 0 {
        warnings.push("outside option never chosen; the MNL optimum lies at the boundary".to_string());
    }
    let floor = T::lit(cfg.floor);
    let mut v = vec![T::one(); n];
    for k in 0..n {
        if !offered[k] {
            v[k] = floor;
        }
    }

    let loglik = |v: &[T]| -> T {
        let mut acc = CompensatedSum::new();
        for (s, i, tau) in train.cells() {
            let mut d = CompensatedSum::new();
            d.add(T::one());
            for k in s.iter() {
                d.add(v[k - 1]);
            }
            let num = if i == OUTSIDE { T::one() } else { v[i - 1] };
            acc.add(T::from_count(tau) * (num / d.value()).ln());
        }
        acc.value()
    };

    let mut trace = vec![loglik(&v)];
    let mut iterations = 0;
    let mut converged = false;
    let mut gradient_norm;
    let mut capped = false;
    loop {
        let mut exposure = vec![T::zero(); n];
        for &(s, n_s) in &rows {
            let mut d = CompensatedSum::new();
            d.add(T::one());
            for k in s.iter() {
                d.add(v[k - 1]);
            }
            let share = n_s / d.value();
            for k in s.iter() {
                exposure[k - 1] += share;
            }
        }
        let mut g2 = T::zero();
        for k in 0..n {
            if offered[k] {
                let g = (wins[k] - v[k] * exposure[k]) / total;
                g2 += g * g;
            }
        }
        gradient_norm = g2.sqrt();
        if gradient_norm <= T::lit(cfg.grad_tol) {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iters || capped {
            break;
        }
        for k in 0..n {
            if offered[k] {
                v[k] = wins[k] / exposure[k];
            }
        }
        iterations += 1;
        trace.push(loglik(&v));
        if v.iter().any(|&w| w > T::lit(cfg.cap)) {
            capped = true;
        }
    }
    if capped {
        warnings.push(format!("weights exceeded {}; iteration stopped", cfg.cap));
    } else if !converged {
        warnings.push(format!("MNL ascent stopped after {iterations} iterations, gradient norm {gradient_norm}"));
    }
    for k in 0..n {
        if offered[k] && v[k] < floor {
            warnings.push(format!("product {} never chosen; weight floored at {}", k + 1, cfg.floor));
            v[k] = floor;
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    Ok(MnlFit {
        model: MnlModel::new(universe, v)?,
        iterations,
        converged,
        gradient_norm,
        log_likelihood_trace: trace,
        warnings,
    })
}

/// Independent-demand and MNL fits of the same training data.
pub fn fit_baselines<T: Scalar>(
    train: &ChoiceDataset,
    cfg: &MnlConfig,
) -> Result<(IndependentModel<T>, MnlFit<T>)> {
    Ok((fit_independent(train)?, fit_mnl(train, cfg)?))
}
