use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, OUTSIDE};
use crate::model::StochasticSetModel;
use crate::scalar::{CompensatedSum, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Stop once one iteration gains less than this in log-likelihood.
    pub ll_tol: f64,
    /// Squared-extrapolation steps (SQUAREM) with a fallback to the plain
    /// double step whenever extrapolation does not gain likelihood.
    pub accelerate: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iters: 500, ll_tol: 1e-9, accelerate: true }
    }
}

/// Fitted choice probabilities `Y_{i,S}` over `S ∪ {0}` for one observed
/// assortment, outside option first.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedRow<T> {
    pub assortment: ItemSet,
    pub probabilities: Vec<(ProductId, T)>,
}

/// Weights over a fixed support and the probabilities they fit.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedProgramState<T> {
    pub support: Vec<ItemSet>,
    pub lambda: Vec<T>,
    /// One row per observed assortment, in dataset order.
    pub fitted: Vec<FittedRow<T>>,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood at the initial weights and after every accepted iteration.
    pub trace: Vec<T>,
}

impl<T: Scalar> RestrictedProgramState<T> {
    pub fn fitted(&self, assortment: ItemSet, choice: ProductId) -> Option<T> {
        let k = self.fitted.binary_search_by_key(&assortment, |r| r.assortment).ok()?;
        self.fitted[k].probabilities.iter().find(|e| e.0 == choice).map(|e| e.1)
    }

    /// The model over the support, dropping weights at or below `threshold`.
    pub fn to_model(&self, data: &ChoiceDataset, threshold: T) -> Result<StochasticSetModel<T>> {
        StochasticSetModel::normalized(
            data.universe(),
            self.support.iter().copied().zip(self.lambda.iter().copied()).filter(|e| e.1 > threshold),
        )
    }
}

/// `A_{S,C,i}`: probability that a customer with preselected set `C`
/// picks `i` from `S`.
#[inline]
pub(crate) fn coefficient<T: Scalar>(c: ItemSet, s: ItemSet, i: ProductId) -> T {
    let overlap = c.intersection(s);
    if i == OUTSIDE {
        if overlap.is_empty() {
            T::one()
        } else {
            T::zero()
        }
    } else if overlap.contains(i) {
        T::one() / T::from_count(overlap.len() as u64)
    } else {
        T::zero()
    }
}

/// Observed cells and, per column, its nonzero coefficients on them.
struct Design<T> {
    cells: Vec<(ItemSet, ProductId, T)>,
    columns: Vec<Vec<(usize, T)>>,
    total: T,
}

const MAX_BACKTRACKS: usize = 8;

fn normalize<T: Scalar>(w: &mut [T]) {
    let total: T = w.iter().copied().collect::<CompensatedSum<T>>().value();
    for x in w {
        *x /= total;
    }
}

impl<T: Scalar> Design<T> {
    fn new(data: &ChoiceDataset, support: &[ItemSet]) -> Self {
        let cells: Vec<(ItemSet, ProductId, T)> =
            data.cells().map(|(s, i, tau)| (s, i, T::from_count(tau))).collect();
        let columns = support
            .iter()
            .map(|&c| {
                cells
                    .iter()
                    .enumerate()
                    .filter_map(|(k, &(s, i, _))| {
                        let a = coefficient::<T>(c, s, i);
                        (a > T::zero()).then_some((k, a))
                    })
                    .collect()
            })
            .collect();
        Self { cells, columns, total: T::from_count(data.total()) }
    }

    fn fitted(&self, lambda: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.cells.len()];
        for (col, &w) in self.columns.iter().zip(lambda) {
            for &(k, a) in col {
                y[k] += w * a;
            }
        }
        y
    }

    /// One EM update of `lambda`, whose fitted probabilities are `y`.
    fn update(&self, lambda: &[T], y: &[T]) -> Vec<T> {
        let ratio: Vec<T> = self.cells.iter().zip(y).map(|(c, &p)| c.2 / p).collect();
        let mut next: Vec<T> = lambda
            .iter()
            .zip(&self.columns)
            .map(|(&w, col)| {
                let mut score = T::zero();
                for &(k, a) in col {
                    score += a * ratio[k];
                }
                w * score / self.total
            })
            .collect();
        normalize(&mut next);
        next
    }

    /// Weights, fitted probabilities and log-likelihood one update past `lambda`.
    fn step(&self, lambda: &[T], y: &[T]) -> (Vec<T>, Vec<T>, T) {
        let next = self.update(lambda, y);
        let y = self.fitted(&next);
        let ll = self.log_likelihood(&y);
        (next, y, ll)
    }

    /// Squared extrapolation from `lambda` through two updates. Returns the
    /// better of the extrapolated point (after one more update) and the
    /// plain double step.
    fn squarem(&self, lambda: &[T], y: &[T]) -> (Vec<T>, Vec<T>, T) {
        let (l1, y1, _) = self.step(lambda, y);
        let plain = self.step(&l1, &y1);
        let l2 = &plain.0;
        let r: Vec<T> = l1.iter().zip(lambda).map(|(&a, &b)| a - b).collect();
        let v: Vec<T> = l2.iter().zip(&l1).zip(&r).map(|((&a, &b), &r)| a - b - r).collect();
        let norm = |x: &[T]| x.iter().fold(T::zero(), |acc, &e| acc + e * e).sqrt();
        let (nr, nv) = (norm(&r), norm(&v));
        if !(nv > T::zero()) || !(nr > T::zero()) {
            return plain;
        }
        let mut alpha = (-nr / nv).min(-T::one());
        let two = T::lit(2.0);
        for _ in 0..MAX_BACKTRACKS {
            if alpha >= -T::one() {
                break;
            }
            let mut p: Vec<T> =
                lambda.iter().zip(&r).zip(&v).map(|((&l, &r), &v)| l - two * alpha * r + alpha * alpha * v).collect();
            if p.iter().all(|&x| x >= T::zero()) {
                normalize(&mut p);
                let yp = self.fitted(&p);
                if yp.iter().all(|&q| q > T::zero()) {
                    let candidate = self.step(&p, &yp);
                    if candidate.2.is_finite() && candidate.2 >= plain.2 {
                        return candidate;
                    }
                }
            }
            alpha = (alpha - T::one()) / two;
        }
        plain
    }

    fn log_likelihood(&self, y: &[T]) -> T {
        let mut acc = CompensatedSum::new();
        for (&(_, _, tau), &p) in self.cells.iter().zip(y) {
            acc.add(tau * p.ln());
        }
        acc.value()
    }
}

/// EM over a fixed support.
///
/// Each iteration sets `λ_C ← λ_C Σ_{S,i} τ(S,i) A_{S,C,i} / (T Y_{i,S})`:
/// the expected share of customers of type `C` given the observed choices.
/// With `cfg.accelerate` one iteration is a safeguarded SQUAREM cycle of
/// three updates; the trace stays nondecreasing either way. `init`
/// defaults to uniform weights.
pub fn em_fit<T: Scalar>(
    data: &ChoiceDataset,
    support: &[ItemSet],
    init: Option<&[T]>,
    cfg: &EmConfig,
) -> Result<RestrictedProgramState<T>> {
    if data.is_empty() {
        return Err(SsmError::Input("cannot fit on an empty dataset".into()));
    }
    if support.is_empty() {
        return Err(SsmError::Input("support must be nonempty".into()));
    }
    for &c in support {
        data.universe().check_set(c)?;
    }
    let mut lambda: Vec<T> = match init {
        Some(w) => {
            if w.len() != support.len() {
                return Err(SsmError::Domain(format!(
                    "{} initial weights for {} support sets",
                    w.len(),
                    support.len()
                )));
            }
            if w.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
                return Err(SsmError::Domain("initial weights must be finite and nonnegative".into()));
            }
            let total: T = w.iter().copied().collect::<CompensatedSum<T>>().value();
            if !(total > T::zero()) {
                return Err(SsmError::Domain("initial weights sum to zero".into()));
            }
            w.iter().map(|&x| x / total).collect()
        }
        None => vec![T::one() / T::from_count(support.len() as u64); support.len()],
    };
    let design = Design::new(data, support);
    let mut covered = vec![false; design.cells.len()];
    for col in &design.columns {
        for &(k, _) in col {
            covered[k] = true;
        }
    }
    if let Some(k) = covered.iter().position(|&c| !c) {
        let (s, i, _) = design.cells[k];
        return Err(SsmError::Coverage { assortment: s, choice: i });
    }
    let mut y = design.fitted(&lambda);
    if let Some(k) = y.iter().position(|p| !(*p > T::zero())) {
        let (s, i, _) = design.cells[k];
        return Err(SsmError::Input(format!("initial weights give observation ({s}, {i}) zero probability")));
    }
    let mut ll = design.log_likelihood(&y);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    let tol = T::lit(cfg.ll_tol);
    while iterations < cfg.max_iters {
        let (l, fitted, next) = if cfg.accelerate { design.squarem(&lambda, &y) } else { design.step(&lambda, &y) };
        iterations += 1;
        if !(next >= ll) {
            // Rounding at the fixed point; keep the better weights.
            converged = true;
            break;
        }
        lambda = l;
        y = fitted;
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain < tol {
            converged = true;
            break;
        }
    }
    let fitted = data
        .assortments()
        .map(|s| {
            let probabilities = std::iter::once(OUTSIDE)
                .chain(s.iter())
                .map(|i| {
                    let mut acc = CompensatedSum::new();
                    for (&c, &w) in support.iter().zip(&lambda) {
                        acc.add(w * coefficient::<T>(c, s, i));
                    }
                    (i, acc.value())
                })
                .collect();
            FittedRow { assortment: s, probabilities }
        })
        .collect();
    Ok(RestrictedProgramState {
        support: support.to_vec(),
        lambda,
        fitted,
        log_likelihood: ll,
        iterations,
        converged,
        trace,
    })
}
