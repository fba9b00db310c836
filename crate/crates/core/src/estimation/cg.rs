use std::time::{Duration, Instant};

use log::{debug, info};
use serde::Serialize;

use super::duals::{bruteforce_until, dual_prices, DualPrices, SubproblemSolution, MAX_BRUTE_FORCE_PRODUCTS};
use super::em::{em_fit, EmConfig, RestrictedProgramState};
use crate::dataset::ChoiceDataset;
use crate::error::{Result, SsmError};
use crate::itemset::ItemSet;
use crate::model::StochasticSetModel;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubproblemSolver {
    /// Exhaustive enumeration of all `2^n` columns.
    BruteForce,
    /// The MILP formulation, solved by the bundled backend.
    #[cfg(feature = "milp")]
    Milp,
}

#[derive(Clone, Debug)]
pub struct ColumnGenerationConfig {
    /// Stop once the best reduced cost is at most `rc_tol · T`.
    pub rc_tol: f64,
    pub max_columns: usize,
    pub time_limit: Option<Duration>,
    /// Cap per pricing call (exhaustive solver only).
    pub subproblem_time_limit: Option<Duration>,
    pub em: EmConfig,
    /// EM run before accepting optimality and on the final support.
    pub final_em: EmConfig,
    pub prune_threshold: f64,
    pub solver: SubproblemSolver,
}

impl Default for ColumnGenerationConfig {
    fn default() -> Self {
        Self {
            rc_tol: 1e-7,
            max_columns: 200,
            time_limit: None,
            subproblem_time_limit: None,
            em: EmConfig::default(),
            final_em: EmConfig { max_iters: 5000, ..Default::default() },
            prune_threshold: 1e-12,
            solver: SubproblemSolver::BruteForce,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No column has reduced cost above the tolerance.
    Optimal,
    ColumnLimit,
    TimeLimit,
    /// The pricing search timed out without finding an improving column.
    SubproblemTimeLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub log_likelihood: f64,
    pub em_iterations: usize,
    pub best_column: ItemSet,
    pub reduced_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub rounds: usize,
    pub columns_added: usize,
    pub em_iterations: usize,
    pub initial_log_likelihood: f64,
    pub final_log_likelihood: f64,
    pub support_size: usize,
    pub stop: StopReason,
    pub history: Vec<RoundRecord>,
}

#[derive(Clone, Debug)]
pub struct ColumnGenerationFit<T> {
    pub model: StochasticSetModel<T>,
    pub state: RestrictedProgramState<T>,
    pub report: FitReport,
}

fn price<T: Scalar>(
    duals: &DualPrices<T>,
    solver: SubproblemSolver,
    deadline: Option<Instant>,
) -> Result<SubproblemSolution<T>> {
    match solver {
        SubproblemSolver::BruteForce => bruteforce_until(duals, deadline),
        #[cfg(feature = "milp")]
        SubproblemSolver::Milp => super::milp::solve_milp(&super::milp::cg_subproblem_milp_spec(duals)),
    }
}

/// Moves weight `η` onto column `position` of `support`, halving `η` from
/// `1/|support|` until the likelihood improves. A positive reduced cost is
/// the slope of the likelihood along this direction, so a small enough step
/// always helps; `None` means no representable step does.
fn mix_in<T: Scalar>(
    data: &ChoiceDataset,
    support: &[ItemSet],
    state: &RestrictedProgramState<T>,
    position: usize,
) -> Result<Option<Vec<T>>> {
    let probe = EmConfig { max_iters: 0, ll_tol: 0.0, accelerate: false };
    let mut base = state.lambda.clone();
    base.resize(support.len(), T::zero());
    let mut eta = T::one() / T::from_count(support.len() as u64);
    for _ in 0..MAX_STEP_HALVINGS {
        let lambda: Vec<T> = base
            .iter()
            .enumerate()
            .map(|(k, &w)| w * (T::one() - eta) + if k == position { eta } else { T::zero() })
            .collect();
        if let Ok(trial) = em_fit(data, support, Some(&lambda), &probe) {
            if trial.log_likelihood > state.log_likelihood {
                return Ok(Some(lambda));
            }
        }
        eta = eta / T::lit(2.0);
    }
    Ok(None)
}

const MAX_STEP_HALVINGS: usize = 40;

/// Maximum-likelihood fit by column generation.
///
/// Starts from `{∅} ∪ {{i}}`, which gives every possible observation
/// positive probability, and keeps moving weight onto the column with the
/// largest reduced cost, appending it when it is new.
pub fn column_generation_fit<T: Scalar>(
    data: &ChoiceDataset,
    cfg: &ColumnGenerationConfig,
) -> Result<ColumnGenerationFit<T>> {
    if data.is_empty() {
        return Err(SsmError::Input("cannot fit on an empty dataset".into()));
    }
    if !(cfg.rc_tol > 0.0) {
        return Err(SsmError::Input("rc_tol must be positive".into()));
    }
    let universe = data.universe();
    if cfg.solver == SubproblemSolver::BruteForce && universe.n() > MAX_BRUTE_FORCE_PRODUCTS {
        return Err(SsmError::Capacity(format!(
            "exhaustive pricing is limited to n ≤ {MAX_BRUTE_FORCE_PRODUCTS}; use the MILP backend"
        )));
    }
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|d| start + d);
    let threshold = T::lit(cfg.rc_tol) * T::from_count(data.total());

    let mut support: Vec<ItemSet> = std::iter::once(ItemSet::EMPTY).chain(universe.products().map(ItemSet::singleton)).collect();
    let mut state = em_fit::<T>(data, &support, None, &cfg.em)?;
    let initial = state.trace[0].as_f64();
    let mut em_iterations = state.iterations;
    let mut polished = false;
    let mut history = Vec::new();
    let mut columns_added = 0;
    let stop = loop {
        let duals = dual_prices(data, &state)?;
        let sub_deadline = match (cfg.subproblem_time_limit.map(|d| Instant::now() + d), deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let best = price(&duals, cfg.solver, sub_deadline)?;
        history.push(RoundRecord {
            log_likelihood: state.log_likelihood.as_f64(),
            em_iterations: state.iterations,
            best_column: best.column,
            reduced_cost: best.value.as_f64(),
        });
        debug!("round {}: LL {} best {} rc {}", history.len(), state.log_likelihood, best.column, best.value);
        if best.value <= threshold {
            if !best.proven_optimal {
                break StopReason::SubproblemTimeLimit;
            }
            if polished {
                break StopReason::Optimal;
            }
            state = em_fit(data, &support, Some(&state.lambda), &cfg.final_em)?;
            em_iterations += state.iterations;
            polished = true;
            continue;
        }
        if columns_added >= cfg.max_columns && !support.contains(&best.column) {
            break StopReason::ColumnLimit;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break StopReason::TimeLimit;
        }
        let (candidate_support, position) = match support.iter().position(|&c| c == best.column) {
            Some(k) => (support.clone(), k),
            None => {
                let mut extended = support.clone();
                extended.push(best.column);
                (extended, support.len())
            }
        };
        match mix_in(data, &candidate_support, &state, position)? {
            Some(lambda) => {
                if candidate_support.len() > support.len() {
                    columns_added += 1;
                }
                support = candidate_support;
                state = em_fit(data, &support, Some(&lambda), &cfg.em)?;
                em_iterations += state.iterations;
                polished = false;
            }
            None if polished => {
                return Err(SsmError::DualInconsistency { column: best.column, value: best.value.as_f64() });
            }
            None => {
                state = em_fit(data, &support, Some(&state.lambda), &cfg.final_em)?;
                em_iterations += state.iterations;
                polished = true;
            }
        }
    };
    if !polished {
        state = em_fit(data, &support, Some(&state.lambda), &cfg.final_em)?;
        em_iterations += state.iterations;
    }
    let model = state.to_model(data, T::lit(cfg.prune_threshold))?;
    let report = FitReport {
        rounds: history.len(),
        columns_added,
        em_iterations,
        initial_log_likelihood: initial,
        final_log_likelihood: state.log_likelihood.as_f64(),
        support_size: model.support().len(),
        stop,
        history,
    };
    info!(
        "column generation: {} columns added, LL {} -> {}, stop {:?}",
        report.columns_added, report.initial_log_likelihood, report.final_log_likelihood, report.stop
    );
    Ok(ColumnGenerationFit { model, state, report })
}
