//! Maximum-likelihood estimation of a stochastic set model from
//! transactions: EM over a fixed support, wrapped in column generation
//! whose pricing subproblem is solved exactly.

mod cg;
mod duals;
mod em;
mod milp;

pub use cg::{column_generation_fit, ColumnGenerationConfig, ColumnGenerationFit, FitReport, RoundRecord, StopReason, SubproblemSolver};
pub use duals::{cg_subproblem_bruteforce, dual_prices, reduced_cost, DualPrices, DualRow, SubproblemSolution, MAX_BRUTE_FORCE_PRODUCTS};
pub use em::{em_fit, EmConfig, FittedRow, RestrictedProgramState};
#[cfg(feature = "milp")]
pub use milp::solve_milp;
pub use milp::{cg_subproblem_milp_spec, CgSubproblemFormulation, ConstraintFamily, LinearConstraint, MilpVar, Sense, VarKind, VariableSpec};
