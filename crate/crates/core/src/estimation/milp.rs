//! Mixed-integer formulation of the pricing subproblem.
//!
//! `x_i` selects the products of the new column and `z_S` flags
//! assortments it misses. `u_S` stands for `1/|C ∩ S|` and `q_{S,i}` for the
//! product `x_i u_S`, which the first three constraint families linearize
//! exactly because `x_i` is binary.

use std::fmt::Write;

use super::duals::DualPrices;
#[cfg(feature = "milp")]
use super::duals::SubproblemSolution;
#[cfg(feature = "milp")]
use crate::error::{Result, SsmError};
use crate::itemset::{ItemSet, ProductId, OUTSIDE};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MilpVar {
    X(ProductId),
    /// Indexed by position of the assortment in the formulation.
    Z(usize),
    U(usize),
    Q(usize, ProductId),
}

impl MilpVar {
    pub fn name(self) -> String {
        match self {
            MilpVar::X(i) => format!("x{i}"),
            MilpVar::Z(s) => format!("z{s}"),
            MilpVar::U(s) => format!("u{s}"),
            MilpVar::Q(s, i) => format!("q{s}_{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariableSpec<T> {
    pub var: MilpVar,
    pub kind: VarKind,
    pub lower: T,
    pub upper: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    LessEq,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintFamily {
    /// `q_{S,i} ≤ x_i`
    QBelowX,
    /// `q_{S,i} ≤ u_S`
    QBelowU,
    /// `u_S + x_i ≤ q_{S,i} + 1`
    Linking,
    /// `z_S + Σ_{i∈S} q_{S,i} = 1`
    Choice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint<T> {
    pub family: ConstraintFamily,
    pub terms: Vec<(MilpVar, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// The pricing MILP: maximize `objective + objective_constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct CgSubproblemFormulation<T> {
    pub n: usize,
    pub assortments: Vec<ItemSet>,
    pub variables: Vec<VariableSpec<T>>,
    pub objective: Vec<(MilpVar, T)>,
    /// `β`, added to the MILP optimum to obtain the reduced cost.
    pub objective_constant: T,
    pub constraints: Vec<LinearConstraint<T>>,
}

pub fn cg_subproblem_milp_spec<T: Scalar>(duals: &DualPrices<T>) -> CgSubproblemFormulation<T> {
    let n = duals.universe.n();
    let one = T::one();
    let mut variables: Vec<VariableSpec<T>> = duals
        .universe
        .products()
        .map(|i| VariableSpec { var: MilpVar::X(i), kind: VarKind::Binary, lower: T::zero(), upper: one })
        .collect();
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut assortments = Vec::new();
    for (k, row) in duals.rows.iter().enumerate() {
        let s = row.assortment;
        assortments.push(s);
        variables.push(VariableSpec { var: MilpVar::Z(k), kind: VarKind::Binary, lower: T::zero(), upper: one });
        variables.push(VariableSpec {
            var: MilpVar::U(k),
            kind: VarKind::Continuous,
            lower: one / T::from_count(n as u64),
            upper: one,
        });
        objective.push((MilpVar::Z(k), row.alpha[OUTSIDE]));
        let mut choice = vec![(MilpVar::Z(k), one)];
        for i in s.iter() {
            let q = MilpVar::Q(k, i);
            variables.push(VariableSpec { var: q, kind: VarKind::Continuous, lower: T::zero(), upper: one });
            objective.push((q, row.alpha[i]));
            constraints.push(LinearConstraint {
                family: ConstraintFamily::QBelowX,
                terms: vec![(q, one), (MilpVar::X(i), -one)],
                sense: Sense::LessEq,
                rhs: T::zero(),
            });
            constraints.push(LinearConstraint {
                family: ConstraintFamily::QBelowU,
                terms: vec![(q, one), (MilpVar::U(k), -one)],
                sense: Sense::LessEq,
                rhs: T::zero(),
            });
            constraints.push(LinearConstraint {
                family: ConstraintFamily::Linking,
                terms: vec![(MilpVar::U(k), one), (MilpVar::X(i), one), (q, -one)],
                sense: Sense::LessEq,
                rhs: one,
            });
            choice.push((q, one));
        }
        constraints.push(LinearConstraint { family: ConstraintFamily::Choice, terms: choice, sense: Sense::Eq, rhs: one });
    }
    CgSubproblemFormulation { n, assortments, variables, objective, objective_constant: duals.beta, constraints }
}

fn write_terms<T: Scalar>(out: &mut String, terms: &[(MilpVar, T)]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        let c = c.as_f64();
        if k == 0 {
            let _ = write!(out, "{c:e} {}", v.name());
        } else if c < 0.0 {
            let _ = write!(out, " - {:e} {}", -c, v.name());
        } else {
            let _ = write!(out, " + {c:e} {}", v.name());
        }
    }
    if terms.is_empty() {
        out.push('0');
    }
}

impl<T: Scalar> CgSubproblemFormulation<T> {
    pub fn variable_count(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind == kind).count()
    }

    /// CPLEX LP text. The constant `β` is recorded as a comment because the
    /// format has no objective offset.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ objective offset {:e}", self.objective_constant.as_f64());
        out.push_str("Maximize\n obj: ");
        write_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{k}: ");
            write_terms(&mut out, &c.terms);
            let op = match c.sense {
                Sense::LessEq => "<=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {:e}", c.rhs.as_f64());
        }
        out.push_str("Bounds\n");
        for v in &self.variables {
            let _ = writeln!(out, " {:e} <= {} <= {:e}", v.lower.as_f64(), v.var.name(), v.upper.as_f64());
        }
        out.push_str("Binaries\n");
        for v in self.variables.iter().filter(|v| v.kind == VarKind::Binary) {
            let _ = writeln!(out, " {}", v.var.name());
        }
        out.push_str("End\n");
        out
    }
}

/// Solves the formulation with the bundled pure-Rust branch-and-bound
/// solver and returns the column read off `x`.
#[cfg(feature = "milp")]
pub fn solve_milp<T: Scalar>(formulation: &CgSubproblemFormulation<T>) -> Result<SubproblemSolution<T>> {
    use std::collections::HashMap;

    use good_lp::{microlp, variable, Expression, ProblemVariables, Solution, SolverModel, Variable};

    let mut vars = ProblemVariables::new();
    let mut handles: HashMap<MilpVar, Variable> = HashMap::new();
    for spec in &formulation.variables {
        let def = match spec.kind {
            VarKind::Binary => variable().binary(),
            VarKind::Continuous => variable().min(spec.lower.as_f64()).max(spec.upper.as_f64()),
        };
        handles.insert(spec.var, vars.add(def));
    }
    let expr = |terms: &[(MilpVar, T)]| {
        let mut e = Expression::with_capacity(terms.len());
        for &(v, c) in terms {
            e.add_mul(c.as_f64(), handles[&v]);
        }
        e
    };
    let mut model = vars.maximise(expr(&formulation.objective)).using(microlp);
    for c in &formulation.constraints {
        let lhs = expr(&c.terms);
        let rhs = c.rhs.as_f64();
        model = model.with(match c.sense {
            Sense::LessEq => lhs.leq(rhs),
            Sense::Eq => lhs.eq(rhs),
        });
    }
    let solution = model.solve().map_err(|e| SsmError::Solver(e.to_string()))?;
    let column = ItemSet::from_ids(
        (1..=formulation.n).filter(|&i| solution.value(handles[&MilpVar::X(i)]) > 0.5),
    )?;
    let value = expr(&formulation.objective).eval_with(&solution) + formulation.objective_constant.as_f64();
    Ok(SubproblemSolution { column, value: T::lit(value), proven_optimal: true })
}
