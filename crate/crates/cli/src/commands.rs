use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use ssm_core::assortment::{
    brute_force_assortment, dp_exact_assortment, fptas_assortment, vertex_cover_instance, Graph, PriceVector,
};
use ssm_core::estimation::{column_generation_fit, ColumnGenerationConfig, EmConfig, SubproblemSolver};
use ssm_core::evaluation::{
    asymmetry_exhaustive, asymmetry_index, evaluate, train_test_split, AsymmetryEstimate, Candidate, Divergence,
    MnlConfig,
};
use ssm_core::identification::{
    check_cannibalization_monotonicity, check_corollaries, check_d_regularity, check_s_cannibalization,
    identify_full, CorollaryCheck, Strategy,
};
use ssm_core::io;
use ssm_core::synthetic::{simulate, AssortmentSampler, SyntheticSpec};
use ssm_core::{
    log_likelihood, ChoiceDataset, ChoiceModel, ChoiceProbabilityTable, LogLikelihood, MnlModel,
    ProductUniverse, StochasticSetModel,
};

use crate::args::*;

/// Whether a command computed its result or rejected its input as
/// inconsistent with the model class.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Done,
    Rejected,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn emit(mut value: Value) -> Result<()> {
    io::round_json(&mut value);
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &value)?;
    writeln!(out)?;
    Ok(())
}

/// JSON number, or a string for infinities.
fn number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn support_json(model: &StochasticSetModel) -> Value {
    model.support().iter().map(|&(set, weight)| json!({ "set": set, "weight": weight })).collect()
}

fn read_model(path: &Path) -> Result<StochasticSetModel> {
    io::read_model(open(path)?).with_context(|| format!("reading model {}", path.display()))
}

fn write_model(path: &Path, model: &StochasticSetModel) -> Result<()> {
    let mut w = create(path)?;
    io::write_model(&mut w, model).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

fn read_table(path: &Path) -> Result<ChoiceProbabilityTable> {
    io::read_table(open(path)?).with_context(|| format!("reading table {}", path.display()))
}

fn read_dataset(path: &Path, n: Option<usize>) -> Result<ChoiceDataset> {
    let records = io::read_transactions(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let universe = match n {
        Some(n) => ProductUniverse::new(n)?,
        None => io::infer_universe(&records)?,
    };
    Ok(ChoiceDataset::ingest(universe, records).with_context(|| format!("ingesting {}", path.display()))?)
}

fn seconds(x: Option<f64>, flag: &str) -> Result<Option<Duration>> {
    x.map(|s| Duration::try_from_secs_f64(s).with_context(|| format!("--{flag} must be a nonnegative number of seconds")))
        .transpose()
}

fn positive(x: f64, flag: &str) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("--{flag} must be positive, got {x}");
    }
    Ok(())
}

fn fit_config(o: &FitOptions) -> Result<ColumnGenerationConfig> {
    positive(o.rc_tol, "rc-tol")?;
    positive(o.em_tol, "em-tol")?;
    let accelerate = !o.no_accelerate;
    Ok(ColumnGenerationConfig {
        rc_tol: o.rc_tol,
        max_columns: o.max_columns,
        time_limit: seconds(o.time_limit, "time-limit")?,
        subproblem_time_limit: seconds(o.subproblem_time_limit, "subproblem-time-limit")?,
        em: EmConfig { max_iters: o.em_max_iters, ll_tol: o.em_tol, accelerate },
        final_em: EmConfig { max_iters: o.final_em_max_iters, ll_tol: o.em_tol, accelerate },
        solver: match o.solver {
            SolverArg::Brute => SubproblemSolver::BruteForce,
            SolverArg::Milp => SubproblemSolver::Milp,
        },
        ..Default::default()
    })
}

pub fn simulate_cmd(a: &SimulateArgs, seed: u64) -> Result<Status> {
    let sampler = if a.uniform {
        AssortmentSampler::Uniform
    } else {
        AssortmentSampler::Pool { size: a.pool_size.unwrap_or(2 * a.n) }
    };
    let spec = SyntheticSpec {
        n: a.n,
        support_size: a.support,
        max_set_size: a.max_set_size.unwrap_or(a.n),
        sampler,
        transactions: a.transactions,
    };
    if a.support == 0 {
        bail!("--support must be at least 1");
    }
    let (model, records) = simulate(&spec, seed)?;
    write_model(&a.model_out, &model)?;
    let mut w = create(&a.transactions_out)?;
    io::write_transactions(&mut w, &records)?;
    w.flush()?;
    let data = ChoiceDataset::ingest(model.universe(), records.iter().copied())?;
    let ll = if data.is_empty() { json!(0.0) } else { ll_json(log_likelihood(&model, &data)?) };
    emit(json!({
        "n": a.n,
        "seed": seed,
        "support": support_json(&model),
        "transactions": records.len(),
        "distinct_assortments": data.assortment_count(),
        "true_log_likelihood": ll,
    }))?;
    Ok(Status::Done)
}

fn ll_json(ll: LogLikelihood<f64>) -> Value {
    number(ll.to_scalar())
}

pub fn fit_cmd(a: &FitArgs) -> Result<Status> {
    let data = read_dataset(&a.transactions, a.n)?;
    let cfg = fit_config(&a.options)?;
    let fit = column_generation_fit::<f64>(&data, &cfg)?;
    write_model(&a.model_out, &fit.model)?;
    if let Some(path) = &a.report_out {
        let mut value = serde_json::to_value(&fit.report)?;
        io::round_json(&mut value);
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &value)?;
        writeln!(w)?;
        w.flush()?;
    }
    let r = &fit.report;
    emit(json!({
        "transactions": data.total(),
        "rounds": r.rounds,
        "columns_added": r.columns_added,
        "em_iterations": r.em_iterations,
        "initial_log_likelihood": r.initial_log_likelihood,
        "final_log_likelihood": r.final_log_likelihood,
        "support_size": fit.model.support().len(),
        "stop": r.stop,
        "support": support_json(&fit.model),
    }))?;
    Ok(Status::Done)
}

fn mnl(weights: &[f64]) -> Result<MnlModel> {
    if weights.is_empty() {
        bail!("--mnl-weights needs at least one weight");
    }
    Ok(MnlModel::new(ProductUniverse::new(weights.len())?, weights.to_vec())?)
}

pub fn table_cmd(a: &TableArgs) -> Result<Status> {
    let table = match (&a.model, &a.mnl_weights) {
        (Some(path), _) => ChoiceProbabilityTable::from_model(&read_model(path)?)?,
        (None, Some(w)) => ChoiceProbabilityTable::from_model(&mnl(w)?)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let mut w = create(&a.out)?;
    io::write_table(&mut w, &table)?;
    w.flush()?;
    emit(json!({ "n": table.universe().n(), "rows": table.universe().subset_count() }))?;
    Ok(Status::Done)
}

pub fn identify_cmd(a: &IdentifyArgs) -> Result<Status> {
    positive(a.tol, "tol")?;
    let table = read_table(&a.table)?;
    let strategy = match a.strategy {
        StrategyArg::Outside => Strategy::Outside,
        StrategyArg::PerItem => Strategy::PerItem,
    };
    match identify_full(&table, strategy, a.tol) {
        Ok(report) => {
            if let Some(path) = &a.model_out {
                write_model(path, &report.recovered)?;
            }
            emit(json!({
                "consistent": true,
                "strategy": strategy,
                "support": support_json(&report.recovered),
                "residual_negativity": report.residual_negativity,
                "normalization_gap": report.normalization_gap,
                "reproduction_error": report.reproduction_error,
            }))?;
            Ok(Status::Done)
        }
        Err(ssm_core::SsmError::Inconsistent(reason)) => {
            emit(json!({ "consistent": false, "strategy": strategy, "reason": reason }))?;
            Ok(Status::Rejected)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn check_axioms_cmd(a: &CheckAxiomsArgs, seed: u64) -> Result<Status> {
    positive(a.tol, "tol")?;
    let table = read_table(&a.table)?;
    let mut violations = check_s_cannibalization(&table, a.tol)?;
    violations.extend(check_d_regularity(&table, a.tol)?);
    if a.extended {
        violations.extend(check_corollaries(&table, a.tol, CorollaryCheck { seed, ..Default::default() })?);
        if table.universe().n() <= ssm_core::identification::EXHAUSTIVE_CHECK_LIMIT {
            violations.extend(check_cannibalization_monotonicity(&table, a.tol)?);
        }
    }
    let consistent = violations.is_empty();
    emit(json!({
        "consistent": consistent,
        "tolerance": a.tol,
        "violation_count": violations.len(),
        "violations": violations,
    }))?;
    Ok(if consistent { Status::Done } else { Status::Rejected })
}

pub fn optimize_cmd(a: &OptimizeArgs) -> Result<Status> {
    let model = read_model(&a.model)?;
    let pairs = io::read_prices(open(&a.prices)?).with_context(|| format!("reading {}", a.prices.display()))?;
    let prices = PriceVector::from_pairs(model.universe(), &pairs)?;
    let solution = match a.method {
        MethodArg::Brute => brute_force_assortment(&model, &prices)?,
        MethodArg::Dp => dp_exact_assortment(&model, &prices)?,
        MethodArg::Fptas => fptas_assortment(&model, &prices, a.epsilon)?,
    };
    emit(json!({
        "assortment": solution.assortment,
        "expected_revenue": solution.expected_revenue,
        "method": solution.method,
    }))?;
    Ok(Status::Done)
}

pub fn evaluate_cmd(a: &EvaluateArgs, seed: u64) -> Result<Status> {
    let data = read_dataset(&a.transactions, a.n)?;
    let (train, test) = match &a.test {
        Some(path) => (data.clone(), read_dataset(path, Some(data.universe().n()))?),
        None => train_test_split(&data, a.test_fraction, seed)?,
    };
    let cfg = fit_config(&a.options)?;
    let candidates: Vec<Candidate> = a
        .models
        .iter()
        .map(|m| match m {
            ModelArg::Ssm => Candidate::Ssm(cfg.clone()),
            ModelArg::Mnl => Candidate::Mnl(MnlConfig::default()),
            ModelArg::Independent => Candidate::Independent,
        })
        .collect();
    let scores = evaluate::<f64>(&candidates, &train, &test)?;
    let rows: Vec<Value> = scores
        .iter()
        .map(|s| {
            json!({
                "model": s.model,
                "train_log_likelihood": ll_json(s.train_log_likelihood),
                "kl": match s.metrics.kl { Divergence::Finite(v) => number(v), Divergence::Infinite => json!("inf") },
                "mape": number(s.metrics.mape),
                "skipped_cells": s.metrics.skipped_cells,
                "warnings": s.warnings,
            })
        })
        .collect();
    emit(json!({ "train_transactions": train.total(), "test_transactions": test.total(), "models": rows }))?;
    Ok(Status::Done)
}

fn asymmetry_of<M: ChoiceModel<f64> + Sync>(model: &M, a: &AsymmetryArgs, seed: u64) -> Result<AsymmetryEstimate<f64>> {
    Ok(if a.exhaustive { asymmetry_exhaustive(model)? } else { asymmetry_index(model, a.samples, seed)? })
}

pub fn asymmetry_cmd(a: &AsymmetryArgs, seed: u64) -> Result<Status> {
    let est = match (&a.model, &a.table, &a.mnl_weights) {
        (Some(path), _, _) => asymmetry_of(&read_model(path)?, a, seed)?,
        (None, Some(path), _) => asymmetry_of(&read_table(path)?, a, seed)?,
        (None, None, Some(w)) => asymmetry_of(&mnl(w)?, a, seed)?,
        (None, None, None) => unreachable!("clap requires a source"),
    };
    emit(json!({
        "index": est.index,
        "std_error": est.std_error,
        "samples": est.n_samples,
        "resampled": est.resampled,
        "exhaustive": a.exhaustive,
        "seed": est.seed,
    }))?;
    Ok(Status::Done)
}

pub fn reduce_vc_cmd(a: &ReduceVcArgs) -> Result<Status> {
    let (edges, max_vertex) = io::read_edge_list(open(&a.graph)?).with_context(|| format!("reading {}", a.graph.display()))?;
    let vertices = a.vertices.unwrap_or(max_vertex);
    if vertices < max_vertex {
        bail!("--vertices {vertices} is below the largest vertex id {max_vertex} in the edge list");
    }
    let graph = Graph::new(vertices, &edges)?;
    if a.k > vertices {
        bail!("--k {} exceeds the vertex count {vertices}", a.k);
    }
    let inst = vertex_cover_instance::<f64>(&graph, a.k)?;
    if let Some(path) = &a.model_out {
        write_model(path, &inst.model)?;
    }
    if let Some(path) = &a.prices_out {
        let mut w = create(path)?;
        io::write_prices(&mut w, inst.prices.prices())?;
        w.flush()?;
    }
    let mut report = json!({
        "vertices": vertices,
        "edges": graph.edges().len(),
        "k": a.k,
        "products": vertices + 1,
        "edge_weight": inst.edge_weight,
        "threshold": inst.threshold,
    });
    if a.solve {
        let best = brute_force_assortment(&inst.model, &inst.prices)?;
        let cover: Vec<usize> = best.assortment.iter().filter(|&i| i <= vertices).collect();
        report["optimal_revenue"] = json!(best.expected_revenue);
        report["optimal_assortment"] = json!(best.assortment);
        report["cover_within_k"] = json!(best.expected_revenue >= inst.threshold - 1e-12);
        report["offered_vertices"] = json!(cover);
    }
    emit(report)?;
    Ok(Status::Done)
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(a, cli.seed),
        Command::Fit(a) => fit_cmd(a),
        Command::Table(a) => table_cmd(a),
        Command::Identify(a) => identify_cmd(a),
        Command::CheckAxioms(a) => check_axioms_cmd(a, cli.seed),
        Command::Optimize(a) => optimize_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a, cli.seed),
        Command::Asymmetry(a) => asymmetry_cmd(a, cli.seed),
        Command::ReduceVc(a) => reduce_vc_cmd(a),
    }
}
