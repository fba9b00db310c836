use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Stochastic set choice models: simulation, estimation, identification,
/// assortment optimization and evaluation.
///
/// Results are printed to stdout as JSON with 12 significant digits.
/// Exit status: 0 success, 1 invalid input, 2 input inconsistent with a
/// stochastic set model.
#[derive(Debug, Parser)]
#[command(name = "ssm", version)]
pub struct Cli {
    /// Seed for every random quantity (model draws, sampling, splits).
    #[arg(long, global = true, env = "SSM_SEED", default_value_t = 0)]
    pub seed: u64,

    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random model and sample transactions from it.
    Simulate(SimulateArgs),
    /// Fit a model to transactions by column generation.
    Fit(FitArgs),
    /// Write the full choice-probability table of a model.
    Table(TableArgs),
    /// Recover the model behind a complete probability table.
    Identify(IdentifyArgs),
    /// Test a probability table against the axioms of the model class.
    CheckAxioms(CheckAxiomsArgs),
    /// Find a revenue-maximizing assortment.
    Optimize(OptimizeArgs),
    /// Fit competing models on training data and score them on test data.
    Evaluate(EvaluateArgs),
    /// Cannibalization asymmetry index of a model or table.
    Asymmetry(AsymmetryArgs),
    /// Build the assortment instance encoding a vertex cover question.
    ReduceVc(ReduceVcArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of products.
    #[arg(long)]
    pub n: usize,
    /// Number of preselected sets with positive weight.
    #[arg(long)]
    pub support: usize,
    /// Largest preselected set (defaults to n).
    #[arg(long)]
    pub max_set_size: Option<usize>,
    /// Number of transactions.
    #[arg(long, default_value_t = 10_000)]
    pub transactions: usize,
    /// Number of distinct assortments offered (defaults to 2n).
    #[arg(long, conflicts_with = "uniform")]
    pub pool_size: Option<usize>,
    /// Draw a fresh uniform assortment for every transaction.
    #[arg(long)]
    pub uniform: bool,
    /// Where to write the generating model (JSON).
    #[arg(long)]
    pub model_out: PathBuf,
    /// Where to write the transactions (CSV).
    #[arg(long)]
    pub transactions_out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    /// Exhaustive enumeration of all subsets.
    Brute,
    /// Mixed-integer program solved by the bundled solver.
    Milp,
}

#[derive(Debug, Args)]
pub struct FitOptions {
    /// Stop once no set has reduced cost above this times the number of transactions.
    #[arg(long, env = "SSM_RC_TOL", default_value_t = 1e-7)]
    pub rc_tol: f64,
    /// Maximum number of sets added to the initial support.
    #[arg(long, env = "SSM_MAX_COLUMNS", default_value_t = 200)]
    pub max_columns: usize,
    /// Wall-clock limit for the whole fit, in seconds.
    #[arg(long, env = "SSM_TIME_LIMIT")]
    pub time_limit: Option<f64>,
    /// Wall-clock limit for each pricing search, in seconds.
    #[arg(long, env = "SSM_SUBPROBLEM_TIME_LIMIT")]
    pub subproblem_time_limit: Option<f64>,
    /// EM iterations per round.
    #[arg(long, env = "SSM_EM_MAX_ITERS", default_value_t = 500)]
    pub em_max_iters: usize,
    /// EM stops once an iteration gains less log-likelihood than this.
    #[arg(long, env = "SSM_EM_TOL", default_value_t = 1e-9)]
    pub em_tol: f64,
    /// EM iterations of the final polishing run.
    #[arg(long, env = "SSM_FINAL_EM_MAX_ITERS", default_value_t = 5000)]
    pub final_em_max_iters: usize,
    /// Plain EM updates without extrapolation.
    #[arg(long)]
    pub no_accelerate: bool,
    /// Pricing subproblem solver.
    #[arg(long, value_enum, default_value_t = SolverArg::Brute)]
    pub solver: SolverArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Transactions CSV with header `assortment,choice`.
    #[arg(long)]
    pub transactions: PathBuf,
    /// Number of products (defaults to the largest id seen).
    #[arg(long)]
    pub n: Option<usize>,
    /// Where to write the fitted model (JSON).
    #[arg(long)]
    pub model_out: PathBuf,
    /// Where to write the full fit report with per-round history (JSON).
    #[arg(long)]
    pub report_out: Option<PathBuf>,
    #[command(flatten)]
    pub options: FitOptions,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["model", "mnl_weights"])))]
pub struct TableArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated logit weights v_1,...,v_n (outside option weight 1).
    #[arg(long, value_delimiter = ',')]
    pub mnl_weights: Option<Vec<f64>>,
    /// Where to write the table (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    /// Inclusion-exclusion over outside-option probabilities.
    Outside,
    /// Per-item inversion through the lowest-id member of each set.
    PerItem,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Complete probability table (JSON).
    #[arg(long)]
    pub table: PathBuf,
    /// Inversion used to recover set weights.
    #[arg(long, value_enum, default_value_t = StrategyArg::Outside)]
    pub strategy: StrategyArg,
    /// Largest accepted negativity, normalization gap and reproduction error.
    #[arg(long, env = "SSM_IDENTIFY_TOL", default_value_t = 1e-8)]
    pub tol: f64,
    /// Where to write the recovered model (JSON).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckAxiomsArgs {
    /// Complete probability table (JSON).
    #[arg(long)]
    pub table: PathBuf,
    /// Violations larger than this are reported.
    #[arg(long, env = "SSM_AXIOM_TOL", default_value_t = 1e-9)]
    pub tol: f64,
    /// Also check agreement of alternative inversions and monotone cannibalization.
    #[arg(long)]
    pub extended: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    /// Enumerate every assortment.
    Brute,
    /// Exact dynamic program (integral prices).
    Dp,
    /// Dynamic program over discretized prices.
    Fptas,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Prices CSV with header `id,price`, one row per product.
    #[arg(long)]
    pub prices: PathBuf,
    /// Optimization algorithm.
    #[arg(long, value_enum, default_value_t = MethodArg::Dp)]
    pub method: MethodArg,
    /// Approximation parameter for `fptas`, in (0, 1].
    #[arg(long, env = "SSM_EPSILON", default_value_t = 0.1)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Stochastic set model fitted by column generation.
    Ssm,
    /// Multinomial logit with outside option.
    Mnl,
    /// Independent demand per product.
    Independent,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Transactions CSV used for training (and testing, unless --test is given).
    #[arg(long)]
    pub transactions: PathBuf,
    /// Held-out transactions CSV.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Share of transactions held out when --test is absent.
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Number of products (defaults to the largest id seen).
    #[arg(long)]
    pub n: Option<usize>,
    /// Model families to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModelArg::Ssm, ModelArg::Mnl, ModelArg::Independent])]
    pub models: Vec<ModelArg>,
    #[command(flatten)]
    pub options: FitOptions,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["model", "table", "mnl_weights"])))]
pub struct AsymmetryArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Complete probability table (JSON).
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Comma-separated logit weights v_1,...,v_n.
    #[arg(long, value_delimiter = ',')]
    pub mnl_weights: Option<Vec<f64>>,
    /// Monte Carlo sample count.
    #[arg(long, env = "SSM_ASYMMETRY_SAMPLES", default_value_t = 10_000)]
    pub samples: usize,
    /// Average over every assortment and pair instead of sampling (n ≤ 8).
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct ReduceVcArgs {
    /// Edge list, one `u v` pair per line, vertices numbered from 1.
    #[arg(long)]
    pub graph: PathBuf,
    /// Number of vertices (defaults to the largest id in the edge list).
    #[arg(long)]
    pub vertices: Option<usize>,
    /// Vertex cover size in question.
    #[arg(long)]
    pub k: usize,
    /// Where to write the model (JSON).
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Where to write the prices (CSV).
    #[arg(long)]
    pub prices_out: Option<PathBuf>,
    /// Also find the optimal assortment and answer the decision question.
    #[arg(long)]
    pub solve: bool,
}
