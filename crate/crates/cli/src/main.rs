//! `sbmconf`: exact and sampled posteriors for the two-community stochastic
//! block model, credible/confidence sets, bound curves and Monte Carlo checks.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sbmconf::posterior::DEFAULT_N_MAX;
use sbmconf::{Criterion, Mode};

#[derive(Parser, Debug)]
#[command(name = "sbmconf", version, about = "Credible and confidence sets for two-community stochastic block models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a graph from the model; writes the graph text format.
    Sample(SampleArgs),
    /// Exact posterior table of a graph.
    Posterior(PosteriorArgs),
    /// Credible set (optionally enlarged) from the exact posterior.
    Credible(CredibleArgs),
    /// Required credible level, confidence floor and enlargement radius.
    Confidence(ConfidenceArgs),
    /// Smallest graph size at which low-level credible sets suffice.
    CriticalN(CriticalArgs),
    /// Required credible level as a function of graph size.
    Curve(CurveArgs),
    /// Recovery condition values along a sweep of graph sizes.
    Conditions(ConditionsArgs),
    /// Monte Carlo coverage of the confidence set construction.
    Coverage(CoverageArgs),
    /// Metropolis chain over assignments; empirical posterior.
    Mcmc(McmcArgs),
    /// Coverage of chain-based sets as a function of chain length.
    EarlyStop(EarlyStopArgs),
    /// Expected posterior mass of a target set against its bound.
    Concentration(ConcentrationArgs),
    /// Error of the likelihood ratio test against its bound.
    LrTest(LrTestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModelArgs {
    /// Within-community edge probability.
    #[arg(long)]
    p: f64,
    /// Between-community edge probability.
    #[arg(long)]
    q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Exact,
    Almost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CriterionArg {
    Literal,
    HalfLevel,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Literal => Criterion::Literal,
            CriterionArg::HalfLevel => Criterion::HalfLevel,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct ModeArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Error fraction for almost mode; sets are enlarged by ceil(a n).
    #[arg(long)]
    a: Option<f64>,
}

impl ModeArgs {
    fn resolve(&self) -> sbmconf::Result<Mode> {
        match (self.mode, self.a) {
            (ModeArg::Exact, None) => Ok(Mode::Exact),
            (ModeArg::Exact, Some(_)) => usage_error("--a only applies with --mode almost"),
            (ModeArg::Almost, Some(a)) => Mode::almost(a),
            (ModeArg::Almost, None) => usage_error("--mode almost requires --a"),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct StrategyArgs {
    #[command(flatten)]
    mode: ModeArgs,
    /// Pick the mode needing the smallest credible level instead of --mode.
    #[arg(long)]
    plan: bool,
    /// Error fractions tried by --plan.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.25")]
    a_grid: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TruthArgs {
    /// Assignment file (one line of 0/1); default is the balanced split.
    #[arg(long, conflicts_with = "random_truth")]
    truth: Option<PathBuf>,
    /// Draw the smallest community size uniformly per replicate.
    #[arg(long)]
    random_truth: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EngineArgs {
    /// Largest graph the exact engine will enumerate.
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    n_cap: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    /// Size of the second community (default floor(n/2)); ignored with --truth.
    #[arg(long, conflicts_with = "truth")]
    m: Option<usize>,
    /// Assignment file to sample from.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PosteriorArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Expected vertex count; checked against the graph file.
    #[arg(long)]
    n: Option<usize>,
    /// Only the `top` most probable assignments, by decreasing mass.
    #[arg(long)]
    top: Option<usize>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CredibleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Credible level; overrides the level derived from --alpha.
    #[arg(long)]
    level: Option<f64>,
    /// Target confidence 1 - alpha; sets level and radius from the bounds.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    mode: ModeArgs,
    /// Enlargement radius; overrides the mode's ceil(a n).
    #[arg(long)]
    radius: Option<usize>,
    /// List the members of the enlarged set instead of the credible set.
    #[arg(long)]
    enlarge: bool,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConfidenceArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Also report the coverage guaranteed at credible level 1 - gamma.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CriticalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    mode: ModeArgs,
    #[arg(long, value_enum, default_value_t = CriterionArg::Literal)]
    criterion: CriterionArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CurveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    mode: ModeArgs,
    #[arg(long, default_value_t = 2)]
    n_min: usize,
    #[arg(long, default_value_t = 60)]
    n_max: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConditionsArgs {
    /// mns-exact, decelle, mns-detect, kvw, ch-exact, ch-exact-simple,
    /// ks-fixed-fraction or ks-vanishing.
    #[arg(long)]
    kind: String,
    /// First phase coefficient (a in the log(n)/n phase, c in the 1/n phase).
    #[arg(long)]
    coef1: f64,
    #[arg(long)]
    coef2: f64,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    n_values: Vec<usize>,
    /// Error fraction, for the conditions that take one.
    #[arg(long)]
    a: Option<f64>,
    /// Constant C > 1 of the fixed-fraction condition.
    #[arg(long)]
    c: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CoverageArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    truth: TruthArgs,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct McmcArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    steps: u64,
    /// Default steps / 10.
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long, default_value_t = 1)]
    thin: u64,
    #[arg(long)]
    seed: u64,
    /// Independent chains with seeds seed, seed + 1, ...
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// CSV dump of (step, index, log_likelihood) for a single chain.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also compute the total-variation distance to the exact posterior.
    #[arg(long)]
    exact: bool,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EarlyStopArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alpha: f64,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    truth: TruthArgs,
    /// Chain lengths to compare.
    #[arg(long, value_delimiter = ',', required = true)]
    lengths: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    burn_in: u64,
    #[arg(long, default_value_t = 1)]
    thin: u64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TargetArg {
    Singleton,
    Ball,
    Sphere,
    SizeGap,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ConcentrationArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum)]
    target: TargetArg,
    /// Error fraction of the ball target.
    #[arg(long)]
    a: Option<f64>,
    /// Radius of the sphere target.
    #[arg(long)]
    k: Option<usize>,
    /// Minimum size difference of the size-gap target.
    #[arg(long)]
    delta: Option<usize>,
    /// Assignment file; default is the balanced split.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LrTestArgs {
    /// Null assignment as a 0/1 string.
    #[arg(long)]
    theta: String,
    /// Alternative assignment as a 0/1 string.
    #[arg(long)]
    eta: String,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    output: OutputArgs,
}

/// Reports a flag combination clap cannot express and exits with status 2.
fn usage_error<T>(msg: &str) -> T {
    Cli::command().error(clap::error::ErrorKind::ArgumentConflict, msg).exit()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
