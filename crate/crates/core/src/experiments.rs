//! Monte Carlo harnesses: coverage of credible-set based confidence sets,
//! posterior concentration against the finite-sample bounds, likelihood
//! ratio test error, and coverage of chain-based sets as chains get longer.
//!
//! Replicate `r` draws everything from `rng::derived(seed, r)`, so results
//! do not depend on the thread count. Tolerances are three Monte Carlo
//! standard errors; experiments report, callers decide.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::credconf::bounds::{interior_affinity, plan_strategy, recovery_bound_almost, recovery_bound_exact};
use crate::credconf::{credible_set, ConfidenceReport, Mode};
use crate::error::{check_dims, invalid, Error, Result};
use crate::mcmc::{run_chain, tv_distance, ChainConfig};
use crate::posterior::{enumerate_posterior_with, EngineConfig, PosteriorTable, DEFAULT_N_MAX};
use crate::rng::{derived, SbmRng};
use crate::sbm::{d_sizes, sample_graph_with, suff_stats, Assignment, Graph, SbmParams};

/// Smallest replicate count accepted by the coverage harness.
pub const MIN_COVERAGE_REPLICATES: usize = 100;

/// Guard against floating-point noise in bound comparisons.
const BOUND_SLACK: f64 = 1e-12;

/// How the confidence set is built from the posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Fixed { mode: Mode },
    /// Whichever of exact mode or `almost(a)`, `a` in the grid, needs the smallest level.
    Plan { a_grid: Vec<f64> },
}

impl Strategy {
    pub fn report(&self, n: usize, p: f64, q: f64, alpha: f64) -> Result<ConfidenceReport> {
        match self {
            Strategy::Fixed { mode } => ConfidenceReport::for_mode(n, p, q, alpha, *mode),
            Strategy::Plan { a_grid } => plan_strategy(n, p, q, alpha, a_grid),
        }
    }
}

/// Where the true assignment of each replicate comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "truth", rename_all = "snake_case")]
pub enum TruthSpec {
    /// `floor(n/2)` vertices in the second community.
    Balanced,
    Fixed { assignment: Assignment },
    /// Smallest community size uniform on `0..=floor(n/2)`, then a uniform
    /// assignment of that size.
    RandomSize,
}

impl TruthSpec {
    fn check(&self, n: usize) -> Result<()> {
        match self {
            TruthSpec::Fixed { assignment } => check_dims(n, assignment.n()),
            _ => Ok(()),
        }
    }

    fn draw(&self, n: usize, rng: &mut SbmRng) -> Result<Assignment> {
        match self {
            TruthSpec::Balanced => Assignment::blocks(n, n / 2),
            TruthSpec::Fixed { assignment } => Ok(assignment.clone()),
            TruthSpec::RandomSize => {
                let m = rng.random_range(0..=n / 2);
                let mut labels = vec![false; n];
                for v in sample(rng, n, m) {
                    labels[v] = true;
                }
                Assignment::canonicalize(&labels)
            }
        }
    }
}

/// Direction of a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Estimate should be at least the bound.
    AtLeast,
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckResult {
    pub relation: Relation,
    pub replicates: usize,
    pub lhs_estimate: f64,
    pub lhs_stderr: f64,
    pub rhs_bound: f64,
    pub satisfied_within_3sigma: bool,
}

impl BoundCheckResult {
    fn from_samples(relation: Relation, samples: &[f64], rhs_bound: f64) -> Self {
        let (lhs_estimate, lhs_stderr) = mean_and_stderr(samples);
        BoundCheckResult::new(relation, samples.len(), lhs_estimate, lhs_stderr, rhs_bound)
    }

    fn new(relation: Relation, replicates: usize, lhs_estimate: f64, lhs_stderr: f64, rhs_bound: f64) -> Self {
        let slack = 3.0 * lhs_stderr + BOUND_SLACK;
        let satisfied_within_3sigma = match relation {
            Relation::AtLeast => lhs_estimate + slack >= rhs_bound,
            Relation::AtMost => lhs_estimate - slack <= rhs_bound,
        };
        BoundCheckResult { relation, replicates, lhs_estimate, lhs_stderr, rhs_bound, satisfied_within_3sigma }
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Three binomial standard errors at success probability `p`.
pub fn binomial_3sigma(p: f64, replicates: usize) -> f64 {
    3.0 * (p * (1.0 - p) / replicates as f64).sqrt()
}

fn replicate_map<T, F>(threads: usize, replicates: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    if threads <= 1 {
        return (0..replicates as u64).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..replicates as u64).into_par_iter().map(&f).collect())
}

fn check_size(n: usize, n_max: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("experiments need n >= 2, got {n}")));
    }
    if n > n_max {
        return Err(Error::Capacity { n, n_max });
    }
    Ok(())
}

fn engine(n_max: usize) -> EngineConfig {
    EngineConfig { n_max, threads: 1 }
}

fn default_n_max() -> usize {
    DEFAULT_N_MAX
}

fn default_threads() -> usize {
    1
}

// ---------------------------------------------------------------------------
// coverage

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub strategy: Strategy,
    pub truth: TruthSpec,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub replicates: usize,
    pub hits: usize,
    pub empirical_coverage: f64,
    /// Three binomial standard errors at the claimed floor.
    pub binomial_3sigma: f64,
    /// Nominal confidence `1 - alpha`.
    pub claimed_floor: f64,
    pub required_level: f64,
    pub enlargement_radius: usize,
    /// Required level is 1: every set is the whole parameter space.
    pub trivial: bool,
    /// Mean number of credible set members before enlargement.
    pub mean_credible_size: f64,
    pub config_echo: CoverageConfig,
}

impl CoverageResult {
    pub fn meets_floor_within_3sigma(&self) -> bool {
        self.empirical_coverage >= self.claimed_floor - self.binomial_3sigma
    }
}

/// Whether the credible set of `table` at `level`, enlarged by `radius`,
/// contains `truth`; also returns the credible set size. A level of 1 means
/// the whole parameter space.
fn covers(table: &PosteriorTable, level: f64, radius: usize, truth: &Assignment) -> Result<(bool, usize)> {
    let set = credible_set(table, level)?;
    Ok((set.within_radius(truth, radius), set.len()))
}

pub fn coverage_experiment(config: &CoverageConfig) -> Result<CoverageResult> {
    let CoverageConfig { n, p, q, alpha, replicates, seed, .. } = *config;
    check_size(n, config.n_max)?;
    if replicates < MIN_COVERAGE_REPLICATES {
        return Err(invalid(format!("coverage needs at least {MIN_COVERAGE_REPLICATES} replicates, got {replicates}")));
    }
    config.truth.check(n)?;
    let plan = config.strategy.report(n, p, q, alpha)?;
    let params = SbmParams::new(p, q)?;
    let level = plan.required_level;
    let radius = plan.enlargement_radius;
    let trivial = level >= 1.0;
    let full_size = 1usize << (n - 1);

    let outcomes = replicate_map(config.threads, replicates, |r| {
        let mut rng = derived(seed, r);
        let truth = config.truth.draw(n, &mut rng)?;
        let graph = sample_graph_with(&params, truth.labels(), &mut rng);
        if trivial {
            return Ok((true, full_size));
        }
        let table = enumerate_posterior_with(&graph, &params, &engine(config.n_max))?;
        covers(&table, level, radius, &truth)
    })?;

    let hits = outcomes.iter().filter(|o| o.0).count();
    let claimed_floor = 1.0 - alpha;
    Ok(CoverageResult {
        replicates,
        hits,
        empirical_coverage: hits as f64 / replicates as f64,
        binomial_3sigma: binomial_3sigma(claimed_floor, replicates),
        claimed_floor,
        required_level: level,
        enlargement_radius: radius,
        trivial,
        mean_credible_size: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / replicates as f64,
        config_echo: config.clone(),
    })
}

// ---------------------------------------------------------------------------
// concentration

/// Set whose expected posterior mass is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case")]
pub enum Target {
    /// The truth alone; compared with the exact recovery lower bound.
    Singleton,
    /// k-metric ball of radius `ceil(a n)` around the truth; compared with
    /// the almost-exact recovery lower bound.
    Ball { a: f64 },
    /// Assignments at k-metric distance exactly `k` from the truth.
    Sphere { k: usize },
    /// Assignments whose smallest community size differs from the truth's by
    /// at least `delta`.
    SizeGap { delta: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub target: Target,
    pub truth: Assignment,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of canonical assignments whose smallest community has `m` vertices.
fn size_class_count(n: usize, m: usize) -> f64 {
    if 2 * m == n {
        binomial(n, m) / 2.0
    } else {
        binomial(n, m)
    }
}

fn k_distance(index: u64, center: u64, n: usize) -> usize {
    let h = ((index << 1) ^ (center << 1)).count_ones() as usize;
    h.min(n - h)
}

fn smaller_side(index: u64, n: usize) -> usize {
    let ones = index.count_ones() as usize;
    ones.min(n - ones)
}

/// Membership test and the bound for `target` around `truth`.
struct TargetSpec {
    relation: Relation,
    bound: f64,
    member: Box<dyn Fn(u64) -> bool + Sync>,
}

fn target_spec(target: Target, truth: &Assignment, p: f64, q: f64) -> Result<TargetSpec> {
    let n = truth.n();
    let center = truth.table_index();
    let m_truth = truth.m();
    Ok(match target {
        Target::Singleton => TargetSpec {
            relation: Relation::AtLeast,
            bound: recovery_bound_exact(n, p, q)?,
            member: Box::new(move |i| i == center),
        },
        Target::Ball { a } => {
            let radius = Mode::almost(a)?.radius(n);
            let bound = match recovery_bound_almost(n, p, q, a) {
                Err(Error::Divergent(_)) => 0.0,
                other => other?,
            };
            TargetSpec {
                relation: Relation::AtLeast,
                bound,
                member: Box::new(move |i| k_distance(i, center, n) <= radius),
            }
        }
        Target::Sphere { k } => {
            if k == 0 || k > n / 2 {
                return Err(invalid(format!("sphere radius {k} must lie in 1..={}", n / 2)));
            }
            let rho = interior_affinity(p, q)?;
            // every member differs in k(n-k) edge probabilities
            let bound = rho.powi((k * (n - k)) as i32) * size_class_count(n, k);
            TargetSpec {
                relation: Relation::AtMost,
                bound,
                member: Box::new(move |i| k_distance(i, center, n) == k),
            }
        }
        Target::SizeGap { delta } => {
            let sizes: Vec<usize> = (0..=n / 2).filter(|m| m.abs_diff(m_truth) >= delta).collect();
            if delta == 0 || sizes.is_empty() {
                return Err(invalid(format!(
                    "size gap {delta} selects no assignment other than the truth (smallest community {m_truth}, n = {n})"
                )));
            }
            let rho = interior_affinity(p, q)?;
            let d = sizes.iter().map(|&m| m.abs_diff(m_truth) * (n - m.abs_diff(m_truth))).min().unwrap();
            let count: f64 = sizes.iter().map(|&m| size_class_count(n, m)).sum();
            TargetSpec {
                relation: Relation::AtMost,
                bound: rho.powi(d as i32) * count,
                member: Box::new(move |i| smaller_side(i, n).abs_diff(m_truth) >= delta),
            }
        }
    })
}

fn table_mass(table: &PosteriorTable, member: &(dyn Fn(u64) -> bool + Sync)) -> f64 {
    table
        .log_masses()
        .iter()
        .enumerate()
        .filter(|&(i, _)| member(i as u64))
        .map(|(_, v)| v.exp())
        .sum::<f64>()
        .min(1.0)
}

/// Monte Carlo estimate of the expected posterior mass of `target` under the truth.
pub fn concentration_experiment(config: &ConcentrationConfig) -> Result<BoundCheckResult> {
    let ConcentrationConfig { n, p, q, replicates, seed, .. } = *config;
    check_size(n, config.n_max)?;
    check_dims(n, config.truth.n())?;
    if replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    let spec = target_spec(config.target, &config.truth, p, q)?;
    let params = SbmParams::new(p, q)?;
    let masses = replicate_map(config.threads, replicates, |r| {
        let mut rng = derived(seed, r);
        let graph = sample_graph_with(&params, config.truth.labels(), &mut rng);
        let table = enumerate_posterior_with(&graph, &params, &engine(config.n_max))?;
        Ok(table_mass(&table, spec.member.as_ref()))
    })?;
    Ok(BoundCheckResult::from_samples(spec.relation, &masses, spec.bound))
}

// ---------------------------------------------------------------------------
// likelihood ratio test

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTestConfig {
    pub theta: Assignment,
    pub eta: Assignment,
    pub p: f64,
    pub q: f64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

/// Likelihood ratio test of `theta` against `eta`: 1 rejects `theta`, 1/2 on ties.
///
/// With `s` the within-community edge count and `w` the within-community
/// pair count, `log p_eta - log p_theta = ds * logit-gap + dw * log((1-p)/(1-q))`;
/// integer differences keep ties exact.
pub fn lr_test(graph: &Graph, theta: &Assignment, eta: &Assignment, params: &SbmParams) -> Result<f64> {
    let (p, q) = (params.p(), params.q());
    let st = suff_stats(graph, theta.labels())?;
    let se = suff_stats(graph, eta.labels())?;
    let ds = se.s_in as f64 - st.s_in as f64;
    let dw = se.within_pairs as f64 - st.within_pairs as f64;
    let slope = (p / (1.0 - p)).ln() - (q / (1.0 - q)).ln();
    let offset = ((1.0 - p) / (1.0 - q)).ln();
    let log_ratio = ds * slope + dw * offset;
    Ok(if log_ratio > 0.0 {
        1.0
    } else if log_ratio == 0.0 {
        0.5
    } else {
        0.0
    })
}

/// Estimates the equal-weight error `(1/2) P_theta phi + (1/2) P_eta (1 - phi)`
/// of the likelihood ratio test and compares it with `(1/2) rho^(d1 + d2)`.
pub fn lr_test_experiment(config: &LrTestConfig) -> Result<BoundCheckResult> {
    let LrTestConfig { ref theta, ref eta, p, q, replicates, seed, threads } = *config;
    let n = theta.n();
    check_dims(n, eta.n())?;
    if replicates < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let rho = interior_affinity(p, q)?;
    let (d1, d2) = d_sizes(theta.labels(), eta.labels())?;
    if d1 + d2 == 0 {
        return Err(invalid(format!("{theta} and {eta} induce the same graph law")));
    }
    let params = SbmParams::new(p, q)?;
    let errors = replicate_map(threads, replicates, |r| {
        let mut rng = derived(seed, r);
        let x_theta = sample_graph_with(&params, theta.labels(), &mut rng);
        let x_eta = sample_graph_with(&params, eta.labels(), &mut rng);
        Ok((lr_test(&x_theta, theta, eta, &params)?, 1.0 - lr_test(&x_eta, theta, eta, &params)?))
    })?;
    let (type1, type2): (Vec<f64>, Vec<f64>) = errors.into_iter().unzip();
    let (m1, se1) = mean_and_stderr(&type1);
    let (m2, se2) = mean_and_stderr(&type2);
    let estimate = 0.5 * m1 + 0.5 * m2;
    let stderr = 0.5 * (se1 * se1 + se2 * se2).sqrt();
    let bound = 0.5 * rho.powi((d1 + d2) as i32);
    Ok(BoundCheckResult::new(Relation::AtMost, replicates, estimate, stderr, bound))
}

// ---------------------------------------------------------------------------
// early stopping

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopConfig {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub strategy: Strategy,
    pub truth: TruthSpec,
    pub chain_lengths: Vec<u64>,
    pub burn_in: u64,
    pub thin: u64,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_threads")]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopRow {
    pub steps: u64,
    pub replicates: usize,
    pub hits: usize,
    pub coverage: f64,
    pub binomial_3sigma: f64,
    /// Mean total-variation distance to the exact posterior, when enumerable.
    pub mean_tv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopStudy {
    pub required_level: f64,
    pub enlargement_radius: usize,
    pub mode: Mode,
    /// Coverage of sets built from the exact posterior on the same graphs.
    pub exact_coverage: Option<f64>,
    pub rows: Vec<EarlyStopRow>,
    pub coverage_nondecreasing: bool,
    pub tv_nonincreasing: Option<bool>,
}

/// Coverage of confidence sets built from chain frequencies, per chain length.
///
/// Every chain length sees the same graphs, so rows are paired.
pub fn early_stopping_study(config: &EarlyStopConfig) -> Result<EarlyStopStudy> {
    let EarlyStopConfig { n, p, q, alpha, burn_in, thin, replicates, seed, .. } = *config;
    if config.chain_lengths.is_empty() {
        return Err(invalid("chain_lengths is empty"));
    }
    if replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    for &steps in &config.chain_lengths {
        ChainConfig::new(steps, burn_in, thin, 0)?;
    }
    if n < 2 {
        return Err(invalid(format!("experiments need n >= 2, got {n}")));
    }
    config.truth.check(n)?;
    let plan = config.strategy.report(n, p, q, alpha)?;
    let params = SbmParams::new(p, q)?;
    let level = plan.required_level;
    let radius = plan.enlargement_radius;
    let trivial = level >= 1.0;
    let exact = n <= config.n_max;

    // per replicate: (exact hit, [(chain hit, tv)])
    let outcomes = replicate_map(config.threads, replicates, |r| {
        let mut rng = derived(seed, r);
        let truth = config.truth.draw(n, &mut rng)?;
        let graph = sample_graph_with(&params, truth.labels(), &mut rng);
        let chain_seeds: Vec<u64> = config.chain_lengths.iter().map(|_| rng.random()).collect();
        let table = if exact { Some(enumerate_posterior_with(&graph, &params, &engine(config.n_max))?) } else { None };
        let exact_hit = match &table {
            Some(t) => Some(trivial || covers(t, level, radius, &truth)?.0),
            None => None,
        };
        let mut per_length = Vec::with_capacity(config.chain_lengths.len());
        for (&steps, &chain_seed) in config.chain_lengths.iter().zip(&chain_seeds) {
            let chain = run_chain(&graph, &params, &ChainConfig::new(steps, burn_in, thin, chain_seed)?)?;
            let hit = trivial || credible_set(&chain, level)?.within_radius(&truth, radius);
            let tv = table.as_ref().map(|t| tv_distance(&chain, t)).transpose()?;
            per_length.push((hit, tv));
        }
        Ok((exact_hit, per_length))
    })?;

    let rows: Vec<EarlyStopRow> = config
        .chain_lengths
        .iter()
        .enumerate()
        .map(|(li, &steps)| {
            let hits = outcomes.iter().filter(|o| o.1[li].0).count();
            let coverage = hits as f64 / replicates as f64;
            let mean_tv = exact.then(|| outcomes.iter().map(|o| o.1[li].1.unwrap_or(0.0)).sum::<f64>() / replicates as f64);
            EarlyStopRow {
                steps,
                replicates,
                hits,
                coverage,
                binomial_3sigma: binomial_3sigma(coverage, replicates),
                mean_tv,
            }
        })
        .collect();
    let exact_coverage =
        exact.then(|| outcomes.iter().filter(|o| o.0 == Some(true)).count() as f64 / replicates as f64);
    let coverage_nondecreasing = rows.windows(2).all(|w| w[1].coverage >= w[0].coverage);
    let tv_nonincreasing = exact.then(|| rows.windows(2).all(|w| w[1].mean_tv <= w[0].mean_tv));
    Ok(EarlyStopStudy {
        required_level: level,
        enlargement_radius: radius,
        mode: plan.mode,
        exact_coverage,
        rows,
        coverage_nondecreasing,
        tv_nonincreasing,
    })
}
