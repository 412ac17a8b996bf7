//! Single-site Metropolis sampler over assignments, for graphs too large
//! to enumerate, plus diagnostics against the exact table.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::posterior::{MassFunction, PosteriorTable};
use crate::rng::seeded;
use crate::sbm::assignment::{canonical_index, MAX_INDEXED_N};
use crate::sbm::{Graph, LogParams, SbmParams, SuffStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total proposals.
    pub steps: u64,
    /// Proposals discarded before recording starts.
    pub burn_in: u64,
    /// Record every `thin`-th state after burn-in.
    pub thin: u64,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(steps: u64, burn_in: u64, thin: u64, seed: u64) -> Result<Self> {
        let c = ChainConfig { steps, burn_in, thin, seed };
        c.validate()?;
        Ok(c)
    }

    /// Burn-in of `steps / 10`, no thinning.
    pub fn with_defaults(steps: u64, seed: u64) -> Result<Self> {
        Self::new(steps, steps / 10, 1, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::Config(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Visit counts of recorded chain states, keyed by canonical table index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalPosterior {
    n: usize,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl EmpiricalPosterior {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn frequency(&self, index: u64) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0) as f64 / self.total as f64
    }

    /// Sums counts of chains over the same graph size.
    pub fn merge(mut self, other: EmpiricalPosterior) -> Result<Self> {
        check_dims(self.n, other.n)?;
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(self)
    }
}

impl MassFunction for EmpiricalPosterior {
    fn n(&self) -> usize {
        self.n
    }

    fn support(&self) -> Vec<(u64, f64)> {
        let total = self.total as f64;
        self.counts.iter().map(|(&k, &c)| (k, c as f64 / total)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ChainStats {
    pub proposals: u64,
    pub accepted: u64,
}

impl ChainStats {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposals as f64
    }
}

/// One row of a chain dump: the state after proposal `step` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub index: u64,
    pub log_likelihood: f64,
}

pub fn run_chain(graph: &Graph, params: &SbmParams, config: &ChainConfig) -> Result<EmpiricalPosterior> {
    run_chain_traced(graph, params, config, |_| {}).map(|(post, _)| post)
}

/// Runs the chain from the all-zeros labeling, calling `trace` after every
/// proposal.
pub fn run_chain_traced(
    graph: &Graph,
    params: &SbmParams,
    config: &ChainConfig,
    mut trace: impl FnMut(TraceRow),
) -> Result<(EmpiricalPosterior, ChainStats)> {
    config.validate()?;
    if !params.is_interior() {
        return Err(Error::Reducible(format!(
            "p = {} and q = {} must lie strictly inside (0, 1)",
            params.p(),
            params.q()
        )));
    }
    let n = graph.n();
    if n == 0 || n > MAX_INDEXED_N {
        return Err(invalid(format!("chain supports 1..={MAX_INDEXED_N} vertices, got {n}")));
    }
    let rows = graph.neighbor_masks()?;
    let degree: Vec<i64> = rows.iter().map(|r| r.count_ones() as i64).collect();
    let edges = graph.edge_count() as i64;
    let logp = LogParams::new(params);
    let loglik = |s_in: i64, ones: usize| {
        let (w, b) = SuffStats::pair_counts(n, ones);
        logp.eval(s_in as u64, w, (edges - s_in) as u64, b)
    };

    let mut rng = seeded(config.seed);
    let mut mask = 0u64;
    let mut ones = 0usize;
    let mut s_in = edges;
    let mut current = loglik(s_in, ones);
    let mut counts = BTreeMap::new();
    let mut total = 0;
    let mut stats = ChainStats::default();

    for step in 1..=config.steps {
        let v = rng.random_range(0..n);
        let nbr_ones = i64::from((rows[v] & mask).count_ones());
        let (new_s_in, new_ones) = if mask >> v & 1 == 0 {
            (s_in + 2 * nbr_ones - degree[v], ones + 1)
        } else {
            (s_in + degree[v] - 2 * nbr_ones, ones - 1)
        };
        let proposed = loglik(new_s_in, new_ones);
        let delta = proposed - current;
        stats.proposals += 1;
        if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
            mask ^= 1 << v;
            ones = new_ones;
            s_in = new_s_in;
            current = proposed;
            stats.accepted += 1;
        }
        let index = canonical_index(mask, n);
        trace(TraceRow { step, index, log_likelihood: current });
        if step > config.burn_in && (step - config.burn_in).is_multiple_of(config.thin) {
            *counts.entry(index).or_insert(0) += 1;
            total += 1;
        }
    }
    Ok((EmpiricalPosterior { n, counts, total }, stats))
}

/// Runs `chains` independent chains with seeds `seed + c` and sums their counts.
pub fn run_chains(
    graph: &Graph,
    params: &SbmParams,
    config: &ChainConfig,
    chains: usize,
) -> Result<EmpiricalPosterior> {
    if chains == 0 {
        return Err(Error::Config("need at least one chain".into()));
    }
    let results: Vec<_> = (0..chains as u64)
        .into_par_iter()
        .map(|c| {
            let cfg = ChainConfig { seed: config.seed.wrapping_add(c), ..*config };
            run_chain(graph, params, &cfg)
        })
        .collect::<Result<_>>()?;
    let mut it = results.into_iter();
    let first = it.next().expect("at least one chain");
    it.try_fold(first, EmpiricalPosterior::merge)
}

/// Total-variation distance between chain frequencies and the exact table.
pub fn tv_distance(empirical: &EmpiricalPosterior, exact: &PosteriorTable) -> Result<f64> {
    check_dims(exact.n(), empirical.n())?;
    let sum: f64 = (0..exact.len() as u64)
        .map(|i| (empirical.frequency(i) - exact.mass(i)).abs())
        .sum();
    Ok(0.5 * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::enumerate_posterior;
    use crate::sbm::{sample_graph, Assignment};

    fn graph(n: usize, m: usize, p: f64, q: f64, seed: u64) -> (Graph, SbmParams) {
        let params = SbmParams::new(p, q).unwrap();
        let truth = Assignment::blocks(n, m).unwrap();
        (sample_graph(&params, truth.labels(), seed), params)
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::new(10, 10, 1, 0).is_err());
        assert!(ChainConfig::new(10, 2, 0, 0).is_err());
        let c = ChainConfig::with_defaults(1000, 0).unwrap();
        assert_eq!((c.burn_in, c.thin), (100, 1));
    }

    #[test]
    fn boundary_probabilities_are_reducible() {
        let g = Graph::complete(4);
        let cfg = ChainConfig::with_defaults(100, 0).unwrap();
        for (p, q) in [(1.0, 0.1), (0.5, 0.0)] {
            let params = SbmParams::new(p, q).unwrap();
            assert!(matches!(run_chain(&g, &params, &cfg), Err(Error::Reducible(_))));
        }
    }

    #[test]
    fn equal_probabilities_accept_everything_and_look_uniform() {
        let (g, params) = graph(6, 3, 0.4, 0.4, 3);
        let cfg = ChainConfig::new(320_000, 1_000, 1, 8).unwrap();
        let (post, stats) = run_chain_traced(&g, &params, &cfg, |_| {}).unwrap();
        assert_eq!(stats.accepted, stats.proposals);
        // chi-square against uniform over 32 states, df = 31. The walk is
        // correlated and alternates popcount parity, so thin by an odd stride.
        let thinned = ChainConfig::new(320_000, 1_000, 13, 8).unwrap();
        let post_t = run_chain(&g, &params, &thinned).unwrap();
        let expected = post_t.total() as f64 / 32.0;
        let chi2: f64 = (0..32u64)
            .map(|i| {
                let c = post_t.counts().get(&i).copied().unwrap_or(0) as f64;
                (c - expected).powi(2) / expected
            })
            .sum();
        // 0.999 quantile of chi-square(31) is about 61.1
        assert!(chi2 < 61.1, "chi2 = {chi2}");
        assert_eq!(post.counts().len(), 32);
    }

    #[test]
    fn deterministic_given_seed() {
        let (g, params) = graph(12, 5, 0.7, 0.2, 1);
        let cfg = ChainConfig::with_defaults(20_000, 99).unwrap();
        assert_eq!(run_chain(&g, &params, &cfg).unwrap(), run_chain(&g, &params, &cfg).unwrap());
    }

    #[test]
    fn chain_ignores_truth_labeling() {
        // the same graph drawn under a truth and its complement
        let params = SbmParams::new(0.7, 0.2).unwrap();
        let truth = crate::sbm::parse_labels("0001101101").unwrap();
        let comp: Vec<bool> = truth.iter().map(|&l| !l).collect();
        let g1 = sample_graph(&params, &truth, 4);
        let g2 = sample_graph(&params, &comp, 4);
        assert_eq!(g1, g2);
        let cfg = ChainConfig::with_defaults(10_000, 5).unwrap();
        assert_eq!(run_chain(&g1, &params, &cfg).unwrap(), run_chain(&g2, &params, &cfg).unwrap());
    }

    #[test]
    fn thinning_and_counts() {
        let (g, params) = graph(8, 3, 0.7, 0.2, 1);
        let cfg = ChainConfig::new(1000, 100, 7, 3).unwrap();
        let post = run_chain(&g, &params, &cfg).unwrap();
        assert_eq!(post.total(), 900 / 7);
        assert_eq!(post.counts().values().sum::<u64>(), post.total());
    }

    #[test]
    fn tv_distance_examples() {
        let t = enumerate_posterior(&Graph::empty(3), &SbmParams::new(0.5, 0.5).unwrap()).unwrap();
        let point = EmpiricalPosterior { n: 3, counts: BTreeMap::from([(2, 10)]), total: 10 };
        assert!((tv_distance(&point, &t).unwrap() - 0.75).abs() < 1e-15);

        let g: Graph = "n 2\n1 2\n".parse().unwrap();
        let t = enumerate_posterior(&g, &SbmParams::new(0.9, 0.1).unwrap()).unwrap();
        let exact = EmpiricalPosterior { n: 2, counts: BTreeMap::from([(0, 9), (1, 1)]), total: 10 };
        assert!(tv_distance(&exact, &t).unwrap() < 1e-12);

        let wrong = EmpiricalPosterior { n: 4, counts: BTreeMap::from([(0, 1)]), total: 1 };
        assert!(tv_distance(&wrong, &t).is_err());
    }

    #[test]
    fn chains_merge_and_converge() {
        let (g, params) = graph(8, 4, 0.75, 0.25, 2);
        let cfg = ChainConfig::with_defaults(100_000, 10).unwrap();
        let merged = run_chains(&g, &params, &cfg, 4).unwrap();
        assert_eq!(merged.total(), 4 * 90_000);
        let exact = enumerate_posterior(&g, &params).unwrap();
        assert!(tv_distance(&merged, &exact).unwrap() < 0.05);
    }

    #[test]
    fn detailed_balance_on_small_graph() {
        let (g, params) = graph(4, 2, 0.7, 0.3, 6);
        let exact = enumerate_posterior(&g, &params).unwrap();
        let cfg = ChainConfig::new(1_000_000, 0, 1, 21).unwrap();
        const BATCHES: usize = 100;
        let batch_len = cfg.steps / BATCHES as u64;
        let mut flows = vec![[[0u64; 8]; 8]; BATCHES];
        let mut prev = 0u64;
        run_chain_traced(&g, &params, &cfg, |row| {
            let b = ((row.step - 1) / batch_len) as usize;
            flows[b][prev as usize][row.index as usize] += 1;
            prev = row.index;
        })
        .unwrap();

        // exact single-flip kernel between canonical states
        let n = 4;
        let kernel = |a: u64, b: u64| -> f64 {
            (0..n)
                .filter(|&v| canonical_index((a << 1) ^ (1 << v), n) == b)
                .map(|_| (exact.mass(b) / exact.mass(a)).min(1.0) / n as f64)
                .sum()
        };
        let mean_se = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            (m, (var / xs.len() as f64).sqrt())
        };
        let mut checked = 0;
        for a in 0..8u64 {
            for b in 0..8u64 {
                if a == b || kernel(a, b) == 0.0 {
                    continue;
                }
                // pi(a) P(a -> b) = pi(b) P(b -> a)
                let lhs = exact.mass(a) * kernel(a, b);
                let rhs = exact.mass(b) * kernel(b, a);
                assert!((lhs - rhs).abs() < 1e-12);
                let per_batch: Vec<f64> = flows
                    .iter()
                    .map(|f| f[a as usize][b as usize] as f64 / batch_len as f64)
                    .collect();
                let (m, se) = mean_se(&per_batch);
                assert!((m - lhs).abs() <= 3.0 * se, "flow {a}->{b}: {m} vs {lhs} (se {se})");
                let diff: Vec<f64> = flows
                    .iter()
                    .map(|f| (f[a as usize][b as usize] as f64 - f[b as usize][a as usize] as f64) / batch_len as f64)
                    .collect();
                let (d, dse) = mean_se(&diff);
                assert!(d.abs() <= 3.0 * dse + 1.0 / batch_len as f64, "net flow {a}<->{b}: {d} (se {dse})");
                checked += 1;
            }
        }
        assert!(checked >= 8);
    }
}
