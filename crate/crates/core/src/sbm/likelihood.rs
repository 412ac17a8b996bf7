use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Result};
use crate::sbm::graph::{pair_count, Graph};
use crate::sbm::params::SbmParams;

/// Sufficient statistics of a graph under a labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffStats {
    /// Present within-community edges.
    pub s_in: u64,
    /// Present between-community edges.
    pub s_out: u64,
    /// Within-community vertex pairs.
    pub within_pairs: u64,
    /// Between-community vertex pairs.
    pub between_pairs: u64,
}

impl SuffStats {
    /// Pair counts for `n` vertices with `m` of them labeled 1 (either
    /// community; the counts are symmetric in `m` and `n - m`).
    pub fn pair_counts(n: usize, m: usize) -> (u64, u64) {
        let between = (m * (n - m)) as u64;
        (pair_count(n) as u64 - between, between)
    }
}

/// Counts within/between edges of `graph` under `labels`.
pub fn suff_stats(graph: &Graph, labels: &[bool]) -> Result<SuffStats> {
    check_dims(graph.n(), labels.len())?;
    let n = labels.len();
    let m = labels.iter().filter(|&&l| l).count();
    let (within_pairs, between_pairs) = SuffStats::pair_counts(n, m);
    let s_in = graph.edges().filter(|&(i, j)| labels[i] == labels[j]).count() as u64;
    let s_out = graph.edge_count() as u64 - s_in;
    Ok(SuffStats { s_in, s_out, within_pairs, between_pairs })
}

/// Logs of the four Bernoulli cell probabilities, computed once per parameter set.
#[derive(Debug, Clone, Copy)]
pub struct LogParams {
    ln_p: f64,
    ln_1mp: f64,
    ln_q: f64,
    ln_1mq: f64,
}

#[inline]
fn term(count: u64, ln: f64) -> f64 {
    // 0 * ln 0 = 0
    if count == 0 {
        0.0
    } else {
        count as f64 * ln
    }
}

impl LogParams {
    pub fn new(params: &SbmParams) -> Self {
        LogParams {
            ln_p: params.p().ln(),
            ln_1mp: (1.0 - params.p()).ln(),
            ln_q: params.q().ln(),
            ln_1mq: (1.0 - params.q()).ln(),
        }
    }

    #[inline]
    pub fn eval(&self, s_in: u64, within: u64, s_out: u64, between: u64) -> f64 {
        term(s_in, self.ln_p)
            + term(within - s_in, self.ln_1mp)
            + term(s_out, self.ln_q)
            + term(between - s_out, self.ln_1mq)
    }
}

/// Log-density of the observed graph. `-inf` marks an impossible observation.
pub fn log_likelihood(stats: &SuffStats, params: &SbmParams) -> f64 {
    LogParams::new(params).eval(stats.s_in, stats.within_pairs, stats.s_out, stats.between_pairs)
}
