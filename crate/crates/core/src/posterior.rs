//! Exact posterior over all `2^(n-1)` canonical assignments under the
//! uniform prior.
//!
//! The prior is constant and cancels, so the table holds normalized
//! log-likelihoods. The index space is split into aligned blocks of
//! `2^BLOCK_BITS` entries; every block walks its low bits in reflected Gray
//! order, so consecutive states differ in one vertex and the sufficient
//! statistics update in O(1) from bitmask popcounts. Blocks are independent
//! and run in parallel. The block partition does not depend on the thread
//! count, so results are bit-identical for any `threads`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sbm::assignment::full_mask;
use crate::sbm::{Assignment, Graph, LogParams, SbmParams, SuffStats};

pub const DEFAULT_N_MAX: usize = 26;
/// Hard ceiling on `n_max`: 2^31 entries is 16 GiB of logs.
pub const HARD_N_MAX: usize = 32;

const BLOCK_BITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub n_max: usize,
    pub threads: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { n_max: DEFAULT_N_MAX, threads: 1 }
    }
}

/// Normalized log posterior masses indexed by [`Assignment::table_index`].
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    n: usize,
    log_mass: Vec<f64>,
    log_norm: f64,
}

/// Anything that assigns probability mass to canonical assignments.
pub trait MassFunction {
    fn n(&self) -> usize;

    /// `(table index, mass)` for every state with positive mass, in index order.
    fn support(&self) -> Vec<(u64, f64)>;

    /// The part of [`support`](MassFunction::support) with mass at least `min_mass`.
    fn support_above(&self, min_mass: f64) -> Vec<(u64, f64)> {
        self.support().into_iter().filter(|s| s.1 >= min_mass).collect()
    }
}

pub fn enumerate_posterior(graph: &Graph, params: &SbmParams) -> Result<PosteriorTable> {
    enumerate_posterior_with(graph, params, &EngineConfig::default())
}

pub fn enumerate_posterior_with(
    graph: &Graph,
    params: &SbmParams,
    config: &EngineConfig,
) -> Result<PosteriorTable> {
    let n = graph.n();
    let n_max = config.n_max.min(HARD_N_MAX);
    if n == 0 {
        return Err(invalid("graph has no vertices"));
    }
    if n > n_max {
        return Err(Error::Capacity { n, n_max });
    }
    if config.threads == 0 {
        return Err(invalid("threads must be at least 1"));
    }

    let kernel = Kernel::new(graph, params)?;
    let bits = n - 1;
    let block_bits = bits.min(BLOCK_BITS);
    let block_len = 1usize << block_bits;
    let mut log_mass = vec![0.0f64; 1usize << bits];

    let run = |log_mass: &mut Vec<f64>| -> Vec<f64> {
        log_mass
            .par_chunks_mut(block_len)
            .enumerate()
            .map(|(b, chunk)| kernel.fill_block((b as u64) << block_bits, block_bits, chunk))
            .collect()
    };
    let block_max = if config.threads == 1 {
        log_mass
            .chunks_mut(block_len)
            .enumerate()
            .map(|(b, chunk)| kernel.fill_block((b as u64) << block_bits, block_bits, chunk))
            .collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| invalid(format!("thread pool: {e}")))?
            .install(|| run(&mut log_mass))
    };

    let max = block_max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegeneratePosterior);
    }
    let block_sums: Vec<f64> = if config.threads == 1 {
        log_mass.chunks(block_len).map(|c| shifted_sum(c, max)).collect()
    } else {
        log_mass.par_chunks(block_len).map(|c| shifted_sum(c, max)).collect()
    };
    // merged in block order
    let log_norm = max + block_sums.iter().sum::<f64>().ln();
    if config.threads == 1 {
        log_mass.iter_mut().for_each(|v| *v -= log_norm);
    } else {
        log_mass.par_iter_mut().for_each(|v| *v -= log_norm);
    }
    Ok(PosteriorTable { n, log_mass, log_norm })
}

fn shifted_sum(values: &[f64], max: f64) -> f64 {
    values.iter().map(|v| (v - max).exp()).sum()
}

struct Kernel {
    n: usize,
    rows: Vec<u64>,
    degree: Vec<i64>,
    edges: i64,
    within: Vec<u64>,
    between: Vec<u64>,
    logp: LogParams,
}

impl Kernel {
    fn new(graph: &Graph, params: &SbmParams) -> Result<Self> {
        let n = graph.n();
        let rows = graph.neighbor_masks()?;
        let degree = rows.iter().map(|r| r.count_ones() as i64).collect();
        let (within, between) = (0..=n).map(|m| SuffStats::pair_counts(n, m)).unzip();
        Ok(Kernel {
            n,
            rows,
            degree,
            edges: graph.edge_count() as i64,
            within,
            between,
            logp: LogParams::new(params),
        })
    }

    /// Number of present edges joining equal labels under `mask`.
    fn within_edges(&self, mask: u64) -> i64 {
        let full = full_mask(self.n);
        let twice: u32 = (0..self.n)
            .map(|v| {
                let same = if mask >> v & 1 == 1 { mask } else { !mask & full };
                (self.rows[v] & same).count_ones()
            })
            .sum();
        i64::from(twice / 2)
    }

    #[inline]
    fn eval(&self, s_in: i64, ones: usize) -> f64 {
        let s_out = self.edges - s_in;
        self.logp.eval(s_in as u64, self.within[ones], s_out as u64, self.between[ones])
    }

    /// Fills `out[j] = loglik(base | j)` for every low-bit pattern `j`,
    /// visiting the patterns in Gray order. Returns the block maximum.
    fn fill_block(&self, base: u64, block_bits: usize, out: &mut [f64]) -> f64 {
        let mut mask = base << 1;
        let mut ones = mask.count_ones() as usize;
        let mut s_in = self.within_edges(mask);
        let mut gray = 0usize;
        let mut value = self.eval(s_in, ones);
        out[0] = value;
        let mut max = value;
        for step in 1usize..(1 << block_bits) {
            let bit = step.trailing_zeros() as usize;
            let v = bit + 1;
            let nbr_ones = i64::from((self.rows[v] & mask).count_ones());
            if mask >> v & 1 == 0 {
                s_in += 2 * nbr_ones - self.degree[v];
                ones += 1;
            } else {
                s_in += self.degree[v] - 2 * nbr_ones;
                ones -= 1;
            }
            mask ^= 1 << v;
            gray ^= 1 << bit;
            value = self.eval(s_in, ones);
            out[gray] = value;
            max = max.max(value);
        }
        max
    }
}

/// Mass queries on the exact table.
#[derive(Debug, Clone, PartialEq)]
pub enum MassQuery {
    Singleton(Assignment),
    /// All assignments within k-metric distance `radius` of `center`.
    Ball { center: Assignment, radius: usize },
    /// All assignments whose smallest community has exactly `m` vertices.
    SizeClass(usize),
    Complement(Box<MassQuery>),
}

impl PosteriorTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mass.is_empty()
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn mass(&self, index: u64) -> f64 {
        self.log_mass[index as usize].exp()
    }

    pub fn mass_of(&self, a: &Assignment) -> Result<f64> {
        crate::error::check_dims(self.n, a.n())?;
        Ok(self.mass(a.table_index()))
    }

    /// Maximum-a-posteriori assignment (lowest index among ties).
    pub fn map_estimate(&self) -> Assignment {
        let (best, _) = self
            .log_mass
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        Assignment::from_table_index(self.n, best as u64).expect("index in range")
    }

    fn sum_where(&self, pred: impl Fn(u64) -> bool) -> f64 {
        self.log_mass
            .iter()
            .enumerate()
            .filter(|&(i, _)| pred(i as u64))
            .map(|(_, v)| v.exp())
            .sum()
    }

    pub fn query_mass(&self, query: &MassQuery) -> Result<f64> {
        let n = self.n;
        match query {
            MassQuery::Singleton(a) => self.mass_of(a),
            MassQuery::Ball { center, radius } => {
                crate::error::check_dims(n, center.n())?;
                if *radius > n / 2 {
                    return Err(invalid(format!("radius {radius} exceeds floor(n/2) = {}", n / 2)));
                }
                let c = center.table_index() << 1;
                Ok(self.sum_where(|i| {
                    let h = ((i << 1) ^ c).count_ones() as usize;
                    h.min(n - h) <= *radius
                })
                .min(1.0))
            }
            MassQuery::SizeClass(m) => {
                if *m > n / 2 {
                    return Err(invalid(format!("community size {m} exceeds floor(n/2) = {}", n / 2)));
                }
                Ok(self.sum_where(|i| {
                    let ones = i.count_ones() as usize;
                    ones.min(n - ones) == *m
                }))
            }
            MassQuery::Complement(inner) => Ok((1.0 - self.query_mass(inner)?).max(0.0)),
        }
    }
}

impl MassFunction for PosteriorTable {
    fn n(&self) -> usize {
        self.n
    }

    fn support(&self) -> Vec<(u64, f64)> {
        self.log_mass
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, v)| (i as u64, v.exp()))
            .collect()
    }

    fn support_above(&self, min_mass: f64) -> Vec<(u64, f64)> {
        // cheap log-domain screen, exact comparison on the survivors
        let screen = min_mass.ln() - 1e-6;
        self.log_mass
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v.is_finite() && v >= screen)
            .map(|(i, v)| (i as u64, v.exp()))
            .filter(|s| s.1 >= min_mass)
            .collect()
    }
}

fn rank_order(a: &(u64, f64), b: &(u64, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Support sorted by decreasing mass, ties by ascending index.
pub fn ranked_support<M: MassFunction + ?Sized>(masses: &M) -> Vec<(u64, f64)> {
    let mut states = masses.support();
    states.sort_by(rank_order);
    states
}

/// First `count` entries of [`ranked_support`], selected without sorting the rest.
pub fn ranked_top<M: MassFunction + ?Sized>(masses: &M, count: usize) -> Vec<(u64, f64)> {
    let mut states = masses.support();
    top_sorted(&mut states, count)
}

/// Sorted copy of the `count` best entries; `states` is only permuted.
fn top_sorted(states: &mut [(u64, f64)], count: usize) -> Vec<(u64, f64)> {
    if count < states.len() {
        states.select_nth_unstable_by(count, rank_order);
    }
    let mut head = states[..count.min(states.len())].to_vec();
    head.sort_by(rank_order);
    head
}

/// Shortest prefix of [`ranked_support`] reaching `level` (see [`prefix_len`]).
///
/// Posteriors are usually concentrated, so the states above a small mass
/// threshold are tried first; they form a leading segment of the ranking.
/// Within a candidate set the prefix is grown geometrically instead of
/// sorting everything.
pub(crate) fn ranked_prefix<M: MassFunction + ?Sized>(masses: &M, level: f64) -> Vec<(u64, f64)> {
    let mut candidates = masses.support_above(PREFIX_SCREEN);
    if let Some(prefix) = grow_prefix(&mut candidates, level, false) {
        return prefix;
    }
    let mut states = masses.support();
    grow_prefix(&mut states, level, true).expect("exhaustive search always ends")
}

const PREFIX_SCREEN: f64 = 1e-12;

fn grow_prefix(states: &mut [(u64, f64)], level: f64, exhaustive: bool) -> Option<Vec<(u64, f64)>> {
    let mut count = 1024;
    loop {
        let mut head = top_sorted(states, count);
        let take = prefix_len(&head, level);
        // prefix_len also returns the full length when the level is reached
        // exactly at the last entry
        let reached = take < head.len() || head.iter().map(|s| s.1).sum::<f64>() >= level;
        if reached || (exhaustive && count >= states.len()) {
            head.truncate(take);
            return Some(head);
        }
        if count >= states.len() {
            return None;
        }
        count *= 8;
    }
}

/// Length of the shortest prefix of `ranked` whose cumulative mass reaches
/// `level`; the whole support when rounding keeps it short of `level`.
pub(crate) fn prefix_len(ranked: &[(u64, f64)], level: f64) -> usize {
    let mut cum = 0.0;
    for (k, &(_, mass)) in ranked.iter().enumerate() {
        if cum >= level {
            return k;
        }
        cum += mass;
    }
    ranked.len()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopTarget {
    Count(usize),
    Level(f64),
}

/// Highest-mass assignments in decreasing order; the first is the MAP estimate.
pub fn top_assignments<M: MassFunction + ?Sized>(
    masses: &M,
    target: TopTarget,
) -> Result<Vec<(Assignment, f64)>> {
    let ranked = match target {
        TopTarget::Count(c) => ranked_top(masses, c),
        TopTarget::Level(level) => {
            if !(0.0..=1.0).contains(&level) {
                return Err(invalid(format!("level {level} outside [0, 1]")));
            }
            ranked_prefix(masses, level)
        }
    };
    ranked
        .into_iter()
        .map(|(i, mass)| Ok((Assignment::from_table_index(masses.n(), i)?, mass)))
        .collect()
}
