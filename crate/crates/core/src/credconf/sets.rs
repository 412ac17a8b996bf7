use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::posterior::{ranked_prefix, ranked_support, MassFunction};
use crate::sbm::assignment::canonical_index;
use crate::sbm::Assignment;

/// Highest-mass assignments whose total mass reaches a target level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleSet {
    n: usize,
    /// Table indices, by decreasing mass then ascending index.
    members: Vec<u64>,
    masses: Vec<f64>,
    target_level: f64,
    achieved_mass: f64,
}

/// Shortest mass-ordered prefix with cumulative mass at least `level`.
///
/// `level == 0` yields the whole posterior support.
pub fn credible_set<M: MassFunction + ?Sized>(masses: &M, level: f64) -> Result<CredibleSet> {
    if !(0.0..=1.0).contains(&level) {
        return Err(invalid(format!("credible level {level} outside [0, 1]")));
    }
    let ranked = if level == 0.0 { ranked_support(masses) } else { ranked_prefix(masses, level) };
    let (members, masses_kept): (Vec<u64>, Vec<f64>) = ranked.into_iter().unzip();
    let achieved_mass = masses_kept.iter().sum();
    Ok(CredibleSet {
        n: masses.n(),
        members,
        masses: masses_kept,
        target_level: level,
        achieved_mass,
    })
}

impl CredibleSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn target_level(&self) -> f64 {
        self.target_level
    }

    pub fn achieved_mass(&self) -> f64 {
        self.achieved_mass
    }

    pub fn indices(&self) -> &[u64] {
        &self.members
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.members
            .iter()
            .map(|&i| Assignment::from_table_index(self.n, i).expect("member index in range"))
    }

    /// First member, the maximum-a-posteriori estimate.
    pub fn map_estimate(&self) -> Option<Assignment> {
        self.assignments().next()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.n() == self.n && self.members.contains(&a.table_index())
    }

    /// Whether `a` lies within k-metric distance `radius` of some member,
    /// i.e. belongs to the radius-`radius` enlargement.
    pub fn within_radius(&self, a: &Assignment, radius: usize) -> bool {
        if a.n() != self.n {
            return false;
        }
        let target = a.table_index() << 1;
        let n = self.n;
        self.members.iter().any(|&i| {
            let h = ((i << 1) ^ target).count_ones() as usize;
            h.min(n - h) <= radius
        })
    }
}

/// Union of k-metric balls of a common radius around the members of a credible set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnlargedSet {
    n: usize,
    radius: usize,
    /// Sorted table indices.
    members: Vec<u64>,
}

impl EnlargedSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn indices(&self) -> &[u64] {
        &self.members
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.n() == self.n && self.members.binary_search(&a.table_index()).is_ok()
    }

    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.members
            .iter()
            .map(|&i| Assignment::from_table_index(self.n, i).expect("member index in range"))
    }
}

/// Largest `n` for which enlargement may use a dense bitmap over all states.
const DENSE_MAX_N: usize = 30;

pub fn enlarge(set: &CredibleSet, radius: usize, n: usize) -> Result<EnlargedSet> {
    check_dims(set.n, n)?;
    if radius > n / 2 {
        return Err(invalid(format!("radius {radius} exceeds floor(n/2) = {}", n / 2)));
    }
    let total_states: u128 = 1u128 << (n - 1);
    let mut members: Vec<u64> = if radius == 0 || set.is_empty() {
        set.members.clone()
    } else if radius == n / 2 {
        if n > DENSE_MAX_N {
            return Err(invalid(format!("radius {radius} covers all 2^{} states", n - 1)));
        }
        (0..total_states as u64).collect()
    } else {
        let ball: u128 = (0..=radius).map(|j| binomial(n, j)).sum();
        let by_flips = set.len() as u128 * ball;
        let by_dilation = radius as u128 * total_states * n as u128;
        if n <= DENSE_MAX_N && by_dilation < by_flips {
            dilate_dense(set, radius, n)
        } else {
            let mut out = HashSet::new();
            for &i in &set.members {
                visit_flips(i << 1, 0, radius, n, &mut |mask| {
                    out.insert(canonical_index(mask, n));
                });
            }
            out.into_iter().collect()
        }
    };
    members.sort_unstable();
    Ok(EnlargedSet { n, radius, members })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Calls `f` on every mask reachable from `mask` by flipping at most
/// `remaining` distinct vertices with index `>= start`.
fn visit_flips(mask: u64, start: usize, remaining: usize, n: usize, f: &mut impl FnMut(u64)) {
    f(mask);
    if remaining == 0 {
        return;
    }
    for v in start..n {
        visit_flips(mask ^ (1 << v), v + 1, remaining - 1, n, f);
    }
}

/// Breadth-first dilation by single flips on a bitmap of all states.
fn dilate_dense(set: &CredibleSet, radius: usize, n: usize) -> Vec<u64> {
    let states = 1usize << (n - 1);
    let mut seen = vec![false; states];
    let mut frontier: Vec<u64> = Vec::new();
    for &i in &set.members {
        if !seen[i as usize] {
            seen[i as usize] = true;
            frontier.push(i);
        }
    }
    let mut count = frontier.len();
    for _ in 0..radius {
        if count == states {
            break;
        }
        let mut next = Vec::new();
        for &i in &frontier {
            for v in 0..n {
                let j = canonical_index((i << 1) ^ (1 << v), n);
                if !seen[j as usize] {
                    seen[j as usize] = true;
                    next.push(j);
                }
            }
        }
        count += next.len();
        frontier = next;
    }
    seen.iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| i as u64)
        .collect()
}
