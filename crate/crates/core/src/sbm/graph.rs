use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::sbm::assignment::MAX_INDEXED_N;

/// Undirected simple graph stored as a bitset over vertex pairs.
///
/// Pair `(i, j)` with `i < j` (0-indexed) lives at bit `j(j-1)/2 + i`, which
/// is `(j-1)(j-2)/2 + (i-1)` in 1-indexed terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    bits: Vec<u64>,
}

#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            bits: vec![0; pair_count(n).div_ceil(64)],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for j in 1..n {
            for i in 0..j {
                g.set(i, j);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn set(&mut self, i: usize, j: usize) {
        let k = pair_index(i, j);
        self.bits[k / 64] |= 1 << (k % 64);
    }

    /// Adds the edge `{i, j}` (0-indexed, any order).
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(invalid(format!("self-loop at vertex {}", i + 1)));
        }
        if i.max(j) >= self.n {
            return Err(invalid(format!(
                "edge ({}, {}) outside a graph on {} vertices",
                i + 1,
                j + 1,
                self.n
            )));
        }
        self.set(i.min(j), i.max(j));
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i.max(j) >= self.n {
            return false;
        }
        let k = pair_index(i.min(j), i.max(j));
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Edges as `(i, j)` with `i < j`, 0-indexed, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n)
                .filter(move |&j| self.has_edge(i, j))
                .map(move |j| (i, j))
        })
    }

    /// Row `v` has bit `u` set iff `{u, v}` is an edge. Requires `n <= 64`.
    pub fn neighbor_masks(&self) -> Result<Vec<u64>> {
        if self.n > MAX_INDEXED_N {
            return Err(invalid(format!(
                "bitmask adjacency supports at most {MAX_INDEXED_N} vertices, got {}",
                self.n
            )));
        }
        let mut rows = vec![0u64; self.n];
        for (i, j) in self.edges() {
            rows[i] |= 1 << j;
            rows[j] |= 1 << i;
        }
        Ok(rows)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for (i, j) in self.edges() {
            writeln!(f, "{} {}", i + 1, j + 1)?;
        }
        Ok(())
    }
}

impl FromStr for Graph {
    type Err = Error;

    /// Parses the text format: a header line `n <N>` followed by one
    /// `i j` line per edge, 1-indexed with `i < j`. Blank lines are skipped.
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header `n <N>`".into(),
        })?;
        let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
            ["n", count] => count.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad vertex count: {e}"),
            })?,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `n <N>`, found {header:?}"),
                })
            }
        };
        let mut g = Graph::empty(n);
        for (line, text) in lines {
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.ok_or_else(|| Error::Parse { line, msg: "expected two vertex ids".into() })?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse { line, msg: format!("bad vertex id: {e}") })
            };
            let mut toks = text.split_whitespace();
            let i = parse(toks.next())?;
            let j = parse(toks.next())?;
            if toks.next().is_some() {
                return Err(Error::Parse { line, msg: "trailing tokens".into() });
            }
            if !(1 <= i && i < j && j <= n) {
                return Err(Error::Parse {
                    line,
                    msg: format!("edge ({i}, {j}) must satisfy 1 <= i < j <= {n}"),
                });
            }
            if g.has_edge(i - 1, j - 1) {
                return Err(Error::Parse { line, msg: format!("duplicate edge ({i}, {j})") });
            }
            g.set(i - 1, j - 1);
        }
        Ok(g)
    }
}
