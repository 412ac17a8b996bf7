use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest vertex count for which assignments have a packed `u64` index.
pub const MAX_INDEXED_N: usize = 64;

/// Canonical two-community labeling of `n` vertices.
///
/// Label `false` (0) marks the largest community and `true` (1) the
/// smallest. A labeling and its complement induce the same graph law, so
/// only one member of each pair is representable: the one with fewer ones,
/// or with `labels[0] == 0` when both halves have `n/2` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Assignment {
    labels: Vec<bool>,
    ones: usize,
}

impl Assignment {
    /// Returns the canonical representative of `{labels, complement(labels)}`.
    pub fn canonicalize(labels: &[bool]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(invalid("assignment must have at least one vertex"));
        }
        let ones = labels.iter().filter(|&&l| l).count();
        let flip = 2 * ones > n || (2 * ones == n && labels[0]);
        let (labels, ones) = if flip {
            (labels.iter().map(|&l| !l).collect(), n - ones)
        } else {
            (labels.to_vec(), ones)
        };
        Ok(Assignment { labels, ones })
    }

    /// First `n - m` vertices in the largest community, last `m` in the smallest.
    pub fn blocks(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m > n / 2 {
            return Err(invalid(format!("smallest community size {m} out of range for n = {n}")));
        }
        let labels: Vec<bool> = (0..n).map(|i| i >= n - m).collect();
        Self::canonicalize(&labels)
    }

    /// Inverse of [`Assignment::table_index`].
    pub fn from_table_index(n: usize, index: u64) -> Result<Self> {
        if n == 0 || n > MAX_INDEXED_N {
            return Err(invalid(format!("n = {n} outside 1..={MAX_INDEXED_N}")));
        }
        if n < 64 && index >> (n - 1) != 0 {
            return Err(invalid(format!("index {index} out of range for n = {n}")));
        }
        let mask = index << 1;
        let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        Self::canonicalize(&labels)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Size of the smallest community.
    pub fn m(&self) -> usize {
        self.ones
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn complement_labels(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| !l).collect()
    }

    /// Bit `i` set iff vertex `i` carries label 1. Requires `n <= 64`.
    pub fn mask(&self) -> u64 {
        debug_assert!(self.n() <= MAX_INDEXED_N);
        labels_to_mask(&self.labels)
    }

    /// Position of this assignment in the exact posterior table.
    ///
    /// The table enumerates label sequences with `labels[0] == 0`, read as
    /// an `(n-1)`-bit integer whose bit `i-1` is `labels[i]`. Each complement
    /// class has exactly one such member.
    pub fn table_index(&self) -> u64 {
        canonical_index(self.mask(), self.n())
    }
}

pub(crate) fn labels_to_mask(labels: &[bool]) -> u64 {
    labels
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &l)| acc | (u64::from(l) << i))
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Table index of the complement class containing `mask`.
pub(crate) fn canonical_index(mask: u64, n: usize) -> u64 {
    let rep = if mask & 1 == 1 { !mask & full_mask(n) } else { mask };
    rep >> 1
}

pub fn parse_labels(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::Parse {
                line: 1,
                msg: format!("unexpected character {other:?} in assignment"),
            }),
        })
        .collect()
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::canonicalize(&parse_labels(s)?)
    }
}

impl TryFrom<String> for Assignment {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Assignment> for String {
    fn from(a: Assignment) -> String {
        a.to_string()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.labels {
            f.write_str(if l { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn canon(s: &str) -> String {
        s.parse::<Assignment>().unwrap().to_string()
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canon("1101"), "0010");
        assert_eq!(canon("0011"), "0011");
        assert_eq!(canon("1100"), "0011");
        assert_eq!(canon("1"), "0");
    }

    #[test]
    fn empty_is_rejected() {
        assert!(Assignment::canonicalize(&[]).is_err());
        assert!("".parse::<Assignment>().is_err());
        assert!("01x".parse::<Assignment>().is_err());
    }

    #[test]
    fn table_index_round_trip_is_a_bijection() {
        for n in 1..=8usize {
            let count = 1u64 << (n - 1);
            let mut seen = std::collections::HashSet::new();
            for idx in 0..count {
                let a = Assignment::from_table_index(n, idx).unwrap();
                assert_eq!(a.table_index(), idx);
                assert!(seen.insert(a));
            }
        }
        assert!(Assignment::from_table_index(3, 4).is_err());
    }

    #[test]
    fn blocks_layout() {
        assert_eq!(Assignment::blocks(6, 3).unwrap().to_string(), "000111");
        assert_eq!(Assignment::blocks(5, 0).unwrap().m(), 0);
        assert!(Assignment::blocks(5, 3).is_err());
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent_and_complement_blind(labels in prop::collection::vec(any::<bool>(), 1..40)) {
            let a = Assignment::canonicalize(&labels).unwrap();
            let comp: Vec<bool> = labels.iter().map(|&l| !l).collect();
            prop_assert_eq!(&Assignment::canonicalize(a.labels()).unwrap(), &a);
            prop_assert_eq!(&Assignment::canonicalize(&comp).unwrap(), &a);
            prop_assert!(2 * a.m() <= a.n());
            prop_assert_eq!(a.m(), a.labels().iter().filter(|&&l| l).count());
            if 2 * a.m() == a.n() {
                prop_assert!(!a.labels()[0]);
            }
        }
    }
}
