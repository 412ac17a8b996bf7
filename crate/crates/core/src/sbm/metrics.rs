use crate::error::{check_dims, invalid, Result};
use crate::sbm::params::check_probability;

/// Hamming distance `h` between two label sequences and the
/// complement-aware distance `k = min(h, n - h)`.
///
/// Operates on the sequences as given; `k` is the same for any choice of
/// representatives.
pub fn hamming_and_k(theta: &[bool], eta: &[bool]) -> Result<(usize, usize)> {
    check_dims(theta.len(), eta.len())?;
    let h = theta.iter().zip(eta).filter(|(a, b)| a != b).count();
    Ok((h, h.min(theta.len() - h)))
}

/// Sizes of the edge sets whose probability flips `p -> q` (`d1`) and
/// `q -> p` (`d2`) when `theta` is replaced by `eta`.
pub fn d_sizes(theta: &[bool], eta: &[bool]) -> Result<(usize, usize)> {
    check_dims(theta.len(), eta.len())?;
    // v[a][b] = #{i : theta_i = a, eta_i = b}
    let mut v = [[0usize; 2]; 2];
    for (&t, &e) in theta.iter().zip(eta) {
        v[t as usize][e as usize] += 1;
    }
    let d1 = v[0][0] * v[0][1] + v[1][1] * v[1][0];
    let d2 = v[0][0] * v[1][0] + v[0][1] * v[1][1];
    Ok((d1, d2))
}

/// Hellinger affinity between Bernoulli(p) and Bernoulli(q).
pub fn hellinger_affinity(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(((p * q).sqrt() + ((1.0 - p) * (1.0 - q)).sqrt()).min(1.0))
}

/// Minimum number of edge-probability changes between any assignment with
/// smallest community `m1` and any with smallest community `m2`.
pub fn min_edge_changes(m1: usize, m2: usize, n: usize) -> Result<usize> {
    if m1 > n / 2 || m2 > n / 2 {
        return Err(invalid(format!(
            "community sizes ({m1}, {m2}) must not exceed floor(n/2) = {}",
            n / 2
        )));
    }
    let d = m1.abs_diff(m2);
    Ok(d * (n - d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::assignment::parse_labels;

    fn l(s: &str) -> Vec<bool> {
        parse_labels(s).unwrap()
    }

    /// Direct count over all pairs i < j.
    fn brute_d(theta: &[bool], eta: &[bool]) -> (usize, usize) {
        let n = theta.len();
        let (mut d1, mut d2) = (0, 0);
        for j in 1..n {
            for i in 0..j {
                let same_t = theta[i] == theta[j];
                let same_e = eta[i] == eta[j];
                if same_t && !same_e {
                    d1 += 1;
                }
                if !same_t && same_e {
                    d2 += 1;
                }
            }
        }
        (d1, d2)
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_and_k(&l("0110"), &l("0110")).unwrap(), (0, 0));
        assert_eq!(hamming_and_k(&l("0011"), &l("1100")).unwrap(), (4, 0));
        assert_eq!(hamming_and_k(&l("000111"), &l("001111")).unwrap(), (1, 1));
        assert!(hamming_and_k(&l("01"), &l("011")).is_err());
    }

    #[test]
    fn d_size_examples() {
        assert_eq!(d_sizes(&l("0101"), &l("0101")).unwrap(), (0, 0));
        let (d1, d2) = d_sizes(&l("000111"), &l("001111")).unwrap();
        assert_eq!((d1, d2), brute_d(&l("000111"), &l("001111")));
        assert_eq!((d1, d2), (2, 3));
        assert_eq!(d1 + d2, 6 - 1);
        // complement of eta changes nothing
        assert_eq!(d_sizes(&l("000111"), &l("110000")).unwrap(), (2, 3));
    }

    #[test]
    fn affinity_examples() {
        assert!((hellinger_affinity(0.9, 0.1).unwrap() - 0.6).abs() < 1e-12);
        assert!((hellinger_affinity(0.5, 0.125).unwrap() - (0.0625f64.sqrt() + 0.4375f64.sqrt())).abs() < 1e-15);
        assert!((hellinger_affinity(0.5, 0.125).unwrap() - 0.911437).abs() < 1e-6);
        assert_eq!(hellinger_affinity(0.0, 1.0).unwrap(), 0.0);
        assert!(hellinger_affinity(1.1, 0.5).is_err());
    }

    #[test]
    fn affinity_grid_properties() {
        for i in 0..100 {
            for j in 0..100 {
                let (p, q) = (i as f64 / 99.0, j as f64 / 99.0);
                let r = hellinger_affinity(p, q).unwrap();
                assert!((0.0..=1.0).contains(&r));
                assert_eq!(r, hellinger_affinity(q, p).unwrap());
                if i == j {
                    assert!((r - 1.0).abs() < 1e-12);
                } else {
                    assert!(r < 1.0 - 1e-6, "rho({p}, {q}) = {r}");
                }
            }
        }
    }

    #[test]
    fn min_edge_change_examples() {
        assert_eq!(min_edge_changes(2, 2, 7).unwrap(), 0);
        assert_eq!(min_edge_changes(0, 3, 6).unwrap(), 9);
        assert_eq!(min_edge_changes(0, 2, 10).unwrap(), 16);
        assert!(min_edge_changes(0, 4, 7).is_err());
    }

    #[test]
    fn exhaustive_identities_small_n() {
        use crate::sbm::Assignment;
        for n in 2..=8usize {
            let all: Vec<Assignment> = (0..1u64 << (n - 1))
                .map(|i| Assignment::from_table_index(n, i).unwrap())
                .collect();
            let mut min_by_class = vec![vec![usize::MAX; n / 2 + 1]; n / 2 + 1];
            for a in &all {
                for b in &all {
                    let (h, _) = hamming_and_k(a.labels(), b.labels()).unwrap();
                    let (d1, d2) = d_sizes(a.labels(), b.labels()).unwrap();
                    assert_eq!((d1, d2), brute_d(a.labels(), b.labels()));
                    assert_eq!(d1 + d2, h * (n - h));
                    let cell = &mut min_by_class[a.m()][b.m()];
                    *cell = (*cell).min(d1 + d2);
                }
            }
            for m1 in 0..=n / 2 {
                for m2 in 0..=n / 2 {
                    assert_eq!(min_by_class[m1][m2], min_edge_changes(m1, m2, n).unwrap());
                }
            }
        }
    }
}
