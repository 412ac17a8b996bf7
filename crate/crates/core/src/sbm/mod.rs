//! Domain types for the two-community stochastic block model: labelings,
//! graphs, edge probabilities, likelihoods, and the combinatorial distances
//! used by every downstream module.

pub mod assignment;
pub mod graph;
pub mod likelihood;
pub mod metrics;
pub mod params;

pub use assignment::{parse_labels, Assignment};
pub use graph::Graph;
pub use likelihood::{log_likelihood, suff_stats, LogParams, SuffStats};
pub use metrics::{d_sizes, hamming_and_k, hellinger_affinity, min_edge_changes};
pub use params::{Phase, PhaseParams, SbmParams};

use rand::Rng;

use crate::rng::seeded;

/// Draws a graph with independent edges: probability `p` within a
/// community and `q` between communities.
pub fn sample_graph(params: &SbmParams, truth: &[bool], seed: u64) -> Graph {
    sample_graph_with(params, truth, &mut seeded(seed))
}

pub fn sample_graph_with<R: Rng + ?Sized>(params: &SbmParams, truth: &[bool], rng: &mut R) -> Graph {
    let n = truth.len();
    let mut g = Graph::empty(n);
    for j in 1..n {
        for i in 0..j {
            let prob = if truth[i] == truth[j] { params.p() } else { params.q() };
            if rng.random_bool(prob) {
                g.add_edge(i, j).expect("pair within range");
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_edges() {
        let truth = parse_labels("000111").unwrap();
        let full = SbmParams::new(1.0, 1.0).unwrap();
        assert_eq!(sample_graph(&full, &truth, 3), Graph::complete(6));
        let none = SbmParams::new(0.0, 0.0).unwrap();
        assert_eq!(sample_graph(&none, &truth, 3).edge_count(), 0);

        let split = SbmParams::new(1.0, 0.0).unwrap();
        let g = sample_graph(&split, &truth, 3);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]);
    }

    #[test]
    fn deterministic_given_seed() {
        let truth = Assignment::blocks(20, 8).unwrap();
        let params = SbmParams::new(0.4, 0.2).unwrap();
        let a = sample_graph(&params, truth.labels(), 11);
        assert_eq!(a, sample_graph(&params, truth.labels(), 11));
        assert_ne!(a, sample_graph(&params, truth.labels(), 12));
    }

    #[test]
    fn empirical_edge_frequencies_converge() {
        let (p, q) = (0.3, 0.1);
        let params = SbmParams::new(p, q).unwrap();
        let truth = Assignment::blocks(40, 20).unwrap();
        let reps = 200;
        let (mut fin, mut fout) = (Vec::new(), Vec::new());
        for seed in 0..reps {
            let g = sample_graph(&params, truth.labels(), seed);
            let st = suff_stats(&g, truth.labels()).unwrap();
            fin.push(st.s_in as f64 / st.within_pairs as f64);
            fout.push(st.s_out as f64 / st.between_pairs as f64);
        }
        for (xs, target) in [(fin, p), (fout, q)] {
            let mean = xs.iter().sum::<f64>() / reps as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            let se = (var / reps as f64).sqrt();
            assert!((mean - target).abs() < 4.0 * se, "mean {mean} vs {target} (se {se})");
        }
    }
}
