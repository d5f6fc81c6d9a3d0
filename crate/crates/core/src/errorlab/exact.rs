//! Exact error probabilities by summing over every count vector.

use crate::bn::{BayesNet, Dag};
use crate::scoring::PenaltyFunction;
use crate::{par, Error, Result};

use super::{ErrorEstimate, Method, Outcome, PairScorer};

/// Cap on the number of count vectors an exact computation may visit.
pub const MAX_COUNT_VECTORS: f64 = 1e7;

/// Number of ways to spread `n` samples over `cells` states:
/// `C(n + cells - 1, cells - 1)`.
pub fn count_vectors(n: u64, cells: usize) -> f64 {
    let mut acc = 1.0;
    for i in 1..cells as u64 {
        acc *= (n as f64 + i as f64) / i as f64;
    }
    acc
}

/// Probabilities of the three score orderings; they sum to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOutcomes {
    /// `P(S_N(g_star) < S_N(g))`.
    pub rival_wins: f64,
    pub tie: f64,
    pub true_wins: f64,
}

impl ExactOutcomes {
    pub fn total(&self) -> f64 {
        self.rival_wins + self.tie + self.true_wins
    }
}

pub fn exact_outcomes(
    net_star: &BayesNet,
    g_star: &Dag,
    g: &Dag,
    n_samples: u64,
    psi: &PenaltyFunction,
) -> Result<ExactOutcomes> {
    let cells = 1usize << net_star.n();
    let visits = count_vectors(n_samples, cells);
    if visits > MAX_COUNT_VECTORS {
        return Err(Error::Capacity(format!(
            "exact enumeration would visit {visits:.3e} count vectors (cap {MAX_COUNT_VECTORS:e})"
        )));
    }
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let scorer = PairScorer::new(g_star, g, psi, n_samples)?;
    let ln_p: Vec<f64> = net_star.joint_distribution().probs().iter().map(|p| p.ln()).collect();
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n_samples).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();

    // split on the count of the first cell
    let parts = par::map_indexed(n_samples as usize + 1, |first| {
        let mut walker = Walker {
            scorer: &scorer,
            ln_p: &ln_p,
            ln_fact: &ln_fact,
            counts: vec![0.0; cells],
            scratch: Vec::new(),
            sums: [0.0; 3],
        };
        let first = first as u64;
        let ln_w = ln_fact[n_samples as usize] - ln_fact[first as usize] + term(first, ln_p[0]);
        if ln_w > f64::NEG_INFINITY {
            walker.counts[0] = first as f64;
            walker.walk(1, n_samples - first, ln_w);
        }
        walker.sums
    });
    let mut sums = [0.0; 3];
    for s in parts {
        for k in 0..3 {
            sums[k] += s[k];
        }
    }
    Ok(ExactOutcomes { rival_wins: sums[0], tie: sums[1], true_wins: sums[2] })
}

/// `c ln p` with `0 ln 0 = 0`.
fn term(c: u64, ln_p: f64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * ln_p
    }
}

struct Walker<'a> {
    scorer: &'a PairScorer,
    ln_p: &'a [f64],
    ln_fact: &'a [f64],
    counts: Vec<f64>,
    scratch: Vec<f64>,
    sums: [f64; 3],
}

impl Walker<'_> {
    fn walk(&mut self, cell: usize, remaining: u64, ln_w: f64) {
        let last = self.counts.len() - 1;
        if cell == last {
            let ln_w = ln_w - self.ln_fact[remaining as usize] + term(remaining, self.ln_p[cell]);
            if ln_w == f64::NEG_INFINITY {
                return;
            }
            self.counts[cell] = remaining as f64;
            let k = match self.scorer.outcome(&self.counts, &mut self.scratch) {
                Outcome::RivalWins => 0,
                Outcome::Tie => 1,
                Outcome::TrueWins => 2,
            };
            self.sums[k] += ln_w.exp();
            return;
        }
        for c in 0..=remaining {
            let next = ln_w - self.ln_fact[c as usize] + term(c, self.ln_p[cell]);
            if next == f64::NEG_INFINITY {
                continue;
            }
            self.counts[cell] = c as f64;
            self.walk(cell + 1, remaining - c, next);
        }
        self.counts[cell] = 0.0;
    }
}

/// `P(S_N(g_star) < S_N(g))` summed exactly over all datasets of size `N`.
pub fn exact_error_prob(
    net_star: &BayesNet,
    g_star: &Dag,
    g: &Dag,
    n_samples: u64,
    psi: &PenaltyFunction,
) -> Result<ErrorEstimate> {
    let o = exact_outcomes(net_star, g_star, g, n_samples, psi)?;
    let p = o.rival_wins.clamp(0.0, 1.0);
    Ok(ErrorEstimate::plain(Method::Exact, n_samples, 0, p, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bn::Parametrization;

    fn two_node(theta: Vec<Vec<f64>>, edges: &[(usize, usize)]) -> BayesNet {
        BayesNet::new(Dag::from_edges(2, edges).unwrap(), Parametrization::new(theta), true).unwrap()
    }

    #[test]
    fn count_vector_numbers() {
        assert_eq!(count_vectors(1, 4), 4.0);
        assert_eq!(count_vectors(2, 4), 10.0);
        assert!((count_vectors(20, 8) - 888_030.0).abs() < 1e-6);
    }

    #[test]
    fn outcomes_partition_probability_space() {
        let net = two_node(vec![vec![0.3], vec![0.2, 0.7]], &[(0, 1)]);
        for n in [1, 3, 12] {
            let o = exact_outcomes(&net, net.dag(), &Dag::empty(2), n, &PenaltyFunction::Bic).unwrap();
            assert!((o.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_by_hand() {
        // With N = 1 every family has one observation: all log-likelihoods are 0
        // and Psi(1) = 0, so every dataset ties and no error occurs.
        let net = two_node(vec![vec![0.3], vec![0.2, 0.7]], &[(0, 1)]);
        let o = exact_outcomes(&net, net.dag(), &Dag::empty(2), 1, &PenaltyFunction::Bic).unwrap();
        assert!((o.tie - 1.0).abs() < 1e-12);

        // A positive constant penalty makes the smaller empty graph win on
        // each of the four single-state datasets.
        let psi = PenaltyFunction::Constant { value: 0.5 };
        let o = exact_outcomes(&net, net.dag(), &Dag::empty(2), 1, &psi).unwrap();
        assert!((o.rival_wins - 1.0).abs() < 1e-12);
        let o = exact_outcomes(&net, &Dag::empty(2), net.dag(), 1, &psi).unwrap();
        assert!((o.true_wins - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equivalent_graph_never_wins() {
        let net = two_node(vec![vec![0.3], vec![0.2, 0.7]], &[(0, 1)]);
        let rev = Dag::from_edges(2, &[(1, 0)]).unwrap();
        let e = exact_error_prob(&net, net.dag(), &rev, 15, &PenaltyFunction::Bic).unwrap();
        assert_eq!(e.probability, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn capacity_is_enforced() {
        let net = two_node(vec![vec![0.3], vec![0.2, 0.7]], &[(0, 1)]);
        let err = exact_error_prob(&net, net.dag(), net.dag(), 100_000, &PenaltyFunction::Bic).unwrap_err();
        assert!(err.is_capacity());
    }
}
