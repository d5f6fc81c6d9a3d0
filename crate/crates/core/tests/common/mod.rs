#![allow(dead_code)]

use bnlab::{BayesNet, Dag, JointDistribution, Parametrization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random strictly positive tables for `dag`, entries in `[lo, 1 - lo]`.
pub fn random_net(dag: &Dag, lo: f64, rng: &mut impl Rng) -> BayesNet {
    let tables = (0..dag.n())
        .map(|i| (0..1usize << dag.parents(i).len()).map(|_| lo + (1.0 - 2.0 * lo) * rng.random::<f64>()).collect())
        .collect();
    BayesNet::new(dag.clone(), Parametrization::new(tables), true).unwrap()
}

/// Random strictly positive distribution on `n` boolean variables.
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> JointDistribution {
    let w: Vec<f64> = (0..1usize << n).map(|_| 0.02 + rng.random::<f64>()).collect();
    JointDistribution::from_weights(n, w).unwrap()
}

/// Joint probability of `state` by multiplying one table entry per node,
/// reading each table with the smallest parent in bit 0.
pub fn brute_force_prob(net: &BayesNet, state: usize) -> f64 {
    let mut p = 1.0;
    for i in 0..net.n() {
        let row = net.dag().parents(i).iter().enumerate().fold(0, |acc, (k, &q)| acc | (((state >> q) & 1) << k));
        let t = net.theta().table(i)[row];
        p *= if (state >> i) & 1 == 1 { t } else { 1.0 - t };
    }
    p
}

/// `sum p log2(p/q)` written out directly.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum()
}

/// The chain `0 -> 1 -> 2` with P(X0) = 0.4 and both conditionals (0.2, 0.8).
pub fn chain3() -> BayesNet {
    let dag = Dag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let theta = Parametrization::new(vec![vec![0.4], vec![0.2, 0.8], vec![0.2, 0.8]]);
    BayesNet::new(dag, theta, true).unwrap()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}
