//! Boolean Bayesian networks, their exact joint distributions and sampling.
//!
//! State indices put node 0 in the least significant bit. A conditional
//! table for node `i` is indexed by the assignment of its parents in
//! ascending node order, the smallest parent in the least significant bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::table::{self, gather};
use crate::{Error, Result};

/// Largest supported network.
pub const MAX_NODES: usize = 12;

/// Margin enforced on table entries of strictly positive networks.
pub const STRICT_EPSILON: f64 = 1e-9;

const SUM_TOLERANCE: f64 = 1e-12;

/// A directed acyclic graph over `n` boolean nodes, stored as sorted parent lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn new(n: usize, mut parents: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(Error::Capacity(format!("networks need 1..={MAX_NODES} nodes, got {n}")));
        }
        if parents.len() != n {
            return Err(Error::invalid(format!("expected {n} parent lists, got {}", parents.len())));
        }
        for (i, pa) in parents.iter_mut().enumerate() {
            pa.sort_unstable();
            pa.dedup();
            if let Some(&bad) = pa.iter().find(|&&p| p >= n || p == i) {
                return Err(Error::invalid(format!("node {i} has invalid parent {bad}")));
            }
        }
        let dag = Dag { n, parents };
        if dag.try_topological_order().is_none() {
            return Err(Error::Cyclic);
        }
        Ok(dag)
    }

    pub fn empty(n: usize) -> Self {
        assert!((1..=MAX_NODES).contains(&n));
        Dag { n, parents: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![Vec::new(); n.min(MAX_NODES + 1)];
        for &(from, to) in edges {
            if to >= parents.len() {
                return Err(Error::invalid(format!("edge {from}->{to} out of range")));
            }
            parents[to].push(from);
        }
        Dag::new(n, parents)
    }

    /// Builds a DAG from per-node parent bitmasks.
    pub fn from_parent_masks(masks: &[u32]) -> Result<Self> {
        Dag::new(masks.len(), masks.iter().map(|&m| table::vars_of(m)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn parent_mask(&self, node: usize) -> u32 {
        table::mask_of(&self.parents[node])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    /// Edges `(from, to)` sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = (0..self.n).flat_map(|to| self.parents[to].iter().map(move |&from| (from, to))).collect();
        e.sort_unstable();
        e
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Number of free parameters: `sum_i 2^{|Pa(i)|}`.
    pub fn dimension(&self) -> usize {
        self.parents.iter().map(|p| 1usize << p.len()).sum()
    }

    pub fn with_edge(&self, from: usize, to: usize) -> Result<Dag> {
        let mut parents = self.parents.clone();
        parents[to].push(from);
        Dag::new(self.n, parents)
    }

    pub fn without_edge(&self, from: usize, to: usize) -> Dag {
        let mut parents = self.parents.clone();
        parents[to].retain(|&p| p != from);
        Dag { n: self.n, parents }
    }

    /// Kahn's algorithm, smallest available node first.
    fn try_topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut order = Vec::with_capacity(self.n);
        let mut placed = vec![false; self.n];
        while order.len() < self.n {
            let next = (0..self.n).find(|&v| !placed[v] && indegree[v] == 0)?;
            placed[next] = true;
            order.push(next);
            for (deg, pa) in indegree.iter_mut().zip(&self.parents) {
                if pa.contains(&next) {
                    *deg -= 1;
                }
            }
        }
        Some(order)
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.try_topological_order().expect("Dag invariant: acyclic")
    }

    /// Compact edge list such as `0>1 0>2 1>3`; the empty graph is `-`.
    pub fn label(&self) -> String {
        let edges = self.edges();
        if edges.is_empty() {
            return "-".to_string();
        }
        edges.iter().map(|(a, b)| format!("{a}>{b}")).collect::<Vec<_>>().join(" ")
    }

    /// Parses the output of [`Dag::label`] (also accepts commas as separators).
    pub fn parse_label(n: usize, label: &str) -> Result<Dag> {
        let label = label.trim();
        let mut edges = Vec::new();
        if !(label.is_empty() || label == "-") {
            for tok in label.split(|c: char| c == ',' || c.is_whitespace()) {
                if tok.is_empty() {
                    continue;
                }
                let (a, b) = tok.split_once('>').ok_or_else(|| Error::invalid(format!("bad edge token `{tok}`")))?;
                let a = a.trim_end_matches('-');
                let parse =
                    |s: &str| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad edge token `{tok}`")));
                edges.push((parse(a)?, parse(b)?));
            }
        }
        Dag::from_edges(n, &edges)
    }
}

/// Per-node conditional tables: `theta[i][pa] = P(X_i = 1 | Pa(i) = pa)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parametrization(Vec<Vec<f64>>);

impl Parametrization {
    pub fn new(tables: Vec<Vec<f64>>) -> Self {
        Parametrization(tables)
    }

    /// Every entry set to `value`, shaped for `dag`.
    pub fn constant(dag: &Dag, value: f64) -> Self {
        Parametrization((0..dag.n()).map(|i| vec![value; 1 << dag.parents(i).len()]).collect())
    }

    pub fn table(&self, node: usize) -> &[f64] {
        &self.0[node]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn tables_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flatten().copied()
    }
}

/// A DAG together with its conditional tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesNet {
    dag: Dag,
    theta: Parametrization,
    strict: bool,
}

impl BayesNet {
    /// Validates table shapes and ranges. With `strict`, every entry must lie
    /// in `[STRICT_EPSILON, 1 - STRICT_EPSILON]`.
    pub fn new(dag: Dag, theta: Parametrization, strict: bool) -> Result<Self> {
        if theta.0.len() != dag.n() {
            return Err(Error::invalid("one conditional table per node required"));
        }
        let (lo, hi) = if strict { (STRICT_EPSILON, 1.0 - STRICT_EPSILON) } else { (0.0, 1.0) };
        for (i, t) in theta.0.iter().enumerate() {
            let want = 1usize << dag.parents(i).len();
            if t.len() != want {
                return Err(Error::invalid(format!("node {i}: table has {} entries, expected {want}", t.len())));
            }
            if let Some(bad) = t.iter().find(|&&v| !(lo..=hi).contains(&v)) {
                return Err(Error::invalid(format!("node {i}: entry {bad} outside [{lo}, {hi}]")));
            }
        }
        Ok(BayesNet { dag, theta, strict })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn theta(&self) -> &Parametrization {
        &self.theta
    }

    pub fn n(&self) -> usize {
        self.dag.n()
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    /// `min_{i,pa} min(theta, 1 - theta)`.
    pub fn gamma(&self) -> f64 {
        self.theta.entries().map(|t| t.min(1.0 - t)).fold(f64::INFINITY, f64::min)
    }

    /// Product of the conditional factors for every joint state.
    pub fn joint_distribution(&self) -> JointDistribution {
        let n = self.n();
        let probs = (0..1usize << n)
            .map(|state| {
                (0..n)
                    .map(|i| {
                        let t = self.theta.0[i][gather(state, self.dag.parents(i))];
                        if (state >> i) & 1 == 1 {
                            t
                        } else {
                            1.0 - t
                        }
                    })
                    .product()
            })
            .collect();
        JointDistribution { n, probs }
    }

    /// Draws one joint state, sampling nodes in topological order.
    pub fn draw<R: Rng + ?Sized>(&self, order: &[usize], rng: &mut R) -> usize {
        let mut state = 0usize;
        for &i in order {
            let t = self.theta.0[i][gather(state, self.dag.parents(i))];
            if rng.random::<f64>() < t {
                state |= 1 << i;
            }
        }
        state
    }
}

/// Draws `n_samples` states by ancestral sampling, returning the raw draws.
pub fn ancestral_draws(net: &BayesNet, n_samples: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = net.dag().topological_order();
    (0..n_samples).map(|_| net.draw(&order, &mut rng)).collect()
}

/// Ancestral sampling of an `n_samples` dataset, reduced to state counts.
pub fn ancestral_sample(net: &BayesNet, n_samples: u64, seed: u64) -> Result<SampleCounts> {
    if n_samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut counts = vec![0u64; 1 << net.n()];
    for s in ancestral_draws(net, n_samples as usize, seed) {
        counts[s] += 1;
    }
    SampleCounts::new(net.n(), counts)
}

/// Dense probability vector over all `2^n` joint states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Validates nonnegativity and normalization (within 1e-12).
    pub fn new(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(Error::Capacity(format!("1..={MAX_NODES} nodes supported")));
        }
        if probs.len() != 1 << n {
            return Err(Error::invalid(format!("expected {} probabilities, got {}", 1usize << n, probs.len())));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(JointDistribution { n, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("weights must have positive finite mass"));
        }
        JointDistribution::new(n, normalized(weights, total))
    }

    pub fn uniform(n: usize) -> Self {
        let m = 1usize << n;
        JointDistribution { n, probs: vec![1.0 / m as f64; m] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.min_prob() > 0.0
    }

    /// `(1 - lambda) self + lambda other`.
    pub fn mix(&self, other: &JointDistribution, lambda: f64) -> Result<JointDistribution> {
        if other.n != self.n {
            return Err(Error::invalid("mixing distributions of different size"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let w = self.probs.iter().zip(&other.probs).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        JointDistribution::from_weights(self.n, w)
    }

    /// Marginal (or conditional, when `given` is nonempty) distribution over
    /// `targets`. The result's node `k` is `targets[k]`; `given` pairs a node
    /// with its observed value.
    pub fn marginal_conditional(&self, targets: &[usize], given: &[(usize, bool)]) -> Result<JointDistribution> {
        if targets.is_empty() {
            return Err(Error::invalid("at least one target node required"));
        }
        let tmask = table::mask_of(targets);
        if tmask.count_ones() as usize != targets.len() {
            return Err(Error::invalid("duplicate target nodes"));
        }
        if targets.iter().chain(given.iter().map(|(v, _)| v)).any(|&v| v >= self.n) {
            return Err(Error::invalid("node index out of range"));
        }
        if given.iter().any(|(v, _)| tmask & (1 << v) != 0) {
            return Err(Error::invalid("target and given nodes overlap"));
        }
        let mut out = vec![0.0; 1 << targets.len()];
        for (state, &p) in self.probs.iter().enumerate() {
            if given.iter().all(|&(v, val)| ((state >> v) & 1 == 1) == val) {
                out[gather(state, targets)] += p;
            }
        }
        let mass: f64 = out.iter().sum();
        if mass <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(JointDistribution { n: targets.len(), probs: normalized(out, mass) })
    }

    /// Samples an `n_samples` dataset as a multinomial count vector using
    /// sequential conditional binomial draws.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n_samples: u64, rng: &mut R) -> SampleCounts {
        let m = self.probs.len();
        let mut counts = vec![0u64; m];
        let mut remaining = n_samples;
        let suffix: Vec<f64> = {
            let mut s = vec![0.0; m + 1];
            for k in (0..m).rev() {
                s[k] = s[k + 1] + self.probs[k];
            }
            s
        };
        for k in 0..m {
            if remaining == 0 {
                break;
            }
            if k == m - 1 {
                counts[k] = remaining;
                break;
            }
            let p = if suffix[k] > 0.0 { (self.probs[k] / suffix[k]).clamp(0.0, 1.0) } else { 0.0 };
            let c = if p >= 1.0 {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, p).expect("binomial parameters validated").sample(rng)
            };
            counts[k] = c;
            remaining -= c;
        }
        SampleCounts { n: self.n, counts, total: n_samples }
    }
}

fn normalized(mut w: Vec<f64>, total: f64) -> Vec<f64> {
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Occurrence counts per joint state; the sufficient statistic for every score.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleCounts {
    n: usize,
    counts: Vec<u64>,
    total: u64,
}

impl SampleCounts {
    pub fn new(n: usize, counts: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_NODES || counts.len() != 1 << n {
            return Err(Error::invalid("count vector must have 2^n entries"));
        }
        let total = counts.iter().sum();
        Ok(SampleCounts { n, counts, total })
    }

    pub fn from_states(n: usize, states: &[usize]) -> Result<Self> {
        let mut counts = vec![0u64; 1 << n];
        for &s in states {
            *counts.get_mut(s).ok_or_else(|| Error::invalid(format!("state {s} out of range")))? += 1;
        }
        SampleCounts::new(n, counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of samples `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// The sample distribution `counts / N`.
    pub fn empirical(&self) -> Result<JointDistribution> {
        if self.total == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        JointDistribution::from_weights(self.n, self.as_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(theta: f64) -> BayesNet {
        BayesNet::new(Dag::empty(1), Parametrization::new(vec![vec![theta]]), false).unwrap()
    }

    #[test]
    fn single_node_joint() {
        let p = single(0.1).joint_distribution();
        assert!((p.prob(0) - 0.9).abs() < 1e-15);
        assert!((p.prob(1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        assert!((single(0.8).gamma() - 0.2).abs() < 1e-15);
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let half = BayesNet::new(dag.clone(), Parametrization::constant(&dag, 0.5), true).unwrap();
        assert_eq!(half.gamma(), 0.5);
    }

    #[test]
    fn rejects_cycles_and_self_loops() {
        assert!(matches!(Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]), Err(Error::Cyclic)));
        assert!(Dag::from_edges(2, &[(1, 1)]).is_err());
        assert!(Dag::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn strict_flag_rejects_boundary_entries() {
        let dag = Dag::empty(1);
        assert!(BayesNet::new(dag.clone(), Parametrization::new(vec![vec![0.0]]), true).is_err());
        assert!(BayesNet::new(dag.clone(), Parametrization::new(vec![vec![0.0]]), false).is_ok());
        assert!(BayesNet::new(dag, Parametrization::new(vec![vec![0.5, 0.5]]), false).is_err());
    }

    #[test]
    fn deterministic_net_puts_all_mass_on_one_state() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = BayesNet::new(dag, Parametrization::new(vec![vec![1.0], vec![1.0, 0.0]]), false).unwrap();
        let c = ancestral_sample(&net, 500, 3).unwrap();
        assert_eq!(c.counts(), &[0, 500, 0, 0]);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let net = single(0.3);
        assert_eq!(ancestral_sample(&net, 1000, 42).unwrap(), ancestral_sample(&net, 1000, 42).unwrap());
    }

    #[test]
    fn single_node_frequency_within_five_sigma() {
        let c = ancestral_sample(&single(0.1), 1_000_000, 11).unwrap();
        let f = c.counts()[1] as f64 / 1e6;
        assert!((f - 0.1).abs() < 0.003, "{f}");
    }

    #[test]
    fn marginal_conditional_identity_and_errors() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = BayesNet::new(dag, Parametrization::new(vec![vec![0.0], vec![0.2, 0.7]]), false).unwrap();
        let p = net.joint_distribution();
        assert_eq!(p.marginal_conditional(&[0, 1], &[]).unwrap(), p);
        assert!(matches!(p.marginal_conditional(&[1], &[(0, true)]), Err(Error::ZeroProbability)));
        assert!(p.marginal_conditional(&[1], &[(1, true)]).is_err());
        let c = p.marginal_conditional(&[1], &[(0, false)]).unwrap();
        assert!((c.prob(1) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn multinomial_counts_sum_to_n() {
        let p = JointDistribution::from_weights(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1, 7, 1000] {
            assert_eq!(p.sample_counts(n, &mut rng).total(), n);
            assert_eq!(p.sample_counts(n, &mut rng).counts().iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn label_round_trip() {
        let g = Dag::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(g.label(), "0>1 0>2 1>3 2>3");
        assert_eq!(Dag::parse_label(4, &g.label()).unwrap(), g);
        assert_eq!(Dag::parse_label(4, "-").unwrap(), Dag::empty(4));
        assert_eq!(Dag::parse_label(4, "0->1, 0->2,1->3 2->3").unwrap(), g);
    }
}
