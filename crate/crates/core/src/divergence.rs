//! Entropies, mutual information and the divergences between a distribution
//! and the family of distributions a DAG can represent.
//!
//! Everything is measured in bits.

use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::bn::{BayesNet, Dag, JointDistribution, Parametrization};
use crate::optim::{self, BfgsOptions};
use crate::table::{self, gather, mask_of};
use crate::{par, Error, Result};

/// Multiply a value in bits by this to get nats.
pub const NATS_PER_BIT: f64 = LN_2;

/// Largest network for which information content is computed.
pub const MAX_IC_NODES: usize = 6;

/// A nonnegative information quantity in bits.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct InfoQuantity(f64);

impl InfoQuantity {
    /// Clamps round-off negatives to zero.
    pub fn from_bits(bits: f64) -> Self {
        debug_assert!(bits > -1e-9 || bits.is_nan(), "negative information {bits}");
        InfoQuantity(bits.max(0.0))
    }

    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn nats(self) -> f64 {
        self.0 * NATS_PER_BIT
    }
}

fn check_vars(n: usize, sets: &[&[usize]]) -> Result<()> {
    let mut seen = 0u32;
    for set in sets {
        for &v in *set {
            if v >= n {
                return Err(Error::invalid(format!("node {v} out of range")));
            }
            if seen & (1 << v) != 0 {
                return Err(Error::invalid("variable sets must be disjoint"));
            }
            seen |= 1 << v;
        }
    }
    Ok(())
}

/// `H(vars | given)`.
pub fn entropy(p: &JointDistribution, vars: &[usize], given: &[usize]) -> Result<InfoQuantity> {
    if vars.is_empty() {
        return Err(Error::invalid("entropy of an empty variable set"));
    }
    check_vars(p.n(), &[vars, given])?;
    Ok(InfoQuantity::from_bits(table::cond_entropy_mask(p.probs(), mask_of(vars), mask_of(given))))
}

/// `I(a; b | given)`.
pub fn mutual_information(p: &JointDistribution, a: &[usize], b: &[usize], given: &[usize]) -> Result<InfoQuantity> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("mutual information needs nonempty sets"));
    }
    check_vars(p.n(), &[a, b, given])?;
    Ok(InfoQuantity::from_bits(cmi_mask(p.probs(), mask_of(a), mask_of(b), mask_of(given))))
}

/// Symmetric in `a` and `b` bit for bit.
pub(crate) fn cmi_mask(probs: &[f64], a: u32, b: u32, c: u32) -> f64 {
    let h = |m| table::entropy_mask(probs, m);
    (h(a | c) + h(b | c)) - h(a | b | c) - h(c)
}

/// `D(p || q) = sum p log2 (p / q)`.
pub fn relative_entropy(p: &JointDistribution, q: &JointDistribution) -> Result<InfoQuantity> {
    if p.n() != q.n() {
        return Err(Error::invalid("distributions over different state spaces"));
    }
    let mut acc = 0.0;
    for (state, (&a, &b)) in p.probs().iter().zip(q.probs()).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation { state });
            }
            acc += a * (a / b).log2();
        }
    }
    Ok(InfoQuantity::from_bits(acc))
}

/// `D(P || G)` as a sum of conditional mutual informations along a
/// topological order of `g`: each node against its non-parent predecessors,
/// given its parents.
pub fn kl_to_graph(p: &JointDistribution, g: &Dag) -> Result<InfoQuantity> {
    if p.n() != g.n() {
        return Err(Error::invalid("graph and distribution sizes differ"));
    }
    let mut before = 0u32;
    let mut total = 0.0;
    for v in g.topological_order() {
        let pa = g.parent_mask(v);
        let rest = before & !pa;
        if rest != 0 {
            total += cmi_mask(p.probs(), 1 << v, rest, pa);
        }
        before |= 1 << v;
    }
    Ok(InfoQuantity::from_bits(total))
}

/// `D(P || G)` computed as `D(p || m_projection(p, g))`.
pub fn kl_to_graph_via_projection(p: &JointDistribution, g: &Dag) -> Result<InfoQuantity> {
    relative_entropy(p, &m_projection(p, g)?)
}

/// Node conditionals of `p` arranged as tables for `g`.
pub fn projection_parameters(p: &JointDistribution, g: &Dag) -> Result<Parametrization> {
    if p.n() != g.n() {
        return Err(Error::invalid("graph and distribution sizes differ"));
    }
    let mut tables = Vec::with_capacity(g.n());
    for i in 0..g.n() {
        let pa = g.parents(i);
        let mut ones = vec![0.0; 1 << pa.len()];
        let mut mass = vec![0.0; 1 << pa.len()];
        for (state, &w) in p.probs().iter().enumerate() {
            let k = gather(state, pa);
            mass[k] += w;
            if (state >> i) & 1 == 1 {
                ones[k] += w;
            }
        }
        if mass.iter().any(|&m| m <= 0.0) {
            return Err(Error::ZeroProbability);
        }
        tables.push(ones.iter().zip(&mass).map(|(o, m)| (o / m).clamp(0.0, 1.0)).collect());
    }
    Ok(Parametrization::new(tables))
}

/// The distribution of `<g, theta>` with theta copied from `p`'s conditionals.
pub fn m_projection(p: &JointDistribution, g: &Dag) -> Result<JointDistribution> {
    let theta = projection_parameters(p, g)?;
    Ok(BayesNet::new(g.clone(), theta, false)?.joint_distribution())
}

/// Settings for [`graph_to_kl_with`].
#[derive(Clone, Copy, Debug)]
pub struct IProjectionOptions {
    pub restarts: usize,
    pub seed: u64,
    pub bfgs: BfgsOptions,
}

impl Default for IProjectionOptions {
    fn default() -> Self {
        IProjectionOptions { restarts: 20, seed: 0x5eed_1b0b, bfgs: BfgsOptions::default() }
    }
}

/// Result of minimizing `D(Q || p)` over the distributions of a DAG.
#[derive(Clone, Debug)]
pub struct IProjection {
    pub divergence: InfoQuantity,
    pub theta: Parametrization,
    pub distribution: JointDistribution,
}

/// `D(Q_theta || p)` as a function of the logits of the table entries of `g`.
pub struct IProjectionObjective<'a> {
    dag: &'a Dag,
    log_p: Vec<f64>,
    /// `entry[state * n + i]` = flat index of the table entry used by node `i`.
    entry: Vec<usize>,
    offsets: Vec<usize>,
}

impl<'a> IProjectionObjective<'a> {
    pub fn new(dag: &'a Dag, p: &JointDistribution) -> Result<Self> {
        if !p.is_strictly_positive() {
            return Err(Error::invalid("I-projection needs a strictly positive target"));
        }
        if p.n() != dag.n() {
            return Err(Error::invalid("graph and distribution sizes differ"));
        }
        let n = dag.n();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (1 << dag.parents(i).len()));
        }
        let mut entry = Vec::with_capacity(n << n);
        for state in 0..1usize << n {
            for (i, &off) in offsets[..n].iter().enumerate() {
                entry.push(off + gather(state, dag.parents(i)));
            }
        }
        Ok(IProjectionObjective { dag, log_p: p.probs().iter().map(|x| x.log2()).collect(), entry, offsets })
    }

    pub fn dimension(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn theta(&self, z: &[f64]) -> Parametrization {
        Parametrization::new(
            (0..self.dag.n())
                .map(|i| z[self.offsets[i]..self.offsets[i + 1]].iter().map(|&v| sigmoid(v)).collect())
                .collect(),
        )
    }

    pub fn logits(&self, theta: &Parametrization) -> Vec<f64> {
        theta
            .entries()
            .map(|t| {
                let t = t.clamp(1e-12, 1.0 - 1e-12);
                (t / (1.0 - t)).ln()
            })
            .collect()
    }

    /// Objective value in bits; writes the gradient with respect to `z`.
    pub fn value_and_gradient(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.dag.n();
        let theta: Vec<f64> = z.iter().map(|&v| sigmoid(v)).collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for (state, &log_p) in self.log_p.iter().enumerate() {
            let entries = &self.entry[state * n..(state + 1) * n];
            let mut log_q = 0.0;
            for (i, &k) in entries.iter().enumerate() {
                let ln_factor = if (state >> i) & 1 == 1 { ln_sigmoid(z[k]) } else { ln_sigmoid(-z[k]) };
                log_q += ln_factor / LN_2;
            }
            let q = log_q.exp2();
            if q == 0.0 {
                continue;
            }
            let term = q * (log_q - log_p);
            value += term;
            for (i, &k) in entries.iter().enumerate() {
                let bit = ((state >> i) & 1) as f64;
                grad[k] += term * (bit - theta[k]);
            }
        }
        value
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln sigmoid(z)`, stable for large `|z|`.
fn ln_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// `D(G || P) = inf_{Q in M(G)} D(Q || P)` by quasi-Newton descent on the
/// logits of `g`'s tables, started from the M-projection and from random points.
pub fn graph_to_kl(g: &Dag, p: &JointDistribution) -> Result<IProjection> {
    graph_to_kl_with(g, p, IProjectionOptions::default())
}

pub fn graph_to_kl_with(g: &Dag, p: &JointDistribution, opts: IProjectionOptions) -> Result<IProjection> {
    let objective = IProjectionObjective::new(g, p)?;
    let dim = objective.dimension();
    let mut starts = vec![objective.logits(&projection_parameters(p, g)?)];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let normal = Normal::new(0.0, 1.5).expect("valid normal");
    for _ in 0..opts.restarts {
        starts.push((0..dim).map(|_| normal.sample(&mut rng)).collect());
    }

    let runs = par::map_indexed(starts.len(), |k| {
        optim::minimize(|z, grad| objective.value_and_gradient(z, grad), &starts[k], opts.bfgs)
    });
    let best = runs.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("at least one start");
    if !runs.iter().any(|r| r.converged) {
        return Err(Error::NotConverged { iterations: opts.bfgs.max_iterations, best: best.value });
    }
    let theta = objective.theta(&best.x);
    let distribution = BayesNet::new(g.clone(), theta.clone(), false)?.joint_distribution();
    Ok(IProjection { divergence: InfoQuantity::from_bits(best.value), theta, distribution })
}

/// `min_S I(X_i; X_j | S)` over subsets `S` of the remaining nodes.
pub fn information_content(net: &BayesNet, i: usize, j: usize) -> Result<InfoQuantity> {
    let n = net.n();
    if n > MAX_IC_NODES {
        return Err(Error::Capacity(format!(
            "information content enumerates subsets for at most {MAX_IC_NODES} nodes"
        )));
    }
    if !(net.dag().has_edge(i, j) || net.dag().has_edge(j, i)) {
        return Err(Error::invalid(format!("({i}, {j}) is not an edge")));
    }
    let p = net.joint_distribution();
    Ok(InfoQuantity::from_bits(ic_of(p.probs(), n, i, j)))
}

fn ic_of(probs: &[f64], n: usize, i: usize, j: usize) -> f64 {
    let others: Vec<usize> = (0..n).filter(|&v| v != i && v != j).collect();
    (0u32..1 << others.len())
        .map(|sub| {
            let s =
                others.iter().enumerate().filter(|(k, _)| sub & (1 << k) != 0).fold(0u32, |m, (_, &v)| m | (1 << v));
            cmi_mask(probs, 1 << i, 1 << j, s)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum of [`information_content`] over the edges of the network.
pub fn network_ic(net: &BayesNet) -> Result<InfoQuantity> {
    let edges = net.dag().edges();
    if edges.is_empty() {
        return Err(Error::invalid("information content of a network without edges"));
    }
    let mut best = f64::INFINITY;
    for (a, b) in edges {
        best = best.min(information_content(net, a, b)?.bits());
    }
    Ok(InfoQuantity::from_bits(best))
}

/// `I(X_from; X_to | Pa(to) \ {from})` evaluated under `p`, the ideal
/// likelihood loss per sample when the edge is removed from `g`.
pub fn edge_strength(p: &JointDistribution, g: &Dag, from: usize, to: usize) -> f64 {
    let rest = g.parent_mask(to) & !(1 << from);
    cmi_mask(p.probs(), 1 << from, 1 << to, rest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::complete_dag;

    fn bern(p1: f64) -> JointDistribution {
        JointDistribution::new(1, vec![1.0 - p1, p1]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&bern(0.5), &[0], &[]).unwrap().bits() - 1.0).abs() < 1e-15);
        assert_eq!(entropy(&bern(1.0), &[0], &[]).unwrap().bits(), 0.0);
        // -0.1 log2 0.1 - 0.9 log2 0.9
        assert!((entropy(&bern(0.1), &[0], &[]).unwrap().bits() - 0.468_995_593_589_281).abs() < 1e-12);
        assert!(entropy(&bern(0.1), &[], &[]).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let d = relative_entropy(&bern(0.5), &bern(0.25)).unwrap().bits();
        let oracle = 0.5 * 2f64.log2() + 0.5 * (2.0f64 / 3.0).log2();
        assert!((d - oracle).abs() < 1e-15);
        assert!((d - 0.207_518_749_639_422).abs() < 1e-12);
        assert_eq!(relative_entropy(&bern(0.3), &bern(0.3)).unwrap().bits(), 0.0);
        assert!(matches!(relative_entropy(&bern(0.3), &bern(0.0)), Err(Error::SupportViolation { state: 1 })));
    }

    #[test]
    fn copy_channel_information() {
        let eps = 1e-9;
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = BayesNet::new(dag, Parametrization::new(vec![vec![0.3], vec![eps, 1.0 - eps]]), true).unwrap();
        let p = net.joint_distribution();
        let mi = mutual_information(&p, &[0], &[1], &[]).unwrap().bits();
        // direct summation of p log2 p / (p_a p_b)
        let pa = p.marginal_conditional(&[0], &[]).unwrap();
        let pb = p.marginal_conditional(&[1], &[]).unwrap();
        let direct: f64 = (0..4)
            .map(|s| {
                let w = p.prob(s);
                if w > 0.0 {
                    w * (w / (pa.prob(s & 1) * pb.prob(s >> 1))).log2()
                } else {
                    0.0
                }
            })
            .sum();
        assert!((mi - direct).abs() < 1e-9);
        let h = entropy(&p, &[0], &[]).unwrap().bits();
        assert!((mi - h).abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let p = JointDistribution::from_weights(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let full = complete_dag(&[0, 1]).unwrap();
        let proj = m_projection(&p, &full).unwrap();
        for s in 0..4 {
            assert!((proj.prob(s) - p.prob(s)).abs() < 1e-15);
        }
        let empty = m_projection(&p, &Dag::empty(2)).unwrap();
        // marginals 0.6 / 0.4 for x0 and 0.3 / 0.7 for x1
        assert!((empty.prob(0) - 0.4 * 0.3).abs() < 1e-15);
        assert!((empty.prob(3) - 0.6 * 0.7).abs() < 1e-15);
        let again = m_projection(&empty, &Dag::empty(2)).unwrap();
        for s in 0..4 {
            assert!((again.prob(s) - empty.prob(s)).abs() < 1e-15);
        }
    }

    #[test]
    fn ic_of_two_node_net_is_mutual_information() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = BayesNet::new(dag, Parametrization::new(vec![vec![0.4], vec![0.2, 0.7]]), true).unwrap();
        let p = net.joint_distribution();
        let mi = mutual_information(&p, &[0], &[1], &[]).unwrap();
        assert_eq!(information_content(&net, 0, 1).unwrap(), mi);
        assert!(information_content(&net, 1, 1).is_err());
    }

    #[test]
    fn ic_zero_for_independent_edge() {
        let dag = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let net = BayesNet::new(dag, Parametrization::new(vec![vec![0.4], vec![0.3, 0.3]]), true).unwrap();
        assert!(network_ic(&net).unwrap().bits() < 1e-15);
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let p = JointDistribution::from_weights(3, vec![1.0, 2.0, 3.0, 1.5, 0.5, 2.5, 1.0, 3.0]).unwrap();
        let g = Dag::from_edges(3, &[(0, 2)]).unwrap();
        let obj = IProjectionObjective::new(&g, &p).unwrap();
        let z = vec![0.3, -0.7, 0.2, 1.1];
        let mut grad = vec![0.0; 4];
        obj.value_and_gradient(&z, &mut grad);
        let h = 1e-6;
        let mut tmp = vec![0.0; 4];
        for k in 0..4 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[k] += h;
            zm[k] -= h;
            let fd = (obj.value_and_gradient(&zp, &mut tmp) - obj.value_and_gradient(&zm, &mut tmp)) / (2.0 * h);
            assert!((fd - grad[k]).abs() <= 1e-4 * fd.abs().max(1e-8), "{k}: {fd} vs {}", grad[k]);
        }
    }
}
