//! Proposal distributions for importance sampling.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bn::{BayesNet, Dag, JointDistribution};
use crate::divergence::{graph_to_kl, m_projection};
use crate::optim::{self, BfgsOptions};
use crate::scoring::PenaltyFunction;
use crate::{Error, Result};

use super::{block_rng, PairScorer};

/// A recipe for one proposal. Interpolating kinds produce the single
/// distribution `(1 - lambda) P* + lambda T` for the named target `T`; the
/// rival graph is the one whose error probability is being estimated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProposalSpec {
    InterpolateToUniform {
        lambda: f64,
    },
    /// `T` = M-projection of `P*` onto the rival graph.
    InterpolateToTargetProjection {
        lambda: f64,
    },
    /// `T` = the member of the rival graph's family closest to `P*` in `D(T || P*)`.
    InterpolateToIProjection {
        lambda: f64,
    },
    ExplicitNet {
        net: BayesNet,
        lambda: f64,
    },
    /// Distributions closest to `P*` (in `D(Q || P*)`) on which the rival's
    /// ideal score reaches the true graph's, each found from a seeded random
    /// start. Datasets are drawn from the `points` distributions in turn.
    DominatingPoint {
        start: u64,
        #[serde(default = "one")]
        points: usize,
    },
}

impl ProposalSpec {
    pub fn label(&self) -> String {
        match self {
            ProposalSpec::InterpolateToUniform { lambda } => format!("uniform@{lambda}"),
            ProposalSpec::InterpolateToTargetProjection { lambda } => format!("m-proj@{lambda}"),
            ProposalSpec::InterpolateToIProjection { lambda } => format!("i-proj@{lambda}"),
            ProposalSpec::ExplicitNet { lambda, .. } => format!("net@{lambda}"),
            ProposalSpec::DominatingPoint { start, points } => format!("dominating#{start}x{points}"),
        }
    }
}

fn one() -> usize {
    1
}

/// Dominating points per proposal in the default grid.
pub const DEFAULT_POINTS: usize = 10;

/// `P*` itself as a defensive component followed by `count - 1` dominating-point
/// mixtures of [`DEFAULT_POINTS`] points each.
pub fn default_proposals(count: usize) -> Vec<ProposalSpec> {
    let mut v = vec![ProposalSpec::InterpolateToUniform { lambda: 0.0 }];
    v.extend((1..count as u64).map(|start| ProposalSpec::DominatingPoint { start, points: DEFAULT_POINTS }));
    v
}

/// Builds the component distributions of a proposal; all must be strictly positive.
pub fn resolve_proposal(
    spec: &ProposalSpec,
    net_star: &BayesNet,
    g_star: &Dag,
    g: &Dag,
    n_samples: u64,
    psi: &PenaltyFunction,
) -> Result<Vec<JointDistribution>> {
    let p_star = net_star.joint_distribution();
    let single = |q: Result<JointDistribution>| q.map(|q| vec![q]);
    let qs = match spec {
        ProposalSpec::InterpolateToUniform { lambda } => {
            single(p_star.mix(&JointDistribution::uniform(p_star.n()), *lambda))?
        }
        ProposalSpec::InterpolateToTargetProjection { lambda } => {
            single(p_star.mix(&m_projection(&p_star, g)?, *lambda))?
        }
        ProposalSpec::InterpolateToIProjection { lambda } => {
            single(p_star.mix(&graph_to_kl(g, &p_star)?.distribution, *lambda))?
        }
        ProposalSpec::ExplicitNet { net, lambda } => {
            let net = BayesNet::new(net.dag().clone(), net.theta().clone(), net.is_strict())?;
            single(p_star.mix(&net.joint_distribution(), *lambda))?
        }
        ProposalSpec::DominatingPoint { start, points } => {
            if *points == 0 {
                return Err(Error::invalid("a dominating-point proposal needs at least one point"));
            }
            let scorer = PairScorer::new(g_star, g, psi, n_samples)?;
            crate::par::map_indexed(*points, |j| dominating_point(&p_star, &scorer, n_samples, *start, j as u64))
                .into_iter()
                .collect::<Result<Vec<_>>>()?
        }
    };
    if !qs.iter().all(JointDistribution::is_strictly_positive) {
        return Err(Error::invalid(format!("proposal {} is not strictly positive", spec.label())));
    }
    Ok(qs)
}

const START_SPREAD: f64 = 0.5;
const PENALTY_STAGES: i32 = 7;
const INTERIOR_MIX: f64 = 1e-6;

/// Minimizes `D(Q || P*)` subject to the rival's ideal score under `Q`
/// reaching the true graph's, by a quadratic-penalty continuation over the
/// softmax logits of `Q`. Returns `P*` when the constraint already holds there.
pub fn dominating_point(
    p_star: &JointDistribution,
    scorer: &PairScorer,
    n_samples: u64,
    start: u64,
    point: u64,
) -> Result<JointDistribution> {
    let mut scratch = Vec::new();
    let gap0 = scorer.ideal_gap(p_star.probs(), n_samples, &mut scratch);
    if gap0 >= 0.0 {
        return Ok(p_star.clone());
    }
    let scale = -gap0;
    let m = p_star.probs().len();
    let log_p: Vec<f64> = p_star.probs().iter().map(|p| p.log2()).collect();

    let mut rng = block_rng(start, u64::MAX, point);
    let normal = Normal::new(0.0, START_SPREAD).expect("valid normal");
    let mut z: Vec<f64> = log_p.iter().map(|lp| lp * std::f64::consts::LN_2 + normal.sample(&mut rng)).collect();

    let penalty_rate = scorer.penalty_per_sample(n_samples);
    let mut q = vec![0.0; m];
    let mut h = vec![0.0; m];
    let mut gap_grad = vec![0.0; m];
    let mut truth = vec![0.0; m];
    for stage in 0..PENALTY_STAGES {
        let mu = 10f64.powi(stage) / scale;
        let result = optim::minimize(
            |z, grad| {
                softmax(z, &mut q);
                // d gap / d Q(x) = log2 Q_rival(x) - log2 Q_truth(x)
                gap_grad.fill(0.0);
                truth.fill(0.0);
                scorer.rival().add_log2_projection(&q, &mut gap_grad, &mut scratch);
                scorer.truth().add_log2_projection(&q, &mut truth, &mut scratch);
                let mut gap = -penalty_rate;
                for s in 0..m {
                    gap_grad[s] -= truth[s];
                    gap += q[s] * gap_grad[s];
                }
                let violation = (-gap).max(0.0);
                let mut d = 0.0;
                for s in 0..m {
                    if q[s] > 0.0 {
                        let ratio = q[s].log2() - log_p[s];
                        d += q[s] * ratio;
                        h[s] = ratio - 2.0 * mu * violation * gap_grad[s];
                    } else {
                        h[s] = 0.0;
                    }
                }
                let mean: f64 = (0..m).map(|s| q[s] * h[s]).sum();
                for s in 0..m {
                    grad[s] = q[s] * (h[s] - mean);
                }
                d + mu * violation * violation
            },
            &z,
            BfgsOptions { max_iterations: 2_000, f_tolerance: 1e-14 * scale, g_tolerance: 1e-12 },
        );
        z = result.x;
        softmax(&z, &mut q);
        if scorer.ideal_gap(&q, n_samples, &mut scratch) >= -1e-3 * scale {
            break;
        }
    }
    softmax(&z, &mut q);
    // Cells the optimizer emptied keep a trace of P* so the proposal stays
    // strictly positive.
    for (v, p) in q.iter_mut().zip(p_star.probs()) {
        *v = (1.0 - INTERIOR_MIX) * *v + INTERIOR_MIX * p;
    }
    JointDistribution::from_weights(p_star.n(), q)
}

fn softmax(z: &[f64], out: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - m).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}
