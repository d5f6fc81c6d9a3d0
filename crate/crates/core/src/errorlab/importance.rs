//! Importance-sampling estimates of rare score-ordering events.
//!
//! A proposal is a list of component distributions `Q_c`; its datasets are
//! drawn from the components in turn. A dataset with counts `x` carries the
//! weight `P*^N(x) / q(x)`, accumulated as a base-2 logarithm, where `q` is
//! the allocation-weighted mixture `sum_c (n_c / n) Q_c^N` over all components
//! (balance heuristic) or over the components of the drawing proposal only
//! (equal-weight averaging of per-proposal estimates).

use serde::{Deserialize, Serialize};

use crate::bn::{BayesNet, Dag, JointDistribution};
use crate::scoring::PenaltyFunction;
use crate::stats::log2_sum_exp2;
use crate::{par, Error, Result};

use super::{
    block_rng, resolve_proposal, ErrorEstimate, Method, Outcome, PairScorer, ProposalSpec, MIN_EFFECTIVE_SAMPLE_SIZE,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combine {
    /// Average of the per-proposal estimators, each weighted by `P*/Q_k`.
    EqualWeight,
    /// Weights `P* / mean_k Q_k` for every dataset.
    #[default]
    Balance,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProposalDiagnostics {
    pub label: String,
    pub hits: u64,
    pub ess: f64,
    /// `log10` of this proposal's stratum mean.
    pub log10_estimate: f64,
}

/// `P(S_N(g_star) < S_N(g))` under `net_star`, by importance sampling.
#[allow(clippy::too_many_arguments)]
pub fn is_error_prob(
    net_star: &BayesNet,
    g_star: &Dag,
    g: &Dag,
    n_samples: u64,
    blocks: u64,
    psi: &PenaltyFunction,
    proposals: &[ProposalSpec],
    combine: Combine,
    seed: u64,
) -> Result<ErrorEstimate> {
    let qs = proposals
        .iter()
        .map(|spec| resolve_proposal(spec, net_star, g_star, g, n_samples, psi))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = proposals.iter().map(ProposalSpec::label).collect();
    let scorer = PairScorer::new(g_star, g, psi, n_samples)?;
    let mut est =
        is_estimate_event(&net_star.joint_distribution(), &qs, n_samples, blocks, combine, seed, |c, scratch| {
            scorer.outcome(c, scratch) == Outcome::RivalWins
        })?;
    for (d, l) in est.per_proposal.iter_mut().zip(labels) {
        d.label = l;
    }
    Ok(est)
}

const CHUNK: u64 = 512;

/// Importance-sampling estimate of an arbitrary event on count vectors.
/// `proposals[k]` lists the components of proposal `k`; each proposal draws
/// `blocks` datasets, block `b` from component `b mod len`.
pub fn is_estimate_event<F>(
    p_star: &JointDistribution,
    proposals: &[Vec<JointDistribution>],
    n_samples: u64,
    blocks: u64,
    combine: Combine,
    seed: u64,
    event: F,
) -> Result<ErrorEstimate>
where
    F: Fn(&[f64], &mut Vec<f64>) -> bool + Sync + Send,
{
    if proposals.is_empty() || proposals.iter().any(Vec::is_empty) {
        return Err(Error::invalid("importance sampling needs nonempty proposals"));
    }
    if blocks == 0 || n_samples == 0 {
        return Err(Error::invalid("need at least one block and one sample"));
    }
    for (k, comps) in proposals.iter().enumerate() {
        if comps.iter().any(|q| !q.is_strictly_positive() || q.n() != p_star.n()) {
            return Err(Error::invalid(format!("proposal {k} is not strictly positive over the same states")));
        }
    }
    let log_p: Vec<f64> = p_star.probs().iter().map(|p| p.log2()).collect();

    // Flat component list with log2 allocation fractions.
    struct Component {
        proposal: usize,
        log_q: Vec<f64>,
        /// Blocks drawn from this component.
        draws: u64,
    }
    let mut comps = Vec::new();
    for (k, qs) in proposals.iter().enumerate() {
        let m = qs.len() as u64;
        for (j, q) in qs.iter().enumerate() {
            comps.push(Component {
                proposal: k,
                log_q: q.probs().iter().map(|v| v.log2()).collect(),
                draws: blocks / m + u64::from((j as u64) < blocks % m),
            });
        }
    }
    let total = (blocks * proposals.len() as u64) as f64;
    let log_alloc: Vec<f64> = comps
        .iter()
        .map(|c| match combine {
            Combine::Balance => (c.draws as f64 / total).log2(),
            Combine::EqualWeight => (c.draws as f64 / blocks as f64).log2(),
        })
        .collect();
    let first: Vec<usize> = proposals
        .iter()
        .scan(0, |acc, qs| {
            let f = *acc;
            *acc += qs.len();
            Some(f)
        })
        .collect();

    let chunks_per = blocks.div_ceil(CHUNK);
    let jobs = proposals.len() * chunks_per as usize;
    // Per job: (component index, log2 weight) of every hit.
    let results: Vec<Vec<(usize, f64)>> = par::map_indexed(jobs, |job| {
        let k = job / chunks_per as usize;
        let chunk = job as u64 % chunks_per;
        let m = proposals[k].len() as u64;
        let mut scratch = Vec::new();
        let mut hits = Vec::new();
        let mut terms = Vec::with_capacity(comps.len());
        let start = chunk * CHUNK;
        for b in start..(start + CHUNK).min(blocks) {
            let j = (b % m) as usize;
            let mut rng = block_rng(seed, k as u64 + 1, b);
            let counts = proposals[k][j].sample_counts(n_samples, &mut rng).as_f64();
            if !event(&counts, &mut scratch) {
                continue;
            }
            let range = match combine {
                Combine::Balance => 0..comps.len(),
                Combine::EqualWeight => first[k]..first[k] + m as usize,
            };
            terms.clear();
            terms.extend(range.map(|c| log_alloc[c] + dot(&counts, &comps[c].log_q)));
            hits.push((first[k] + j, dot(&counts, &log_p) - log2_sum_exp2(&terms)));
        }
        hits
    });

    let mut per_comp: Vec<Vec<f64>> = vec![Vec::new(); comps.len()];
    for (c, w) in results.into_iter().flatten() {
        if !w.is_finite() {
            return Err(Error::WeightOverflow { log2_weight: w });
        }
        per_comp[c].push(w);
    }
    let top = per_comp.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);

    // Sums relative to 2^top: per component (s, ss); per proposal hits.
    let k_count = proposals.len();
    let mut prop_s = vec![0.0; k_count];
    let mut prop_ss = vec![0.0; k_count];
    let mut prop_hits = vec![0u64; k_count];
    let mut var_sum = 0.0;
    for (c, ws) in per_comp.iter().enumerate() {
        let s: f64 = ws.iter().map(|w| (w - top).exp2()).sum();
        let ss: f64 = ws.iter().map(|w| (2.0 * (w - top)).exp2()).sum();
        let n = comps[c].draws as f64;
        let var = if n > 1.0 { ((ss - s * s / n) / (n - 1.0)).max(0.0) } else { 0.0 };
        // Stratum contributes (n_c / n_total) * mean_c to the estimate.
        let scale = match combine {
            Combine::Balance => n / total,
            Combine::EqualWeight => n / blocks as f64 / k_count as f64,
        };
        var_sum += scale * scale * var / n.max(1.0);
        let k = comps[c].proposal;
        prop_s[k] += s;
        prop_ss[k] += ss;
        prop_hits[k] += ws.len() as u64;
    }
    let s_all: f64 = prop_s.iter().sum();
    let ss_all: f64 = prop_ss.iter().sum();
    // Balance: sum of all weights / total draws. Equal weight: the same, since
    // every proposal draws `blocks` datasets.
    let mean_rel = s_all / total;
    let (probability, log10_probability, std_error) = if s_all == 0.0 {
        (0.0, f64::NEG_INFINITY, 0.0)
    } else {
        let scale = top.exp2();
        let p = mean_rel * scale;
        if !p.is_finite() {
            return Err(Error::WeightOverflow { log2_weight: top });
        }
        (p, mean_rel.log10() + top * std::f64::consts::LOG10_2, var_sum.sqrt() * scale)
    };
    let diagnostics = (0..k_count)
        .map(|k| ProposalDiagnostics {
            label: String::new(),
            hits: prop_hits[k],
            ess: if prop_ss[k] > 0.0 { prop_s[k] * prop_s[k] / prop_ss[k] } else { 0.0 },
            log10_estimate: (prop_s[k] / blocks as f64).log10() + top * std::f64::consts::LOG10_2,
        })
        .collect();
    let ess = if ss_all > 0.0 { s_all * s_all / ss_all } else { 0.0 };
    Ok(ErrorEstimate {
        method: Method::ImportanceSampling,
        n_samples,
        blocks,
        proposals_used: k_count,
        probability,
        log10_probability,
        std_error,
        ess: Some(ess),
        low_ess: ess < MIN_EFFECTIVE_SAMPLE_SIZE,
        per_proposal: diagnostics,
    })
}

fn dot(counts: &[f64], logs: &[f64]) -> f64 {
    counts.iter().zip(logs).filter(|(c, _)| **c > 0.0).map(|(c, l)| c * l).sum()
}
