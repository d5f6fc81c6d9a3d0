//! Probabilities that a rival structure outscores the true one.
//!
//! Every estimator works on [`SampleCounts`], the sufficient statistic of the
//! score, so a dataset is drawn directly as a multinomial count vector.
//! Random streams are keyed by `(seed, stream, block)` which makes results
//! independent of how blocks are scheduled across threads.

mod crossover;
mod exact;
mod importance;
mod proposals;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bn::{BayesNet, Dag};
use crate::graphs::markov_equivalent;
use crate::scoring::{scores_tie, select_winner, Candidate, GraphScorer, PenaltyFunction, ScoreReport};
use crate::{par, Error, Result};

pub use crossover::{
    crossover_scan, derive_seed, summarize, validate_pair, CrossoverRow, CrossoverScan, EstimatorSettings, ProposalGrid,
};
pub use exact::{count_vectors, exact_error_prob, exact_outcomes, ExactOutcomes, MAX_COUNT_VECTORS};
pub use importance::{is_error_prob, is_estimate_event, Combine, ProposalDiagnostics};
pub use proposals::{default_proposals, dominating_point, resolve_proposal, ProposalSpec};

/// Effective sample sizes below this are flagged in the output.
pub const MIN_EFFECTIVE_SAMPLE_SIZE: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    ImportanceSampling,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::ImportanceSampling => "importance-sampling",
            Method::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorEstimate {
    pub method: Method,
    /// Samples per dataset.
    pub n_samples: u64,
    /// Datasets drawn per proposal (or in total for plain Monte Carlo).
    pub blocks: u64,
    pub proposals_used: usize,
    pub probability: f64,
    pub log10_probability: f64,
    pub std_error: f64,
    /// `(sum w)^2 / sum w^2` over the weighted hits (importance sampling only).
    pub ess: Option<f64>,
    pub low_ess: bool,
    pub per_proposal: Vec<ProposalDiagnostics>,
}

impl ErrorEstimate {
    fn plain(method: Method, n_samples: u64, blocks: u64, probability: f64, std_error: f64) -> Self {
        ErrorEstimate {
            method,
            n_samples,
            blocks,
            proposals_used: 0,
            probability,
            log10_probability: probability.log10(),
            std_error,
            ess: None,
            low_ess: false,
            per_proposal: Vec::new(),
        }
    }
}

/// How `S_N(g)` compares with `S_N(g_star)` on one dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// `S_N(g_star) < S_N(g)`: a structure error.
    RivalWins,
    Tie,
    TrueWins,
}

/// Scores a fixed pair of graphs on count vectors of a fixed size `N`.
#[derive(Clone, Debug)]
pub struct PairScorer {
    truth: GraphScorer,
    rival: GraphScorer,
    penalty: f64,
}

impl PairScorer {
    pub fn new(g_star: &Dag, g: &Dag, psi: &PenaltyFunction, n_samples: u64) -> Result<Self> {
        if g_star.n() != g.n() {
            return Err(Error::invalid("graphs over different node sets"));
        }
        Ok(PairScorer { truth: GraphScorer::new(g_star), rival: GraphScorer::new(g), penalty: psi.value(n_samples)? })
    }

    pub fn scores(&self, counts: &[f64], scratch: &mut Vec<f64>) -> (f64, f64) {
        let s_true = self.truth.loglik(counts, scratch) - self.truth.dimension() as f64 * self.penalty;
        let s_rival = self.rival.loglik(counts, scratch) - self.rival.dimension() as f64 * self.penalty;
        (s_true, s_rival)
    }

    pub fn outcome(&self, counts: &[f64], scratch: &mut Vec<f64>) -> Outcome {
        let (t, r) = self.scores(counts, scratch);
        if scores_tie(t, r) {
            Outcome::Tie
        } else if r > t {
            Outcome::RivalWins
        } else {
            Outcome::TrueWins
        }
    }

    /// Per-sample ideal score gap `(S(g) - S(g_star)) / N` under a distribution.
    pub(crate) fn ideal_gap(&self, probs: &[f64], n_samples: u64, scratch: &mut Vec<f64>) -> f64 {
        self.rival.loglik(probs, scratch) - self.truth.loglik(probs, scratch) - self.penalty_per_sample(n_samples)
    }

    /// `(|g| - |g_star|) Psi(N) / N`.
    pub(crate) fn penalty_per_sample(&self, n_samples: u64) -> f64 {
        (self.rival.dimension() as f64 - self.truth.dimension() as f64) * self.penalty / n_samples as f64
    }

    pub(crate) fn truth(&self) -> &GraphScorer {
        &self.truth
    }

    pub(crate) fn rival(&self) -> &GraphScorer {
        &self.rival
    }
}

/// Independent generator for `(seed, stream, block)`.
pub fn block_rng(seed: u64, stream: u64, block: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&block.to_le_bytes());
    key[24..].copy_from_slice(b"bnlab-rs");
    ChaCha8Rng::from_seed(key)
}

/// Fraction of `blocks` datasets drawn from `net_star` on which `g` strictly
/// outscores `g_star`.
pub fn mc_error_prob(
    net_star: &BayesNet,
    g_star: &Dag,
    g: &Dag,
    n_samples: u64,
    blocks: u64,
    psi: &PenaltyFunction,
    seed: u64,
) -> Result<ErrorEstimate> {
    let scorer = PairScorer::new(g_star, g, psi, n_samples)?;
    mc_estimate_event(net_star, n_samples, blocks, seed, |c, scratch| scorer.outcome(c, scratch) == Outcome::RivalWins)
}

/// Plain Monte Carlo frequency of an arbitrary event on count vectors.
pub fn mc_estimate_event<F>(
    net_star: &BayesNet,
    n_samples: u64,
    blocks: u64,
    seed: u64,
    event: F,
) -> Result<ErrorEstimate>
where
    F: Fn(&[f64], &mut Vec<f64>) -> bool + Sync + Send,
{
    if blocks == 0 || n_samples == 0 {
        return Err(Error::invalid("need at least one block and one sample"));
    }
    let p = net_star.joint_distribution();
    let hits = count_hits(blocks, |b, scratch| {
        let mut rng = block_rng(seed, 0, b);
        let counts = p.sample_counts(n_samples, &mut rng).as_f64();
        event(&counts, scratch)
    });
    let prob = hits as f64 / blocks as f64;
    let se = (prob * (1.0 - prob) / blocks as f64).sqrt();
    Ok(ErrorEstimate::plain(Method::MonteCarlo, n_samples, blocks, prob, se))
}

const CHUNK: u64 = 1024;

fn count_hits<F>(blocks: u64, f: F) -> u64
where
    F: Fn(u64, &mut Vec<f64>) -> bool + Sync + Send,
{
    let chunks = blocks.div_ceil(CHUNK) as usize;
    par::map_indexed(chunks, |c| {
        let mut scratch = Vec::new();
        let start = c as u64 * CHUNK;
        (start..(start + CHUNK).min(blocks)).filter(|&b| f(b, &mut scratch)).count() as u64
    })
    .into_iter()
    .sum()
}

/// Fraction of datasets on which the exhaustive search does not return a
/// structure equivalent to `g_star`.
pub fn misidentification_prob(
    net_star: &BayesNet,
    g_star: &Dag,
    candidates: &[Candidate],
    n_samples: u64,
    blocks: u64,
    psi: &PenaltyFunction,
    seed: u64,
) -> Result<ErrorEstimate> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate structures"));
    }
    if blocks == 0 || n_samples == 0 {
        return Err(Error::invalid("need at least one block and one sample"));
    }
    let penalty = psi.value(n_samples)?;
    let scorers: Vec<GraphScorer> = candidates.iter().map(|c| GraphScorer::new(&c.dag)).collect();
    let correct: Vec<bool> = candidates.iter().map(|c| markov_equivalent(&c.dag, g_star)).collect();
    let p = net_star.joint_distribution();
    let misses = count_hits(blocks, |b, scratch| {
        let mut rng = block_rng(seed, 0, b);
        let counts = p.sample_counts(n_samples, &mut rng).as_f64();
        let rows: Vec<ScoreReport> = scorers
            .iter()
            .map(|s| {
                let ll = s.loglik(&counts, scratch);
                ScoreReport {
                    graph_id: String::new(),
                    log_likelihood: ll,
                    dimension: s.dimension(),
                    penalty_value: penalty,
                    score: ll - s.dimension() as f64 * penalty,
                }
            })
            .collect();
        !correct[select_winner(&rows)]
    });
    let prob = misses as f64 / blocks as f64;
    let se = (prob * (1.0 - prob) / blocks as f64).sqrt();
    Ok(ErrorEstimate::plain(Method::MonteCarlo, n_samples, blocks, prob, se))
}

/// Writes `N,graph_id,method,probability,log10_probability,std_error,blocks,ess`.
pub fn write_errors_csv<W: Write>(out: W, rows: &[(String, ErrorEstimate)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "graph_id", "method", "probability", "log10_probability", "std_error", "blocks", "ess"])?;
    for (id, e) in rows {
        w.write_record([
            e.n_samples.to_string(),
            id.clone(),
            e.method.as_str().to_string(),
            format!("{:.10e}", e.probability),
            format!("{:.10}", e.log10_probability),
            format!("{:.10e}", e.std_error),
            e.blocks.to_string(),
            e.ess.map(|v| format!("{v:.4}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
