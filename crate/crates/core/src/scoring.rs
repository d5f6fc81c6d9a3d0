//! Maximum-likelihood tables, log-likelihood and MDL scores, and exhaustive
//! structure search. Log-likelihoods are in bits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bn::{Dag, JointDistribution, Parametrization, SampleCounts};
use crate::graphs::EquivalenceClass;
use crate::table::{gather, FamilyIndex};
use crate::{Error, Result};

/// The per-parameter penalty `Psi(N)` of an MDL score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PenaltyFunction {
    /// `Psi(N) = log2(N) / 2`.
    Bic,
    Constant {
        value: f64,
    },
    /// Explicit `(N, Psi(N))` pairs; only listed `N` may be queried.
    Table {
        points: Vec<(u64, f64)>,
    },
}

impl PenaltyFunction {
    pub fn value(&self, n: u64) -> Result<f64> {
        match self {
            PenaltyFunction::Bic => Ok(0.5 * (n as f64).log2()),
            PenaltyFunction::Constant { value } => Ok(*value),
            PenaltyFunction::Table { points } => points
                .iter()
                .find(|(k, _)| *k == n)
                .map(|&(_, v)| v)
                .ok_or_else(|| Error::invalid(format!("penalty table has no entry for N = {n}"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PenaltyFunction::Bic => "bic".into(),
            PenaltyFunction::Constant { value } => format!("constant({value})"),
            PenaltyFunction::Table { .. } => "table".into(),
        }
    }
}

/// One candidate's score. `score = log_likelihood - dimension * penalty_value`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    pub graph_id: String,
    pub log_likelihood: f64,
    pub dimension: usize,
    pub penalty_value: f64,
    pub score: f64,
}

impl ScoreReport {
    fn new(graph_id: String, log_likelihood: f64, dimension: usize, penalty_value: f64) -> Self {
        ScoreReport {
            graph_id,
            log_likelihood,
            dimension,
            penalty_value,
            score: log_likelihood - dimension as f64 * penalty_value,
        }
    }
}

/// True when two scores are equal up to floating-point round-off.
pub fn scores_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9_f64.max(1e-11 * a.abs().max(b.abs()))
}

/// Precomputed family indices for fast likelihood evaluation of one DAG.
#[derive(Clone, Debug)]
pub struct GraphScorer {
    families: Vec<FamilyIndex>,
    dimension: usize,
}

impl GraphScorer {
    pub fn new(g: &Dag) -> Self {
        GraphScorer {
            families: (0..g.n()).map(|i| FamilyIndex::new(g.n(), i, g.parents(i))).collect(),
            dimension: g.dimension(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `sum_j sum_{x_j, pa} w log2 (w / w_pa)`; the maximized log-likelihood
    /// when `weights` are counts, or `-sum_j H(X_j | Pa_j)` for a distribution.
    pub fn loglik(&self, weights: &[f64], scratch: &mut Vec<f64>) -> f64 {
        self.families.iter().map(|f| f.loglik(weights, scratch)).sum()
    }

    /// Adds `log2 Q_G(x)` to `out[x]` for every state, where `Q_G` is the
    /// projection of the normalized `weights` onto the graph.
    pub(crate) fn add_log2_projection(&self, weights: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        for f in &self.families {
            f.add_log2_conditional(weights, out, scratch);
        }
    }
}

/// Empirical conditionals; parent configurations never observed get 0.5.
pub fn mle_parameters(counts: &SampleCounts, g: &Dag) -> Parametrization {
    let tables = (0..g.n())
        .map(|i| {
            let pa = g.parents(i);
            let mut ones = vec![0u64; 1 << pa.len()];
            let mut seen = vec![0u64; 1 << pa.len()];
            for (state, &c) in counts.counts().iter().enumerate() {
                let k = gather(state, pa);
                seen[k] += c;
                if (state >> i) & 1 == 1 {
                    ones[k] += c;
                }
            }
            ones.iter().zip(&seen).map(|(&o, &s)| if s == 0 { 0.5 } else { o as f64 / s as f64 }).collect()
        })
        .collect();
    Parametrization::new(tables)
}

/// Maximized log-likelihood `-N sum_j H_emp(X_j | Pa(j))`.
pub fn log_likelihood(counts: &SampleCounts, g: &Dag) -> f64 {
    GraphScorer::new(g).loglik(&counts.as_f64(), &mut Vec::new())
}

/// `sum_x count(x) log2 P_{g,theta}(x)`: the per-sample log-likelihood sum,
/// with samples grouped by state.
pub fn log_likelihood_with(counts: &SampleCounts, g: &Dag, theta: &Parametrization) -> f64 {
    counts
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(state, &c)| c as f64 * log2_prob(state, g, theta))
        .sum()
}

/// Log-likelihood of individual draws, summed sample by sample.
pub fn log_likelihood_of_draws(draws: &[usize], g: &Dag, theta: &Parametrization) -> f64 {
    draws.iter().map(|&s| log2_prob(s, g, theta)).sum()
}

fn log2_prob(state: usize, g: &Dag, theta: &Parametrization) -> f64 {
    (0..g.n())
        .map(|i| {
            let t = theta.table(i)[gather(state, g.parents(i))];
            if (state >> i) & 1 == 1 { t } else { 1.0 - t }.log2()
        })
        .sum()
}

pub fn mdl_score(counts: &SampleCounts, g: &Dag, psi: &PenaltyFunction) -> Result<ScoreReport> {
    if counts.total() == 0 {
        return Err(Error::invalid("scoring needs at least one sample"));
    }
    Ok(ScoreReport::new(g.label(), log_likelihood(counts, g), g.dimension(), psi.value(counts.total())?))
}

/// The score `g` would get if the sample distribution were exactly `p_star`.
pub fn ideal_score(p_star: &JointDistribution, g: &Dag, psi: &PenaltyFunction, n_samples: u64) -> Result<ScoreReport> {
    if p_star.n() != g.n() {
        return Err(Error::invalid("graph and distribution sizes differ"));
    }
    let ll = n_samples as f64 * GraphScorer::new(g).loglik(p_star.probs(), &mut Vec::new());
    Ok(ScoreReport::new(g.label(), ll, g.dimension(), psi.value(n_samples)?))
}

/// A structure competing in [`best_structure`].
#[derive(Clone, Debug)]
pub struct Candidate {
    pub id: String,
    pub dag: Dag,
}

pub fn candidates_from_dags(dags: &[Dag]) -> Vec<Candidate> {
    dags.iter().enumerate().map(|(k, d)| Candidate { id: format!("dag{k}"), dag: d.clone() }).collect()
}

/// One representative per class; scores are class invariants.
pub fn candidates_from_classes(classes: &[EquivalenceClass]) -> Vec<Candidate> {
    classes
        .iter()
        .enumerate()
        .map(|(k, c)| Candidate { id: format!("class{k}"), dag: c.representative.clone() })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Ranking {
    /// Index into the candidate list.
    pub winner: usize,
    /// Candidate indices, best first.
    pub order: Vec<usize>,
    /// Score rows in `order`.
    pub rows: Vec<ScoreReport>,
}

/// Highest MDL score wins; ties go to the smaller dimension, then to the
/// earlier candidate.
pub fn best_structure(counts: &SampleCounts, candidates: &[Candidate], psi: &PenaltyFunction) -> Result<Ranking> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate structures"));
    }
    let mut rows = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut r = mdl_score(counts, &c.dag, psi)?;
        r.graph_id = c.id.clone();
        rows.push(r);
    }
    let winner = select_winner(&rows);
    let mut order: Vec<usize> = (0..rows.len()).filter(|&k| k != winner).collect();
    order.sort_by(|&a, &b| {
        rows[b].score.total_cmp(&rows[a].score).then(rows[a].dimension.cmp(&rows[b].dimension)).then(a.cmp(&b))
    });
    order.insert(0, winner);
    let rows = order.iter().map(|&k| rows[k].clone()).collect();
    Ok(Ranking { winner, order, rows })
}

pub(crate) fn select_winner(rows: &[ScoreReport]) -> usize {
    let mut best = 0;
    for (k, r) in rows.iter().enumerate().skip(1) {
        let b = &rows[best];
        let better = if scores_tie(r.score, b.score) { r.dimension < b.dimension } else { r.score > b.score };
        if better {
            best = k;
        }
    }
    best
}

pub fn write_scores_csv<W: Write>(out: W, rows: &[ScoreReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["graph_id", "dimension", "loglik", "penalty", "score"])?;
    for r in rows {
        w.write_record([
            r.graph_id.clone(),
            r.dimension.to_string(),
            format!("{:.12e}", r.log_likelihood),
            format!("{:.12e}", r.penalty_value),
            format!("{:.12e}", r.score),
        ])?;
    }
    w.flush()?;
    Ok(())
}
