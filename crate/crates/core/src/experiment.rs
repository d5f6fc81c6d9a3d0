//! Experiment configuration files, the four-node preset, and the result
//! files `scores.csv`, `errors.csv`, `bounds.csv` and `summary.json`.
//!
//! ```toml
//! network = "net.bn"          # or "builtin:figure1"
//! seed = 7
//! output = "results"
//! candidates = "all-classes"  # "all-dags" or a list of graph labels
//! n_grid = [100, 1000]
//! method = "is"               # "mc", "is" or "exact"
//! blocks = 6000
//! proposal_count = 30
//!
//! [penalty]
//! kind = "bic"
//!
//! [[rival]]
//! id = "G2"
//! graph = "-"
//! role = "under"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bn::{ancestral_sample, BayesNet, Dag};
use crate::bounds::{standard_bounds, write_bounds_csv, BoundReport};
use crate::divergence::network_ic;
use crate::errorlab::{
    misidentification_prob, summarize, validate_pair, write_errors_csv, Combine, CrossoverRow, ErrorEstimate,
    EstimatorSettings, Method, ProposalGrid, ProposalSpec,
};
use crate::format::{figure1_network, read_bn};
use crate::graphs::{enumerate_dags, equivalence_classes};
use crate::scoring::{
    best_structure, candidates_from_classes, candidates_from_dags, write_scores_csv, Candidate, PenaltyFunction,
};
use crate::{Error, Result};

pub const BUILTIN_FIGURE1: &str = "builtin:figure1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateKind {
    AllDags,
    AllClasses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateScope {
    Kind(CandidateKind),
    List(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RivalRole {
    Under,
    Over,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rival {
    pub id: String,
    /// Edge list such as `"0>1 1>2"`; `"-"` is the empty graph.
    pub graph: String,
    #[serde(default = "default_role")]
    pub role: RivalRole,
}

fn default_role() -> RivalRole {
    RivalRole::Other
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    #[serde(rename = "mc")]
    Mc,
    #[serde(rename = "is")]
    Is,
    #[serde(rename = "exact")]
    Exact,
}

impl From<MethodChoice> for Method {
    fn from(m: MethodChoice) -> Method {
        match m {
            MethodChoice::Mc => Method::MonteCarlo,
            MethodChoice::Is => Method::ImportanceSampling,
            MethodChoice::Exact => Method::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: String,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_candidates")]
    pub candidates: CandidateScope,
    #[serde(default = "default_penalty")]
    pub penalty: PenaltyFunction,
    pub n_grid: Vec<u64>,
    pub method: MethodChoice,
    #[serde(default = "default_blocks")]
    pub blocks: u64,
    /// Size of the default proposal grid, used when `proposal` is empty.
    #[serde(default = "default_proposal_count")]
    pub proposal_count: usize,
    #[serde(default)]
    pub proposal: Vec<ProposalSpec>,
    #[serde(default)]
    pub combine: Combine,
    /// Datasets per N for the overall misidentification rate; 0 skips it.
    #[serde(default)]
    pub misidentification_blocks: u64,
    #[serde(default)]
    pub rival: Vec<Rival>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_candidates() -> CandidateScope {
    CandidateScope::Kind(CandidateKind::AllClasses)
}
fn default_penalty() -> PenaltyFunction {
    PenaltyFunction::Bic
}
fn default_blocks() -> u64 {
    6000
}
fn default_proposal_count() -> usize {
    30
}

impl ExperimentConfig {
    /// Reads a TOML config; relative `network` and `output` paths are
    /// resolved against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if !cfg.network.starts_with("builtin:") && Path::new(&cfg.network).is_relative() {
            cfg.network = base.join(&cfg.network).to_string_lossy().into_owned();
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be positive and strictly increasing".into()));
        }
        if self.method != MethodChoice::Exact && self.blocks == 0 {
            return Err(Error::Config("blocks must be positive".into()));
        }
        if self.method == MethodChoice::Is && self.proposal.is_empty() && self.proposal_count == 0 {
            return Err(Error::Config("importance sampling needs at least one proposal".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.rival {
            if !seen.insert(&r.id) {
                return Err(Error::Config(format!("rival id `{}` used twice", r.id)));
            }
        }
        for role in [RivalRole::Under, RivalRole::Over] {
            if self.rival.iter().filter(|r| r.role == role).count() > 1 {
                return Err(Error::Config(format!("at most one rival may have role {role:?}")));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            method: self.method.into(),
            blocks: self.blocks,
            proposals: if self.proposal.is_empty() {
                ProposalGrid::Default { count: self.proposal_count }
            } else {
                ProposalGrid::Explicit(self.proposal.clone())
            },
            combine: self.combine,
            seed: self.seed,
        }
    }

    pub fn load_network(&self) -> Result<BayesNet> {
        match self.network.as_str() {
            BUILTIN_FIGURE1 => Ok(figure1_network()),
            s if s.starts_with("builtin:") => Err(Error::Config(format!("unknown builtin network `{s}`"))),
            s => read_bn(Path::new(s)).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("{s}: {io}")),
                Error::Parse { line, message } => Error::Config(format!("{s}:{line}: {message}")),
                other => other,
            }),
        }
    }
}

/// The four-node experiment: importance sampling with 30 proposals of 6000
/// datasets each, 13 sample sizes log-spaced from 100 to 10000.
pub fn figure1_preset() -> ExperimentConfig {
    let n_grid = (0..=12).map(|k| 10f64.powf(2.0 + k as f64 / 6.0).round() as u64).collect();
    ExperimentConfig {
        network: BUILTIN_FIGURE1.into(),
        seed: 1,
        output: PathBuf::from("figure1"),
        candidates: CandidateScope::Kind(CandidateKind::AllClasses),
        penalty: PenaltyFunction::Bic,
        n_grid,
        method: MethodChoice::Is,
        blocks: 6000,
        proposal_count: 30,
        proposal: Vec::new(),
        combine: Combine::Balance,
        misidentification_blocks: 0,
        rival: vec![
            Rival { id: "G1".into(), graph: "0>1 0>2 1>3 2>3 0>3".into(), role: RivalRole::Over },
            Rival { id: "G2".into(), graph: "-".into(), role: RivalRole::Under },
        ],
    }
}

/// Network, true graph and parsed rivals of a config.
pub struct Prepared {
    pub net: BayesNet,
    pub rivals: Vec<(Rival, Dag)>,
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let net = cfg.load_network()?;
        let rivals = cfg
            .rival
            .iter()
            .map(|r| {
                Dag::parse_label(net.n(), &r.graph)
                    .map(|d| (r.clone(), d))
                    .map_err(|e| Error::Config(format!("rival `{}`: {e}", r.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        let find = |role| rivals.iter().find(|(r, _)| r.role == role).map(|(_, d)| d);
        if let (Some(u), Some(o)) = (find(RivalRole::Under), find(RivalRole::Over)) {
            validate_pair(&net, net.dag(), u, o)?;
        }
        Ok(Prepared { net, rivals })
    }

    fn role(&self, role: RivalRole) -> Option<&(Rival, Dag)> {
        self.rivals.iter().find(|(r, _)| r.role == role)
    }

    pub fn candidates(&self, scope: &CandidateScope) -> Result<Vec<Candidate>> {
        let n = self.net.n();
        Ok(match scope {
            CandidateScope::Kind(CandidateKind::AllDags) => candidates_from_dags(&enumerate_dags(n)?),
            CandidateScope::Kind(CandidateKind::AllClasses) => {
                candidates_from_classes(&equivalence_classes(&enumerate_dags(n)?))
            }
            CandidateScope::List(labels) => labels
                .iter()
                .map(|l| {
                    Dag::parse_label(n, l)
                        .map(|dag| Candidate { id: dag.label(), dag })
                        .map_err(|e| Error::Config(format!("candidate `{l}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?,
        })
    }
}

/// Stream offset keeping the structure-search dataset apart from error estimates.
const SCORE_STREAM: u64 = u64::MAX;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Scores every candidate on one dataset of the largest `N`; writes `scores.csv`.
pub fn run_scores(cfg: &ExperimentConfig, prep: &Prepared, out: &Path) -> Result<serde_json::Value> {
    let candidates = prep.candidates(&cfg.candidates)?;
    let n = *cfg.n_grid.last().expect("validated grid");
    let counts = ancestral_sample(&prep.net, n, crate::errorlab::derive_seed(cfg.seed, SCORE_STREAM))?;
    let ranking = best_structure(&counts, &candidates, &cfg.penalty)?;
    write_scores_csv(create(out, "scores.csv")?, &ranking.rows)?;
    let winner = &candidates[ranking.winner];
    Ok(json!({
        "N": n,
        "candidates": candidates.len(),
        "winner": winner.id,
        "winner_graph": winner.dag.label(),
        "winner_equivalent_to_truth": crate::graphs::markov_equivalent(&winner.dag, prep.net.dag()),
    }))
}

/// All error estimates of the experiment, one `(graph_id, estimate)` per row.
pub fn estimate_errors(cfg: &ExperimentConfig, prep: &Prepared) -> Result<Vec<(String, ErrorEstimate)>> {
    let settings = cfg.settings();
    let g_star = prep.net.dag();
    let r_count = prep.rivals.len() as u64;
    let mut rows = Vec::new();
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        for (r, (rival, dag)) in prep.rivals.iter().enumerate() {
            let stream = i as u64 * r_count + r as u64;
            let est = settings.estimate(&prep.net, g_star, dag, n, &cfg.penalty, stream)?;
            rows.push((rival.id.clone(), est));
        }
        if cfg.misidentification_blocks > 0 {
            let candidates = prep.candidates(&cfg.candidates)?;
            let seed = crate::errorlab::derive_seed(cfg.seed, SCORE_STREAM - 1 - i as u64);
            let est = misidentification_prob(
                &prep.net,
                g_star,
                &candidates,
                n,
                cfg.misidentification_blocks,
                &cfg.penalty,
                seed,
            )?;
            rows.push(("misidentified".to_string(), est));
        }
    }
    Ok(rows)
}

pub fn run_errors(cfg: &ExperimentConfig, prep: &Prepared, out: &Path) -> Result<serde_json::Value> {
    let rows = estimate_errors(cfg, prep)?;
    write_errors_csv(create(out, "errors.csv")?, &rows)?;
    Ok(error_summary(prep, &rows))
}

fn error_summary(prep: &Prepared, rows: &[(String, ErrorEstimate)]) -> serde_json::Value {
    let ess: Vec<_> = rows
        .iter()
        .filter(|(_, e)| e.method == Method::ImportanceSampling)
        .map(|(id, e)| {
            json!({
                "N": e.n_samples,
                "graph_id": id,
                "ess": e.ess,
                "low_ess": e.low_ess,
                "proposals": e.per_proposal,
            })
        })
        .collect();
    let mut summary = json!({ "effective_sample_size": ess });
    if let (Some((u, _)), Some((o, _))) = (prep.role(RivalRole::Under), prep.role(RivalRole::Over)) {
        let pick =
            |id: &str| -> Vec<ErrorEstimate> { rows.iter().filter(|(g, _)| g == id).map(|(_, e)| e.clone()).collect() };
        let pairs: Vec<CrossoverRow> = pick(&u.id)
            .into_iter()
            .zip(pick(&o.id))
            .map(|(under, over)| CrossoverRow { n_samples: under.n_samples, under, over })
            .collect();
        let scan = summarize(pairs);
        summary["crossover"] = json!({
            "under": u.id,
            "over": o.id,
            "under_fit_log10_vs_n": scan.under_fit,
            "over_fit_log10_vs_log10_n": scan.over_loglog,
            "over_fit_log10_vs_n": scan.over_semilog,
            "over_top_decade_log10_vs_log10_n": scan.over_top_decade,
            "crossings": scan.crossings,
            "crossover_n": scan.crossover_n,
        });
    }
    summary
}

pub fn bound_reports(cfg: &ExperimentConfig, prep: &Prepared) -> Result<Vec<BoundReport>> {
    let under = prep.role(RivalRole::Under).map(|(_, d)| d);
    let over = prep.role(RivalRole::Over).map(|(_, d)| d);
    standard_bounds(&prep.net, under, over, &cfg.penalty, &cfg.n_grid)
}

pub fn run_bounds(cfg: &ExperimentConfig, prep: &Prepared, out: &Path) -> Result<serde_json::Value> {
    let rows = bound_reports(cfg, prep)?;
    write_bounds_csv(create(out, "bounds.csv")?, &rows)?;
    Ok(json!(rows
        .iter()
        .map(|r| (r.bound_id.clone(), r.note.clone()))
        .filter(|(_, n)| !n.is_empty())
        .collect::<BTreeMap<_, _>>()))
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub directory: PathBuf,
    pub summary: serde_json::Value,
}

/// Runs the whole pipeline into `cfg.output`. Everything except the
/// `wall_time_seconds` field of `summary.json` is a pure function of the config.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let started = Instant::now();
    cfg.validate()?;
    let prep = Prepared::new(cfg)?;
    let out = cfg.output.clone();
    std::fs::create_dir_all(&out)?;
    let scores = run_scores(cfg, &prep, &out)?;
    let errors = run_errors(cfg, &prep, &out)?;
    let bounds = run_bounds(cfg, &prep, &out)?;
    let net = &prep.net;
    let summary = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "network": {
            "n": net.n(),
            "edges": net.dag().label(),
            "dimension": net.dag().dimension(),
            "gamma": net.gamma(),
            "ic_bits": network_ic(net).ok().map(|v| v.bits()),
        },
        "rivals": prep.rivals.iter().map(|(r, d)| json!({
            "id": r.id, "graph": d.label(), "dimension": d.dimension(), "role": r.role,
        })).collect::<Vec<_>>(),
        "scores": scores,
        "errors": errors,
        "bound_notes": bounds,
        "log_base": 2,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    let mut f = create(&out, "summary.json")?;
    serde_json::to_writer_pretty(&mut f, &summary).map_err(|e| Error::Config(e.to_string()))?;
    std::io::Write::write_all(&mut f, b"\n")?;
    Ok(RunOutput { directory: out, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matches_the_experiment() {
        let cfg = figure1_preset();
        assert_eq!(cfg.n_grid.first(), Some(&100));
        assert_eq!(cfg.n_grid.last(), Some(&10000));
        cfg.validate().unwrap();
        let prep = Prepared::new(&cfg).unwrap();
        assert!((prep.net.gamma() - 0.1).abs() < 1e-15);
        let g1 = &prep.rivals[0].1;
        assert_eq!(g1.dimension() - prep.net.dag().dimension(), 4);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = figure1_preset();
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn parses_a_handwritten_config() {
        let text = r#"
network = "builtin:figure1"
seed = 3
candidates = ["-", "0>1"]
n_grid = [5, 10]
method = "exact"

[penalty]
kind = "constant"
value = 0.5

[[rival]]
id = "empty"
graph = "-"
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.method, MethodChoice::Exact);
        assert_eq!(cfg.penalty, PenaltyFunction::Constant { value: 0.5 });
        assert_eq!(cfg.candidates, CandidateScope::List(vec!["-".into(), "0>1".into()]));
    }

    #[test]
    fn config_errors() {
        let bad_grid = "network = \"x\"\nseed = 1\nn_grid = [10, 5]\nmethod = \"mc\"\n";
        assert!(matches!(ExperimentConfig::from_toml(bad_grid), Err(Error::Config(_))));
        let no_seed = "network = \"x\"\nn_grid = [10]\nmethod = \"mc\"\n";
        let err = ExperimentConfig::from_toml(no_seed).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
        let typo = "network = \"x\"\nseed = 1\nn_grid = [10]\nmethod = \"mc\"\nblcks = 3\n";
        let err = ExperimentConfig::from_toml(typo).unwrap_err().to_string();
        assert!(err.contains("line 5"), "{err}");
    }
}
