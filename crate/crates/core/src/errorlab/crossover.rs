//! Under-fitting versus over-fitting error curves over a grid of sample sizes.

use serde::{Deserialize, Serialize};

use crate::bn::{BayesNet, Dag};
use crate::divergence::kl_to_graph;
use crate::scoring::PenaltyFunction;
use crate::stats::{linear_fit, LinearFit};
use crate::{Error, Result};

use super::{
    default_proposals, exact_error_prob, is_error_prob, mc_error_prob, Combine, ErrorEstimate, Method, ProposalSpec,
};

/// Divergences below this count as zero when classifying graphs.
const IMAP_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalGrid {
    Default { count: usize },
    Explicit(Vec<ProposalSpec>),
}

impl ProposalGrid {
    pub fn specs(&self) -> Vec<ProposalSpec> {
        match self {
            ProposalGrid::Default { count } => default_proposals(*count),
            ProposalGrid::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub method: Method,
    /// Datasets per proposal (IS) or in total (MC); ignored by the exact oracle.
    pub blocks: u64,
    pub proposals: ProposalGrid,
    pub combine: Combine,
    pub seed: u64,
}

impl EstimatorSettings {
    /// Estimates `P(S_N(g_star) < S_N(g))`. `stream` separates the random
    /// streams of different (N, graph) cells of one experiment.
    pub fn estimate(
        &self,
        net_star: &BayesNet,
        g_star: &Dag,
        g: &Dag,
        n_samples: u64,
        psi: &PenaltyFunction,
        stream: u64,
    ) -> Result<ErrorEstimate> {
        let seed = derive_seed(self.seed, stream);
        match self.method {
            Method::MonteCarlo => mc_error_prob(net_star, g_star, g, n_samples, self.blocks, psi, seed),
            Method::ImportanceSampling => is_error_prob(
                net_star,
                g_star,
                g,
                n_samples,
                self.blocks,
                psi,
                &self.proposals.specs(),
                self.combine,
                seed,
            ),
            Method::Exact => exact_error_prob(net_star, g_star, g, n_samples, psi),
        }
    }
}

/// SplitMix64 finalizer over `seed + stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverRow {
    pub n_samples: u64,
    pub under: ErrorEstimate,
    pub over: ErrorEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverScan {
    pub rows: Vec<CrossoverRow>,
    /// `log10 error` against `N` for the under-fitting graph.
    pub under_fit: Option<LinearFit>,
    /// `log10 error` against `log10 N` for the over-fitting graph.
    pub over_loglog: Option<LinearFit>,
    /// `log10 error` against `N` for the over-fitting graph.
    pub over_semilog: Option<LinearFit>,
    /// Log-log fit of the over-fitting curve restricted to `N >= N_max / 10`.
    pub over_top_decade: Option<LinearFit>,
    /// Sign changes of `log10 under - log10 over` along the grid.
    pub crossings: usize,
    /// First crossing, interpolated linearly in `log10 N`.
    pub crossover_n: Option<f64>,
}

pub fn crossover_scan(
    net_star: &BayesNet,
    g_star: &Dag,
    g_under: &Dag,
    g_over: &Dag,
    n_grid: &[u64],
    psi: &PenaltyFunction,
    settings: &EstimatorSettings,
) -> Result<CrossoverScan> {
    validate_pair(net_star, g_star, g_under, g_over)?;
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("the N grid must be nonempty and strictly increasing"));
    }

    let mut rows = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let under = settings.estimate(net_star, g_star, g_under, n, psi, 2 * i as u64)?;
        let over = settings.estimate(net_star, g_star, g_over, n, psi, 2 * i as u64 + 1)?;
        rows.push(CrossoverRow { n_samples: n, under, over });
    }
    Ok(summarize(rows))
}

/// `g_under` must not be an I-map of `P*`; `g_over` must be one with more
/// parameters than `g_star`.
pub fn validate_pair(net_star: &BayesNet, g_star: &Dag, g_under: &Dag, g_over: &Dag) -> Result<()> {
    let p = net_star.joint_distribution();
    if kl_to_graph(&p, g_under)?.bits() <= IMAP_TOLERANCE {
        return Err(Error::invalid("the under-fitting graph is an I-map of the true distribution"));
    }
    if kl_to_graph(&p, g_over)?.bits() > IMAP_TOLERANCE {
        return Err(Error::invalid("the over-fitting graph is not an I-map of the true distribution"));
    }
    if g_over.dimension() <= g_star.dimension() {
        return Err(Error::invalid("the over-fitting graph must have more parameters than the true graph"));
    }
    Ok(())
}

/// Fits and crossing analysis for already-estimated rows.
pub fn summarize(rows: Vec<CrossoverRow>) -> CrossoverScan {
    let finite = |pick: fn(&CrossoverRow) -> f64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut ns = Vec::new();
        let mut logn = Vec::new();
        let mut ys = Vec::new();
        for r in &rows {
            let y = pick(r);
            if y.is_finite() {
                ns.push(r.n_samples as f64);
                logn.push((r.n_samples as f64).log10());
                ys.push(y);
            }
        }
        (ns, logn, ys)
    };
    let (un, _, uy) = finite(|r| r.under.log10_probability);
    let (on, ol, oy) = finite(|r| r.over.log10_probability);

    let n_max = rows.last().map(|r| r.n_samples as f64).unwrap_or(0.0);
    let top: Vec<usize> = (0..on.len()).filter(|&k| on[k] >= n_max / 10.0).collect();
    let top_x: Vec<f64> = top.iter().map(|&k| ol[k]).collect();
    let top_y: Vec<f64> = top.iter().map(|&k| oy[k]).collect();

    let mut crossings = 0;
    let mut crossover_n = None;
    let mut prev: Option<(f64, f64)> = None;
    for r in &rows {
        let d = r.under.log10_probability - r.over.log10_probability;
        if d.is_nan() || d == 0.0 {
            continue;
        }
        let x = (r.n_samples as f64).log10();
        if let Some((px, pd)) = prev {
            if (pd > 0.0) != (d > 0.0) {
                crossings += 1;
                if crossover_n.is_none() {
                    let t = if pd.is_finite() && d.is_finite() { pd / (pd - d) } else { 0.5 };
                    crossover_n = Some(10f64.powf(px + t * (x - px)));
                }
            }
        }
        prev = Some((x, d));
    }

    CrossoverScan {
        under_fit: linear_fit(&un, &uy),
        over_loglog: linear_fit(&ol, &oy),
        over_semilog: linear_fit(&on, &oy),
        over_top_decade: linear_fit(&top_x, &top_y),
        crossings,
        crossover_n,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(log10: f64) -> ErrorEstimate {
        let mut e = ErrorEstimate::plain(Method::Exact, 1, 1, 10f64.powf(log10), 0.0);
        e.log10_probability = log10;
        e
    }

    fn row(n: u64, under: f64, over: f64) -> CrossoverRow {
        CrossoverRow { n_samples: n, under: est(under), over: est(over) }
    }

    #[test]
    fn single_crossing_is_interpolated() {
        let scan = summarize(vec![row(10, -1.0, -3.0), row(100, -2.0, -2.5), row(1000, -4.0, -3.0)]);
        assert_eq!(scan.crossings, 1);
        let x = scan.crossover_n.unwrap().log10();
        // d goes from 0.5 at x=2 to -1.0 at x=3
        assert!((x - (2.0 + 0.5 / 1.5)).abs() < 1e-12);
        let fit = scan.under_fit.unwrap();
        assert!(fit.slope < 0.0);
    }

    #[test]
    fn no_crossing_when_one_curve_dominates() {
        let scan = summarize(vec![row(10, -1.0, -3.0), row(100, -1.5, -3.5)]);
        assert_eq!(scan.crossings, 0);
        assert!(scan.crossover_n.is_none());
    }

    #[test]
    fn top_decade_uses_the_last_decade_only() {
        let rows = vec![row(10, -1.0, -1.0), row(100, -2.0, -3.0), row(1000, -3.0, -5.0), row(10000, -4.0, -7.0)];
        let scan = summarize(rows);
        let top = scan.over_top_decade.unwrap();
        assert_eq!(top.points, 2);
        assert!((top.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
