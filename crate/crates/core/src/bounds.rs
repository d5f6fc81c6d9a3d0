//! Closed-form bounds and asymptotic expressions.
//!
//! Logarithms inside bracket terms are base 2 and the brackets
//! `[n log(gamma/2) + 1]` and `[log(gamma^n - alpha) + 1]` are used as
//! magnitudes: they play the role of Lipschitz constants of `x log x`.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::bn::{BayesNet, Dag};
use crate::divergence::{graph_to_kl, kl_to_graph, network_ic};
use crate::scoring::PenaltyFunction;
use crate::{Error, Result};

/// Divergences at or below this are treated as zero.
const IMAP_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundUnit {
    Probability,
    ExponentPerSample,
    ThresholdN,
    DivergenceBits,
}

impl BoundUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundUnit::Probability => "probability",
            BoundUnit::ExponentPerSample => "exponent-per-sample",
            BoundUnit::ThresholdN => "threshold-N",
            BoundUnit::DivergenceBits => "divergence-bits",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_id: String,
    pub inputs: BTreeMap<String, Value>,
    /// Probability values are clipped to `[0, 1]`.
    pub value: f64,
    pub raw_value: f64,
    pub unit: BoundUnit,
    pub note: String,
}

impl BoundReport {
    fn new(id: &str, inputs: Value, raw: f64, unit: BoundUnit, note: &str) -> Self {
        let inputs = match inputs {
            Value::Object(m) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        let value = if unit == BoundUnit::Probability { raw.clamp(0.0, 1.0) } else { raw };
        BoundReport { bound_id: id.to_string(), inputs, value, raw_value: raw, unit, note: note.to_string() }
    }

    pub fn inputs_json(&self) -> String {
        serde_json::to_string(&self.inputs).expect("inputs serialize")
    }
}

fn domain(lemma: &'static str, message: impl Into<String>) -> Error {
    Error::BoundDomain { lemma, message: message.into() }
}

/// `8 eps^2 / gamma^2`, a bound on both `D(P||Q)` and `D(Q||P)` in bits.
pub fn lemma1_bound(gamma: f64, epsilon: f64) -> Result<BoundReport> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(domain("lemma1", format!("gamma = {gamma} outside (0, 0.5]")));
    }
    if !(epsilon > 0.0 && epsilon < gamma / 2.0) {
        return Err(domain("lemma1", format!("need 0 < eps < gamma/2, got eps = {epsilon}")));
    }
    Ok(BoundReport::new(
        "lemma1",
        json!({ "gamma": gamma, "epsilon": epsilon }),
        8.0 * epsilon * epsilon / (gamma * gamma),
        BoundUnit::DivergenceBits,
        "",
    ))
}

/// `64 m ln2 eps / gamma^2`.
pub fn lemma2_bound(gamma: f64, epsilon: f64, m: usize) -> Result<BoundReport> {
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(domain("lemma2", format!("gamma = {gamma} outside (0, 0.5]")));
    }
    if m < 2 {
        return Err(domain("lemma2", "need at least two values"));
    }
    let limit = gamma * gamma / (32.0 * LN_2);
    if !(epsilon > 0.0 && epsilon < limit) {
        return Err(domain("lemma2", format!("need 0 < eps < {limit}, got eps = {epsilon}")));
    }
    Ok(BoundReport::new(
        "lemma2",
        json!({ "gamma": gamma, "epsilon": epsilon, "m": m }),
        64.0 * m as f64 * LN_2 * epsilon / (gamma * gamma),
        BoundUnit::DivergenceBits,
        "m-dependent form",
    ))
}

/// `-D(g || P*)`: asymptotic lower bound on `(1/N) log2 P(error)`.
pub fn sanov_lower_exponent(net_star: &BayesNet, g: &Dag) -> Result<BoundReport> {
    let proj = graph_to_kl(g, &net_star.joint_distribution())?;
    let d = proj.divergence.bits();
    if d <= IMAP_TOLERANCE {
        return Err(domain(
            "theorem1",
            "graph is an I-map of the true distribution; the error decays polynomially, not exponentially",
        ));
    }
    Ok(BoundReport::new(
        "sanov-lower",
        json!({ "graph": g.label(), "graph_to_kl_bits": d }),
        -d,
        BoundUnit::ExponentPerSample,
        "bounds (1/N) log2 P(error) from below",
    ))
}

/// `max(-gamma^{2n}/6, -IC^2 / (48 |n log2(gamma/2) + 1|^2 4^n))`.
///
/// Substituting `alpha = gamma^n/2` into `exp(-alpha^2 N / 3)` would give
/// `-gamma^{2n}/12` for the first branch; the constant 6 is kept on purpose.
pub fn theorem2_upper_exponent(net_star: &BayesNet) -> Result<BoundReport> {
    let ic = network_ic(net_star)?.bits();
    let gamma = net_star.gamma();
    let n = net_star.n() as f64;
    let first = -gamma.powf(2.0 * n) / 6.0;
    let bracket = (n * (gamma / 2.0).log2() + 1.0).abs();
    let second = -ic * ic / (48.0 * bracket * bracket * 4f64.powf(n));
    Ok(BoundReport::new(
        "theorem2-upper",
        json!({ "gamma": gamma, "n": net_star.n(), "ic_bits": ic, "bracket": bracket }),
        first.max(second),
        BoundUnit::ExponentPerSample,
        "first-branch constant 1/6 kept; base-2 log in the bracket, bracket taken in absolute value",
    ))
}

/// Smallest `N` such that `Psi(M)/M <= IC / (|G*| - n)` for every `M >= N`.
pub fn prop2_threshold(net_star: &BayesNet, psi: &PenaltyFunction) -> Result<BoundReport> {
    let ic = network_ic(net_star)?.bits();
    let dim = net_star.dag().dimension();
    let n = net_star.n();
    let mut inputs = json!({ "ic_bits": ic, "dimension": dim, "n": n, "penalty": psi.name() });
    if dim <= n {
        return Ok(BoundReport::new("prop2-threshold", inputs, 1.0, BoundUnit::ThresholdN, "no edges: no constraint"));
    }
    let ratio = ic / (dim - n) as f64;
    inputs["ratio"] = json!(ratio);
    let threshold = penalty_threshold(psi, ratio)?;
    Ok(BoundReport::new("prop2-threshold", inputs, threshold as f64, BoundUnit::ThresholdN, ""))
}

/// Smallest `N` with `Psi(M)/M <= ratio` for all `M >= N`.
pub fn penalty_threshold(psi: &PenaltyFunction, ratio: f64) -> Result<u64> {
    let f = |m: u64| psi.value(m).map(|v| v / m as f64);
    match psi {
        PenaltyFunction::Table { points } => {
            let mut ns: Vec<u64> = points.iter().map(|p| p.0).collect();
            ns.sort_unstable();
            let mut threshold = None;
            for &m in ns.iter().rev() {
                if f(m)? <= ratio {
                    threshold = Some(m);
                } else {
                    break;
                }
            }
            threshold.ok_or_else(|| domain("proposition2", "no tabulated N satisfies the condition"))
        }
        // Psi(M)/M is nonincreasing for M >= 3 for both remaining kinds.
        _ => {
            let mut hi = 3u64;
            while f(hi)? > ratio {
                if hi > 1 << 60 {
                    return Err(domain("proposition2", "threshold beyond 2^60"));
                }
                hi *= 2;
            }
            let mut lo = hi / 2;
            if hi == 3 {
                lo = 2;
            }
            // invariant: f(lo) > ratio or lo < 3, f(hi) <= ratio
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if f(mid)? <= ratio {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let mut n = hi;
            while n > 1 && n <= 3 && f(n - 1)? <= ratio {
                n -= 1;
            }
            Ok(n)
        }
    }
}

/// `(1 / Gamma(k/2)) (ln N)^{k/2 - 1} N^{-k/2}` with `k = |G| - |G*|`.
pub fn overfit_asymptote(dim_gap: usize, n_samples: u64) -> Result<BoundReport> {
    if dim_gap < 1 {
        return Err(domain("theorem3", "dimension gap must be at least 1"));
    }
    if n_samples < 2 {
        return Err(domain("theorem3", "need N >= 2"));
    }
    let h = dim_gap as f64 / 2.0;
    let n = n_samples as f64;
    let raw = n.ln().powf(h - 1.0) * n.powf(-h) / statrs::function::gamma::gamma(h);
    Ok(BoundReport::new(
        "overfit-asymptote",
        json!({ "dim_gap": dim_gap, "N": n_samples }),
        raw,
        BoundUnit::Probability,
        "natural log; equivalence up to an unspecified constant",
    ))
}

/// Which concentration bound to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChernoffLemma {
    /// `2 exp(-alpha^2 N / (3 P(S)))`.
    Lemma5,
    /// Same probability, deviation `alpha |log2(gamma^n - alpha) + 1|` of `x log x`.
    Lemma6,
    /// `2^{n+1} exp(-alpha^2 N / 3)` for `H(S)`, `2^{n+2}` for `H(T|S)`.
    Lemma7,
    /// `n 2^{n+3} exp(-alpha^2 N / 3)` for the likelihood gap.
    Lemma8,
}

/// Evaluates the right-hand sides of Lemmas 5 to 8. `event_prob` is `P_B(S = s)`
/// for the event used by Lemmas 5 and 6.
pub fn chernoff_bounds(net_star: &BayesNet, alpha: f64, n_samples: u64, event_prob: f64) -> Result<Vec<BoundReport>> {
    [ChernoffLemma::Lemma5, ChernoffLemma::Lemma6, ChernoffLemma::Lemma7, ChernoffLemma::Lemma8]
        .into_iter()
        .map(|l| chernoff_bound(net_star, l, alpha, n_samples, event_prob))
        .collect::<Result<Vec<Vec<_>>>>()
        .map(|v| v.into_iter().flatten().collect())
}

pub fn chernoff_bound(
    net_star: &BayesNet,
    lemma: ChernoffLemma,
    alpha: f64,
    n_samples: u64,
    event_prob: f64,
) -> Result<Vec<BoundReport>> {
    let n = net_star.n();
    let gamma_n = net_star.gamma().powi(n as i32);
    let name = match lemma {
        ChernoffLemma::Lemma5 => "lemma5",
        ChernoffLemma::Lemma6 => "lemma6",
        ChernoffLemma::Lemma7 => "lemma7",
        ChernoffLemma::Lemma8 => "lemma8",
    };
    // Lemmas 6 and 8 are stated for alpha in (0, 1) but their deviation
    // involves log(gamma^n - alpha), so alpha < gamma^n is needed throughout.
    if !(alpha > 0.0 && alpha < gamma_n) {
        return Err(domain(name, format!("need 0 < alpha < gamma^n = {gamma_n}, got {alpha}")));
    }
    if matches!(lemma, ChernoffLemma::Lemma5 | ChernoffLemma::Lemma6) && !(event_prob > 0.0 && event_prob <= 1.0) {
        return Err(domain(name, format!("event probability {event_prob} outside (0, 1]")));
    }
    let nf = n_samples as f64;
    let tail = (-alpha * alpha * nf / 3.0).exp();
    let lip = ((gamma_n - alpha).log2() + 1.0).abs();
    let base = json!({ "alpha": alpha, "N": n_samples, "n": n, "gamma_n": gamma_n });
    let with = |extra: Value| {
        let mut v = base.clone();
        for (k, x) in extra.as_object().expect("object") {
            v[k] = x.clone();
        }
        v
    };
    let two_n = 2f64.powi(n as i32);
    Ok(match lemma {
        ChernoffLemma::Lemma5 => vec![BoundReport::new(
            "lemma5",
            with(json!({ "event_prob": event_prob, "deviation": alpha })),
            2.0 * (-alpha * alpha * nf / (3.0 * event_prob)).exp(),
            BoundUnit::Probability,
            "",
        )],
        ChernoffLemma::Lemma6 => vec![BoundReport::new(
            "lemma6",
            with(json!({ "event_prob": event_prob, "deviation": alpha * lip })),
            2.0 * (-alpha * alpha * nf / (3.0 * event_prob)).exp(),
            BoundUnit::Probability,
            "bracket taken in absolute value",
        )],
        ChernoffLemma::Lemma7 => vec![
            BoundReport::new(
                "lemma7-entropy",
                with(json!({ "deviation": two_n * alpha * lip })),
                2.0 * two_n * tail,
                BoundUnit::Probability,
                "bracket taken in absolute value",
            ),
            BoundReport::new(
                "lemma7-conditional",
                with(json!({ "deviation": 2.0 * two_n * alpha * lip })),
                4.0 * two_n * tail,
                BoundUnit::Probability,
                "bracket taken in absolute value",
            ),
        ],
        ChernoffLemma::Lemma8 => vec![BoundReport::new(
            "lemma8",
            with(json!({ "deviation": nf * n as f64 * 4.0 * two_n * alpha * lip })),
            n as f64 * 8.0 * two_n * tail,
            BoundUnit::Probability,
            "bracket taken in absolute value",
        )],
    })
}

/// Exponent and asymptote reports for a true network and a pair of rivals.
pub fn standard_bounds(
    net_star: &BayesNet,
    g_under: Option<&Dag>,
    g_over: Option<&Dag>,
    psi: &PenaltyFunction,
    n_grid: &[u64],
) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let p = net_star.joint_distribution();
    if let Some(g) = g_under {
        let mut r = sanov_lower_exponent(net_star, g)?;
        r.inputs.insert("kl_to_graph_bits".into(), json!(kl_to_graph(&p, g)?.bits()));
        out.push(r);
    }
    out.push(theorem2_upper_exponent(net_star)?);
    out.push(prop2_threshold(net_star, psi)?);
    if let Some(g) = g_over {
        let gap = g.dimension().saturating_sub(net_star.dag().dimension());
        if gap >= 1 {
            for &n in n_grid.iter().filter(|&&n| n >= 2) {
                out.push(overfit_asymptote(gap, n)?);
            }
        }
    }
    Ok(out)
}

/// Writes `bound_id,inputs_json,value,unit`.
pub fn write_bounds_csv<W: Write>(out: W, rows: &[BoundReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bound_id", "inputs_json", "value", "unit"])?;
    for r in rows {
        w.write_record([
            r.bound_id.clone(),
            r.inputs_json(),
            format!("{:.12e}", r.value),
            r.unit.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
