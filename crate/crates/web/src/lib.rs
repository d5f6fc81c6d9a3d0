//! WebAssembly bindings for the static page in `www/`. Every export returns a
//! JSON string; an empty `network` argument selects the bundled network.

use bnlab::bn::ancestral_sample;
use bnlab::bounds::{lemma1_bound, lemma2_bound, overfit_asymptote, sanov_lower_exponent, theorem2_upper_exponent};
use bnlab::errorlab::{default_proposals, is_error_prob, Combine};
use bnlab::format::{figure1_network, parse_bn};
use bnlab::graphs::{enumerate_dags, equivalence_classes, markov_equivalent};
use bnlab::scoring::{best_structure, candidates_from_classes, PenaltyFunction};
use bnlab::{BayesNet, Dag};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn network(text: &str) -> Result<BayesNet, String> {
    if text.trim().is_empty() {
        Ok(figure1_network())
    } else {
        parse_bn(text).map_err(|e| e.to_string())
    }
}

fn log_grid(n_min: u64, n_max: u64, points: usize) -> Result<Vec<u64>, String> {
    if n_min < 2 || n_max <= n_min || points < 2 {
        return Err("need 2 <= n_min < n_max and at least two points".into());
    }
    let (a, b) = ((n_min as f64).ln(), (n_max as f64).ln());
    let mut grid: Vec<u64> =
        (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp().round() as u64).collect();
    grid.dedup();
    Ok(grid)
}

/// Importance-sampling error curve of one rival graph against the network's
/// own structure, with the matching theoretical reference line.
#[allow(clippy::too_many_arguments)]
pub fn error_curve_json(
    network_text: &str,
    rival: &str,
    n_min: u64,
    n_max: u64,
    points: usize,
    blocks: u64,
    proposals: usize,
    seed: u64,
) -> Result<String, String> {
    let net = network(network_text)?;
    let g = Dag::parse_label(net.n(), rival).map_err(|e| e.to_string())?;
    let g_star = net.dag().clone();
    if markov_equivalent(&g, &g_star) {
        return Err("the rival is equivalent to the true graph; its error probability is 0".into());
    }
    let grid = log_grid(n_min, n_max, points)?;
    let specs = default_proposals(proposals.max(1));
    let gap = g.dimension() as i64 - g_star.dimension() as i64;
    let exponent = sanov_lower_exponent(&net, &g).ok().map(|r| r.value);
    let mut rows = Vec::new();
    for (i, &n) in grid.iter().enumerate() {
        let e = is_error_prob(
            &net,
            &g_star,
            &g,
            n,
            blocks,
            &PenaltyFunction::Bic,
            &specs,
            Combine::Balance,
            seed.wrapping_add(i as u64),
        )
        .map_err(|e| e.to_string())?;
        let reference = match exponent {
            Some(x) => Some(x * n as f64 * std::f64::consts::LOG10_2),
            None if gap >= 1 => overfit_asymptote(gap as usize, n).ok().map(|r| r.value.log10()),
            None => None,
        };
        rows.push(json!({
            "N": n,
            "log10_probability": finite(e.log10_probability),
            "std_error": e.std_error,
            "probability": e.probability,
            "ess": e.ess,
            "reference_log10": reference,
        }));
    }
    Ok(json!({
        "rival": g.label(),
        "dimension_gap": gap,
        "kind": if exponent.is_some() { "under-fitting" } else { "over-fitting" },
        "rows": rows,
    })
    .to_string())
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// `lemma1_bound` and `lemma2_bound` curves over `eps`, plus the network's exponents.
pub fn bounds_json(network_text: &str, gamma: f64, m: usize, points: usize) -> Result<String, String> {
    let net = network(network_text)?;
    let points = points.clamp(2, 1000);
    let lemma1: Vec<Value> = (1..points)
        .map(|k| gamma / 2.0 * k as f64 / points as f64)
        .filter_map(|eps| lemma1_bound(gamma, eps).ok().map(|r| json!([eps, r.value])))
        .collect();
    let limit = gamma * gamma / (32.0 * std::f64::consts::LN_2);
    let lemma2: Vec<Value> = (1..points)
        .map(|k| limit * k as f64 / points as f64)
        .filter_map(|eps| lemma2_bound(gamma, eps, m).ok().map(|r| json!([eps, r.value])))
        .collect();
    let upper = theorem2_upper_exponent(&net).map_err(|e| e.to_string())?;
    let lower = sanov_lower_exponent(&net, &Dag::empty(net.n())).ok().map(|r| r.value);
    Ok(json!({
        "gamma": gamma,
        "m": m,
        "lemma1": lemma1,
        "lemma2": lemma2,
        "network_gamma": net.gamma(),
        "theorem2_upper_exponent": upper.value,
        "sanov_lower_exponent_empty_graph": lower,
    })
    .to_string())
}

/// Samples one dataset and ranks all equivalence classes by BIC score.
pub fn rank_structures_json(network_text: &str, n_samples: u64, seed: u64, top: usize) -> Result<String, String> {
    let net = network(network_text)?;
    let dags = enumerate_dags(net.n()).map_err(|e| e.to_string())?;
    let classes = equivalence_classes(&dags);
    let candidates = candidates_from_classes(&classes);
    let counts = ancestral_sample(&net, n_samples, seed).map_err(|e| e.to_string())?;
    let ranking = best_structure(&counts, &candidates, &PenaltyFunction::Bic).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = ranking
        .order
        .iter()
        .zip(&ranking.rows)
        .take(top.max(1))
        .map(|(&k, r)| {
            json!({
                "graph": candidates[k].dag.label(),
                "class_size": classes[k].members.len(),
                "dimension": r.dimension,
                "loglik": r.log_likelihood,
                "score": r.score,
                "true_class": markov_equivalent(&candidates[k].dag, net.dag()),
            })
        })
        .collect();
    Ok(json!({ "N": n_samples, "classes": classes.len(), "rows": rows }).to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn error_curve(
    network_text: &str,
    rival: &str,
    n_min: u32,
    n_max: u32,
    points: u32,
    blocks: u32,
    proposals: u32,
    seed: u32,
) -> Result<String, JsValue> {
    error_curve_json(
        network_text,
        rival,
        n_min.into(),
        n_max.into(),
        points as usize,
        blocks.into(),
        proposals as usize,
        seed.into(),
    )
    .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bounds(network_text: &str, gamma: f64, m: u32, points: u32) -> Result<String, JsValue> {
    bounds_json(network_text, gamma, m as usize, points as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rank_structures(network_text: &str, n_samples: u32, seed: u32, top: u32) -> Result<String, JsValue> {
    rank_structures_json(network_text, n_samples.into(), seed.into(), top as usize).map_err(|e| JsValue::from_str(&e))
}
