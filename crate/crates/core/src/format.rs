//! Plain-text network files.
//!
//! ```text
//! # comment
//! n 2
//! node 0 parents
//! cpt 0.3
//! node 1 parents 0
//! cpt 0.2 0.7
//! ```
//!
//! Each `cpt` line lists `P(X_i = 1 | parents)` for all parent assignments,
//! the first listed parent being the least significant bit. A network is
//! strictly positive when every entry lies in `[STRICT_EPSILON, 1 - STRICT_EPSILON]`.

use std::fmt::Write as _;
use std::path::Path;

use crate::bn::{BayesNet, Dag, Parametrization, MAX_NODES, STRICT_EPSILON};
use crate::{Error, Result};

/// The bundled four-node example network.
pub const FIGURE1_BN: &str = include_str!("../data/figure1.bn");

pub fn figure1_network() -> BayesNet {
    parse_bn(FIGURE1_BN).expect("bundled network parses")
}

pub fn read_bn(path: &Path) -> Result<BayesNet> {
    parse_bn(&std::fs::read_to_string(path)?)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct PendingNode {
    line: usize,
    parents: Vec<usize>,
    cpt: Option<Vec<f64>>,
}

pub fn parse_bn(text: &str) -> Result<BayesNet> {
    let mut n: Option<usize> = None;
    let mut nodes: Vec<Option<PendingNode>> = Vec::new();
    let mut current: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut words = content.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        let rest: Vec<&str> = words.collect();
        match keyword {
            "n" => {
                if n.is_some() {
                    return Err(parse_err(line, "node count given twice"));
                }
                let [v] = rest[..] else {
                    return Err(parse_err(line, "expected `n <count>`"));
                };
                let count: usize = v.parse().map_err(|_| parse_err(line, format!("bad node count `{v}`")))?;
                if count == 0 || count > MAX_NODES {
                    return Err(parse_err(line, format!("node count must be in 1..={MAX_NODES}")));
                }
                n = Some(count);
                nodes = (0..count).map(|_| None).collect();
            }
            "node" => {
                let count = n.ok_or_else(|| parse_err(line, "`n <count>` must come first"))?;
                if rest.len() < 2 || rest[1] != "parents" {
                    return Err(parse_err(line, "expected `node <i> parents <j...>`"));
                }
                let i: usize = rest[0].parse().map_err(|_| parse_err(line, format!("bad node index `{}`", rest[0])))?;
                if i >= count {
                    return Err(parse_err(line, format!("node {i} out of range")));
                }
                if nodes[i].is_some() {
                    return Err(parse_err(line, format!("node {i} declared twice")));
                }
                let mut parents = Vec::new();
                for w in &rest[2..] {
                    let p: usize = w.parse().map_err(|_| parse_err(line, format!("bad parent `{w}`")))?;
                    if p >= count || p == i {
                        return Err(parse_err(line, format!("invalid parent {p} of node {i}")));
                    }
                    if parents.contains(&p) {
                        return Err(parse_err(line, format!("parent {p} repeated")));
                    }
                    parents.push(p);
                }
                nodes[i] = Some(PendingNode { line, parents, cpt: None });
                current = Some(i);
            }
            "cpt" => {
                let i = current.ok_or_else(|| parse_err(line, "`cpt` without a preceding `node` line"))?;
                let node = nodes[i].as_mut().expect("declared node");
                if node.cpt.is_some() {
                    return Err(parse_err(line, format!("node {i} has two cpt lines")));
                }
                let mut values = Vec::with_capacity(rest.len());
                for w in &rest {
                    let v: f64 = w.parse().map_err(|_| parse_err(line, format!("bad probability `{w}`")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(parse_err(line, format!("probability {v} outside [0, 1]")));
                    }
                    values.push(v);
                }
                let want = 1usize << node.parents.len();
                if values.len() != want {
                    return Err(parse_err(line, format!("node {i} needs {want} entries, got {}", values.len())));
                }
                node.cpt = Some(values);
            }
            other => return Err(parse_err(line, format!("unknown keyword `{other}`"))),
        }
    }

    let last = text.lines().count().max(1);
    let count = n.ok_or_else(|| parse_err(last, "missing `n <count>` line"))?;
    let mut parents = Vec::with_capacity(count);
    let mut listed = Vec::with_capacity(count);
    for (i, node) in nodes.into_iter().enumerate() {
        let node = node.ok_or_else(|| parse_err(last, format!("node {i} never declared")))?;
        let cpt = node.cpt.ok_or_else(|| parse_err(node.line, format!("node {i} has no cpt line")))?;
        parents.push(node.parents.clone());
        listed.push((node.line, node.parents, cpt));
    }
    let dag = Dag::new(count, parents).map_err(|e| match e {
        Error::Cyclic => parse_err(last, "the parent lists contain a cycle"),
        other => other,
    })?;
    let tables: Vec<Vec<f64>> = listed.into_iter().map(|(_, order, cpt)| to_sorted_order(&order, &cpt)).collect();
    let strict = tables.iter().flatten().all(|&v| (STRICT_EPSILON..=1.0 - STRICT_EPSILON).contains(&v));
    BayesNet::new(dag, Parametrization::new(tables), strict)
}

/// Re-indexes a table given in `listed` parent order to ascending parent order.
fn to_sorted_order(listed: &[usize], cpt: &[f64]) -> Vec<f64> {
    let mut sorted = listed.to_vec();
    sorted.sort_unstable();
    let pos: Vec<usize> = listed.iter().map(|p| sorted.iter().position(|q| q == p).expect("same set")).collect();
    (0..cpt.len())
        .map(|s| {
            let l = pos.iter().enumerate().fold(0usize, |acc, (k, &bit)| acc | (((s >> bit) & 1) << k));
            cpt[l]
        })
        .collect()
}

/// Serializes with parents in ascending order.
pub fn write_bn(net: &BayesNet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n {}", net.n());
    for i in 0..net.n() {
        let pa: Vec<String> = net.dag().parents(i).iter().map(|p| p.to_string()).collect();
        let cpt: Vec<String> = net.theta().table(i).iter().map(|v| format!("{v}")).collect();
        if pa.is_empty() {
            let _ = writeln!(out, "node {i} parents");
        } else {
            let _ = writeln!(out, "node {i} parents {}", pa.join(" "));
        }
        let _ = writeln!(out, "cpt {}", cpt.join(" "));
    }
    out
}
