//! Exhaustive DAG enumeration, Markov equivalence classes and the complete
//! graphs used by the ideal-case analysis.

use std::collections::HashMap;

use serde::Serialize;

use crate::bn::Dag;
use crate::{Error, Result};

/// Largest node count accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 5;

/// Undirected edges `(i, j)` with `i < j`.
pub type Skeleton = Vec<(usize, usize)>;

/// A collider `i -> k <- j` stored as `(i, k, j)` with `i < j`.
pub type VStructure = (usize, usize, usize);

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceClass {
    pub skeleton: Skeleton,
    pub v_structures: Vec<VStructure>,
    /// Indices of the member DAGs in the list the classes were built from.
    pub members: Vec<usize>,
    pub representative: Dag,
}

impl EquivalenceClass {
    pub fn dimension(&self) -> usize {
        self.representative.dimension()
    }
}

/// Every labeled DAG on `n` nodes, ordered lexicographically by sorted edge list.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    if n == 0 || n > MAX_ENUMERATION_NODES {
        return Err(Error::Capacity(format!("DAG enumeration supports 1..={MAX_ENUMERATION_NODES} nodes, got {n}")));
    }
    let candidates: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let mut parents = vec![0u32; n];
    let mut found = Vec::new();
    extend(&candidates, 0, &mut parents, &mut found);

    let mut dags: Vec<(Vec<(usize, usize)>, Dag)> = found
        .into_iter()
        .map(|masks| {
            let dag = Dag::from_parent_masks(&masks).expect("enumerated graph is acyclic");
            (dag.edges(), dag)
        })
        .collect();
    dags.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(dags.into_iter().map(|(_, d)| d).collect())
}

fn extend(edges: &[(usize, usize)], next: usize, parents: &mut [u32], out: &mut Vec<Vec<u32>>) {
    if next == edges.len() {
        out.push(parents.to_vec());
        return;
    }
    extend(edges, next + 1, parents, out);
    let (from, to) = edges[next];
    // adding from->to closes a cycle iff `from` is reachable from `to`
    if !reaches(parents, to, from) {
        parents[to] |= 1 << from;
        extend(edges, next + 1, parents, out);
        parents[to] &= !(1 << from);
    }
}

fn reaches(parents: &[u32], start: usize, target: usize) -> bool {
    let mut seen = 1u32 << start;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        if v == target {
            return true;
        }
        for (child, &pm) in parents.iter().enumerate() {
            if pm & (1 << v) != 0 && seen & (1 << child) == 0 {
                seen |= 1 << child;
                stack.push(child);
            }
        }
    }
    false
}

pub fn skeleton(g: &Dag) -> Skeleton {
    let mut s: Skeleton = g.edges().into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
    s.sort_unstable();
    s
}

pub fn v_structures(g: &Dag) -> Vec<VStructure> {
    let mut out = Vec::new();
    for k in 0..g.n() {
        let pa = g.parents(k);
        for (a, &i) in pa.iter().enumerate() {
            for &j in &pa[a + 1..] {
                if !g.has_edge(i, j) && !g.has_edge(j, i) {
                    out.push((i, k, j));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Partitions `dags` by (skeleton, v-structures). Classes appear in the order
/// of their first member.
pub fn equivalence_classes(dags: &[Dag]) -> Vec<EquivalenceClass> {
    let mut index: HashMap<(Skeleton, Vec<VStructure>), usize> = HashMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for (id, g) in dags.iter().enumerate() {
        let key = (skeleton(g), v_structures(g));
        match index.get(&key) {
            Some(&c) => classes[c].members.push(id),
            None => {
                index.insert(key.clone(), classes.len());
                classes.push(EquivalenceClass {
                    skeleton: key.0,
                    v_structures: key.1,
                    members: vec![id],
                    representative: g.clone(),
                });
            }
        }
    }
    classes
}

/// Index of the class containing a DAG equivalent to `g`.
pub fn class_of(classes: &[EquivalenceClass], g: &Dag) -> Option<usize> {
    let sk = skeleton(g);
    let vs = v_structures(g);
    classes.iter().position(|c| c.skeleton == sk && c.v_structures == vs)
}

/// `sum_i 2^{|Pa(i)|}`.
pub fn graph_dimension(g: &Dag) -> usize {
    g.dimension()
}

/// Same skeleton and same v-structures.
pub fn markov_equivalent(g1: &Dag, g2: &Dag) -> bool {
    g1.n() == g2.n() && skeleton(g1) == skeleton(g2) && v_structures(g1) == v_structures(g2)
}

fn check_permutation(order: &[usize]) -> Result<()> {
    let mut seen = vec![false; order.len()];
    for &v in order {
        if v >= order.len() || std::mem::replace(&mut seen[v], true) {
            return Err(Error::invalid(format!("{order:?} is not a permutation")));
        }
    }
    Ok(())
}

/// The complete DAG in which every node precedes all later nodes of `order`.
pub fn complete_dag(order: &[usize]) -> Result<Dag> {
    check_permutation(order)?;
    let mut parents = vec![Vec::new(); order.len()];
    for (pos, &v) in order.iter().enumerate() {
        parents[v] = order[..pos].to_vec();
    }
    Dag::new(order.len(), parents)
}

/// [`complete_dag`] without the edge `from -> to`; `from` must precede `to`.
pub fn complete_minus_edge(order: &[usize], from: usize, to: usize) -> Result<Dag> {
    check_permutation(order)?;
    let pos = |v: usize| order.iter().position(|&x| x == v);
    match (pos(from), pos(to)) {
        (Some(a), Some(b)) if a < b => Ok(complete_dag(order)?.without_edge(from, to)),
        _ => Err(Error::invalid(format!("node {from} does not precede node {to} in {order:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_count(n: usize) -> usize {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        (0u32..1 << pairs.len())
            .filter(|mask| {
                let edges: Vec<_> =
                    pairs.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &e)| e).collect();
                Dag::from_edges(n, &edges).is_ok()
            })
            .count()
    }

    #[test]
    fn dag_counts() {
        assert_eq!(enumerate_dags(1).unwrap().len(), 1);
        assert_eq!(enumerate_dags(2).unwrap().len(), 3);
        assert_eq!(brute_force_count(3), 25);
        assert_eq!(enumerate_dags(3).unwrap().len(), 25);
        assert_eq!(enumerate_dags(4).unwrap().len(), 543);
        assert!(enumerate_dags(6).unwrap_err().is_capacity());
        assert!(enumerate_dags(0).is_err());
    }

    #[test]
    fn class_counts() {
        for (n, want) in [(1, 1), (2, 2), (3, 11), (4, 185)] {
            let dags = enumerate_dags(n).unwrap();
            let classes = equivalence_classes(&dags);
            assert_eq!(classes.len(), want, "n={n}");
            assert_eq!(classes.iter().map(|c| c.members.len()).sum::<usize>(), dags.len());
        }
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        let dags = enumerate_dags(4).unwrap();
        for w in dags.windows(2) {
            assert!(w[0].edges() < w[1].edges());
        }
        assert_eq!(dags[0], Dag::empty(4));
    }

    #[test]
    fn dimension_constant_within_classes() {
        for n in 1..=4 {
            let dags = enumerate_dags(n).unwrap();
            for c in equivalence_classes(&dags) {
                let d = c.dimension();
                assert!(c.members.iter().all(|&m| dags[m].dimension() == d));
            }
        }
    }

    #[test]
    fn equivalence_examples() {
        let a = Dag::from_edges(2, &[(0, 1)]).unwrap();
        let b = Dag::from_edges(2, &[(1, 0)]).unwrap();
        assert!(markov_equivalent(&a, &b));
        let collider = Dag::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let chain = Dag::from_edges(3, &[(0, 2), (2, 1)]).unwrap();
        assert!(!markov_equivalent(&collider, &chain));
    }

    #[test]
    fn equivalence_matches_partition_on_three_nodes() {
        let dags = enumerate_dags(3).unwrap();
        let classes = equivalence_classes(&dags);
        let class_id: Vec<usize> =
            (0..dags.len()).map(|d| classes.iter().position(|c| c.members.contains(&d)).unwrap()).collect();
        for a in 0..dags.len() {
            for b in 0..dags.len() {
                assert_eq!(markov_equivalent(&dags[a], &dags[b]), class_id[a] == class_id[b]);
            }
        }
    }

    #[test]
    fn complete_graphs() {
        let c2 = complete_dag(&[0, 1]).unwrap();
        assert_eq!(c2.edges(), vec![(0, 1)]);
        assert_eq!(complete_dag(&[0, 1, 2, 3]).unwrap().dimension(), 15);
        assert_eq!(complete_minus_edge(&[0, 1], 0, 1).unwrap(), Dag::empty(2));
        assert!(complete_minus_edge(&[0, 1], 1, 0).is_err());
        assert!(complete_dag(&[0, 0]).is_err());

        let order = [0, 1, 2, 3];
        let full = complete_dag(&order).unwrap();
        for (i, j) in full.edges() {
            let g = complete_minus_edge(&order, i, j).unwrap();
            assert!(!g.has_edge(i, j));
            assert_eq!(g.edge_count(), 5);
            let pa = full.parents(j).len();
            assert_eq!(g.dimension(), 15 - (1 << (pa - 1)));
        }
    }

    #[test]
    fn figure_graph_dimensions() {
        let gstar = Dag::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(graph_dimension(&gstar), 9);
        assert_eq!(graph_dimension(&gstar.with_edge(0, 3).unwrap()), 13);
        assert_eq!(graph_dimension(&Dag::empty(4)), 4);
        let c = complete_dag(&gstar.topological_order()).unwrap();
        assert!(gstar.edges().iter().all(|&(a, b)| c.has_edge(a, b)));
    }
}
