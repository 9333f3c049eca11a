//! Moral graph construction, fill-in and clique extraction.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::network::BayesianNetwork;
use crate::scalar::Scalar;

pub type Edge = (String, String);

fn edge(a: &str, b: &str) -> Edge {
    if a < b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: BTreeMap<String, BTreeSet<String>>,
}

impl UndirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: &str) {
        self.adj.entry(v.to_string()).or_default();
    }

    /// Adds `a - b`, creating missing endpoints. Self-loops are ignored.
    /// Returns `true` if the edge is new.
    pub fn add_edge(&mut self, a: &str, b: &str) -> bool {
        if a == b {
            self.add_vertex(a);
            return false;
        }
        self.add_vertex(b);
        let fresh = self.adj.entry(a.to_string()).or_default().insert(b.to_string());
        self.adj.get_mut(b).expect("added").insert(a.to_string());
        fresh
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.adj.get(a).is_some_and(|n| n.contains(b))
    }

    pub fn contains(&self, v: &str) -> bool {
        self.adj.contains_key(v)
    }

    pub fn neighbors(&self, v: &str) -> impl Iterator<Item = &str> {
        self.adj.get(v).into_iter().flatten().map(String::as_str)
    }

    pub fn degree(&self, v: &str) -> usize {
        self.adj.get(v).map_or(0, BTreeSet::len)
    }

    /// Vertices in lexicographic order.
    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.adj.keys().map(String::as_str)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    /// Edges as `(smaller, larger)` name pairs, sorted.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (a, ns) in &self.adj {
            for b in ns {
                if a < b {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.values().map(BTreeSet::len).sum::<usize>() / 2
    }
}

/// Connects every variable to its parents, marries co-parents, and drops
/// arc directions.
pub fn moralize<T: Scalar>(bn: &BayesianNetwork<T>) -> UndirectedGraph {
    let mut g = UndirectedGraph::new();
    for v in bn.names() {
        g.add_vertex(v);
    }
    for v in bn.names() {
        let parents = bn.parents(v).expect("own variable");
        for (i, p) in parents.iter().enumerate() {
            g.add_edge(v, p);
            for q in &parents[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// A permutation of a graph's vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder(Vec<String>);

impl EliminationOrder {
    /// Validates that `order` lists every vertex of `g` exactly once.
    pub fn new(order: Vec<String>, g: &UndirectedGraph) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &order {
            if !g.contains(v) {
                return Err(Error::InvalidOrder(format!("unknown variable `{v}`")));
            }
            if !seen.insert(v.as_str()) {
                return Err(Error::InvalidOrder(format!("`{v}` listed twice")));
            }
        }
        if let Some(missing) = g.vertices().find(|v| !seen.contains(v)) {
            return Err(Error::InvalidOrder(format!("`{missing}` is missing")));
        }
        Ok(EliminationOrder(order))
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Number of edges eliminating `v` from `g` would add.
pub fn fill_cost(g: &UndirectedGraph, v: &str) -> usize {
    let ns: Vec<&str> = g.neighbors(v).collect();
    let mut cost = 0;
    for (i, a) in ns.iter().enumerate() {
        for b in &ns[i + 1..] {
            if !g.has_edge(a, b) {
                cost += 1;
            }
        }
    }
    cost
}

fn eliminate(g: &mut UndirectedGraph, v: &str) -> Vec<Edge> {
    let ns: Vec<String> = g.neighbors(v).map(str::to_string).collect();
    let mut fill = Vec::new();
    for (i, a) in ns.iter().enumerate() {
        for b in &ns[i + 1..] {
            if g.add_edge(a, b) {
                fill.push(edge(a, b));
            }
        }
    }
    for n in &ns {
        g.adj.get_mut(n).expect("neighbor").remove(v);
    }
    g.adj.remove(v);
    fill
}

/// Greedy min-fill: repeatedly eliminates the vertex adding the fewest fill
/// edges, breaking ties by the lexicographically smallest name.
pub fn choose_elimination_order(g: &UndirectedGraph) -> EliminationOrder {
    let mut work = g.clone();
    let mut order = Vec::with_capacity(g.vertex_count());
    while work.vertex_count() > 0 {
        // vertices() is sorted, and min_by_key keeps the first minimum
        let v = work
            .vertices()
            .min_by_key(|v| fill_cost(&work, v))
            .expect("non-empty")
            .to_string();
        eliminate(&mut work, &v);
        order.push(v);
    }
    EliminationOrder(order)
}

/// Simulates elimination along `order`, returning the triangulated graph and
/// the fill edges it needed (sorted).
pub fn triangulate(g: &UndirectedGraph, order: &EliminationOrder) -> (UndirectedGraph, Vec<Edge>) {
    let mut work = g.clone();
    let mut out = g.clone();
    let mut fill = Vec::new();
    for v in order.as_slice() {
        for (a, b) in eliminate(&mut work, v) {
            out.add_edge(&a, &b);
            fill.push((a, b));
        }
    }
    fill.sort();
    (out, fill)
}

/// Maximal cliques of a triangulated graph, read off as the closed
/// elimination neighbourhood of each vertex along `order`.
pub fn find_cliques(g: &UndirectedGraph, order: &EliminationOrder) -> Vec<BTreeSet<String>> {
    let pos: BTreeMap<&str, usize> = order
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut candidates: Vec<BTreeSet<String>> = Vec::new();
    for (i, v) in order.as_slice().iter().enumerate() {
        let mut c: BTreeSet<String> = g
            .neighbors(v)
            .filter(|n| pos.get(n).is_some_and(|&p| p > i))
            .map(str::to_string)
            .collect();
        c.insert(v.clone());
        candidates.push(c);
    }
    let mut out: Vec<BTreeSet<String>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && c.is_subset(d) && (c.len() < d.len() || j < i));
        if !dominated {
            out.push(c.clone());
        }
    }
    out
}

/// Maximum cardinality search: vertices in visiting order. Each step takes
/// the unvisited vertex with the most visited neighbours, smallest name on
/// ties.
pub fn max_cardinality_numbering(g: &UndirectedGraph) -> Vec<String> {
    let mut weight: BTreeMap<&str, usize> = g.vertices().map(|v| (v, 0)).collect();
    let mut out = Vec::with_capacity(weight.len());
    while !weight.is_empty() {
        let mut best: Option<(&str, usize)> = None;
        for (&v, &w) in &weight {
            if best.is_none_or(|(_, bw)| w > bw) {
                best = Some((v, w));
            }
        }
        let (v, _) = best.expect("non-empty");
        weight.remove(v);
        for n in g.neighbors(v) {
            if let Some(w) = weight.get_mut(n) {
                *w += 1;
            }
        }
        out.push(v.to_string());
    }
    out
}
