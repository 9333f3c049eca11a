//! Ranked clique trees with separators, residuals and subtree variable sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{
    choose_elimination_order, find_cliques, max_cardinality_numbering, moralize, triangulate,
    Edge, EliminationOrder, UndirectedGraph,
};
use crate::network::BayesianNetwork;
use crate::scalar::Scalar;

pub type CliqueId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clique {
    /// Rank of the clique; roots of each component have the lowest rank in it.
    pub id: CliqueId,
    pub members: BTreeSet<String>,
    pub parent: Option<CliqueId>,
    /// Members shared with lower-ranked cliques (all of them lie in `parent`).
    pub separator: BTreeSet<String>,
    /// `members \ separator`.
    pub residual: BTreeSet<String>,
}

impl Clique {
    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Members joined by commas, e.g. `A,T`.
    pub fn label(&self) -> String {
        join(&self.members)
    }
}

impl fmt::Display for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label())
    }
}

pub(crate) fn join<'a>(names: impl IntoIterator<Item = &'a String>) -> String {
    names
        .into_iter()
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(",")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    cliques: Vec<Clique>,
    children: Vec<Vec<CliqueId>>,
    subtree: Vec<BTreeSet<String>>,
    fill_edges: Vec<Edge>,
}

impl CliqueTree {
    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn clique(&self, id: CliqueId) -> &Clique {
        &self.cliques[id]
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// Children of `id` in increasing rank.
    pub fn children(&self, id: CliqueId) -> &[CliqueId] {
        &self.children[id]
    }

    /// Every variable appearing in the subtree rooted at `id`.
    pub fn subtree(&self, id: CliqueId) -> &BTreeSet<String> {
        &self.subtree[id]
    }

    pub fn roots(&self) -> impl Iterator<Item = &Clique> {
        self.cliques.iter().filter(|c| c.is_root())
    }

    pub fn root_of(&self, mut id: CliqueId) -> CliqueId {
        while let Some(p) = self.cliques[id].parent {
            id = p;
        }
        id
    }

    /// Edges added by triangulation, if the tree came from [`compile`].
    pub fn fill_edges(&self) -> &[Edge] {
        &self.fill_edges
    }

    /// Lowest-ranked clique containing every name in `vars`.
    pub fn lowest_containing<'a>(&self, vars: impl IntoIterator<Item = &'a str> + Clone) -> Option<CliqueId> {
        self.cliques
            .iter()
            .find(|c| vars.clone().into_iter().all(|v| c.members.contains(v)))
            .map(|c| c.id)
    }
}

/// Ranks the maximal cliques of a chordal graph and links them into a tree
/// (a forest for disconnected graphs).
///
/// Cliques are ranked by the latest maximum-cardinality-search position of
/// any member, ties by the sorted member list. A clique's separator is its
/// overlap with all lower-ranked cliques; its parent is the highest-ranked
/// earlier clique containing that separator. An empty separator makes the
/// clique a component root.
pub fn order_cliques(cliques: Vec<BTreeSet<String>>, g: &UndirectedGraph) -> Result<CliqueTree> {
    let position: BTreeMap<String, usize> = max_cardinality_numbering(g)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    let key = |c: &BTreeSet<String>| -> (usize, Vec<String>) {
        let last = c.iter().map(|v| position.get(v).copied().unwrap_or(usize::MAX)).max();
        (last.unwrap_or(0), c.iter().cloned().collect())
    };
    let mut ranked = cliques;
    ranked.sort_by_key(|a| key(a));
    ranked.dedup();

    let mut out: Vec<Clique> = Vec::with_capacity(ranked.len());
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (id, members) in ranked.into_iter().enumerate() {
        let separator: BTreeSet<String> = members.intersection(&seen).cloned().collect();
        let residual: BTreeSet<String> = members.difference(&separator).cloned().collect();
        let parent = if separator.is_empty() {
            None
        } else {
            let p = out
                .iter()
                .rev()
                .find(|c| separator.is_subset(&c.members))
                .ok_or_else(|| Error::RunningIntersection {
                    clique: join(&members),
                    separator: separator.iter().cloned().collect(),
                })?;
            Some(p.id)
        };
        seen.extend(members.iter().cloned());
        out.push(Clique {
            id,
            members,
            parent,
            separator,
            residual,
        });
    }

    let mut children = vec![Vec::new(); out.len()];
    for c in &out {
        if let Some(p) = c.parent {
            children[p].push(c.id);
        }
    }
    let mut subtree: Vec<BTreeSet<String>> = out.iter().map(|c| c.members.clone()).collect();
    for id in (0..out.len()).rev() {
        if let Some(p) = out[id].parent {
            let below = subtree[id].clone();
            subtree[p].extend(below);
        }
    }
    Ok(CliqueTree {
        cliques: out,
        children,
        subtree,
        fill_edges: Vec::new(),
    })
}

/// Every intermediate product of compiling a network.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub moral: UndirectedGraph,
    pub order: EliminationOrder,
    pub triangulated: UndirectedGraph,
    pub tree: CliqueTree,
}

/// Moralizes, triangulates along `order` (greedy min-fill when `None`),
/// extracts the maximal cliques and ranks them into a clique tree.
pub fn compile<T: Scalar>(bn: &BayesianNetwork<T>, order: Option<&[String]>) -> Result<Compilation> {
    let moral = moralize(bn);
    let order = match order {
        Some(o) => EliminationOrder::new(o.to_vec(), &moral)?,
        None => choose_elimination_order(&moral),
    };
    let (triangulated, fill) = triangulate(&moral, &order);
    let cliques = find_cliques(&triangulated, &order);
    let mut tree = order_cliques(cliques, &triangulated)?;
    tree.fill_edges = fill;
    Ok(Compilation {
        moral,
        order,
        triangulated,
        tree,
    })
}
