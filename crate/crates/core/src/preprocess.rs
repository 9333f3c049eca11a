//! Per-clique distributions computed once after compilation: evidence
//! potentials, set-chain conditionals `P(R_i | S_i)` and clique marginals
//! `P(C_i)`.
//!
//! Multiplication order is fixed so repeated runs are bit-identical:
//! assigned CPTs are multiplied in variable-name order and child separator
//! potentials in child-rank order.

use std::collections::BTreeMap;

use crate::engine::CacheEntry;
use crate::error::{Error, Result};
use crate::factor::{Factor, VarRef};
use crate::network::BayesianNetwork;
use crate::scalar::Scalar;
use crate::tree::{CliqueId, CliqueTree};

#[derive(Debug, Clone)]
pub struct CliqueState<T> {
    pub clique_id: CliqueId,
    /// Product of the CPTs assigned to this clique, over all members.
    pub psi: Factor<T>,
    /// `P(R_i | S_i)`; for a root this is `P(C_i)`.
    pub set_chain: Factor<T>,
    pub marginal: Factor<T>,
    /// Variables whose CPTs were folded into `psi`, in multiplication order.
    pub assigned_cpts: Vec<String>,
    /// Total mass of the component for roots (1 for normalized CPTs).
    pub normalization: Option<T>,
    pub(crate) pristine_set_chain: Factor<T>,
    pub(crate) pristine_marginal: Factor<T>,
    pub(crate) cache: BTreeMap<Vec<String>, CacheEntry<T>>,
}

impl<T: Scalar> CliqueState<T> {
    pub fn cache(&self) -> impl Iterator<Item = &CacheEntry<T>> {
        self.cache.values()
    }
}

fn member_scope<T: Scalar>(bn: &BayesianNetwork<T>, tree: &CliqueTree, id: CliqueId) -> Result<Vec<VarRef>> {
    tree.clique(id)
        .members
        .iter()
        .map(|m| bn.variable(m).cloned())
        .collect()
}

/// Assigns each CPT to the lowest-ranked clique holding its whole family.
pub fn assign_cpts<T: Scalar>(bn: &BayesianNetwork<T>, tree: &CliqueTree) -> Result<BTreeMap<String, CliqueId>> {
    let mut out = BTreeMap::new();
    for v in bn.names() {
        let mut family = bn.parents(v)?;
        family.push(v);
        let id = tree.lowest_containing(family.iter().copied()).ok_or_else(|| {
            Error::Internal(format!("no clique contains the family of `{v}`"))
        })?;
        out.insert(v.to_string(), id);
    }
    Ok(out)
}

/// Evidence potential of every clique: the product of its assigned CPTs,
/// extended with ones over the remaining members.
pub fn compute_potentials<T: Scalar>(
    bn: &BayesianNetwork<T>,
    tree: &CliqueTree,
    assignment: &BTreeMap<String, CliqueId>,
) -> Result<Vec<Factor<T>>> {
    let mut psi = Vec::with_capacity(tree.len());
    for c in tree.cliques() {
        let mut acc = Factor::ones(member_scope(bn, tree, c.id)?)?;
        // BTreeMap iterates in name order
        for (v, _) in assignment.iter().filter(|(_, &id)| id == c.id) {
            acc = acc.multiply(bn.cpt(v)?)?;
        }
        psi.push(acc);
    }
    Ok(psi)
}

/// Set-chain conditionals and root normalizations.
#[derive(Debug, Clone)]
pub struct UpwardResult<T> {
    pub set_chains: Vec<Factor<T>>,
    pub normalizations: Vec<Option<T>>,
}

/// Processes cliques from the highest rank down: sums each (updated)
/// potential over its residual to get the separator potential, divides it
/// out to obtain `P(R_i | S_i)`, and multiplies it into the parent.
pub fn upward_pass<T: Scalar>(tree: &CliqueTree, potentials: &[Factor<T>]) -> Result<UpwardResult<T>> {
    let n = tree.len();
    let mut pending: Vec<Vec<(CliqueId, Factor<T>)>> = vec![Vec::new(); n];
    let mut set_chains: Vec<Option<Factor<T>>> = vec![None; n];
    let mut normalizations = vec![None; n];
    for id in (0..n).rev() {
        let clique = tree.clique(id);
        let mut psi = potentials[id].clone();
        let mut incoming = std::mem::take(&mut pending[id]);
        incoming.sort_by_key(|(child, _)| *child);
        for (_, lambda) in &incoming {
            psi = psi.multiply(lambda)?;
        }
        let residual: Vec<&String> = clique.residual.iter().collect();
        let lambda = psi.sum_out(&residual)?;
        set_chains[id] = Some(psi.divide(&lambda)?);
        match clique.parent {
            Some(p) => pending[p].push((id, lambda)),
            None => normalizations[id] = Some(lambda.values()[0].clone()),
        }
    }
    Ok(UpwardResult {
        set_chains: set_chains.into_iter().map(|f| f.expect("every clique visited")).collect(),
        normalizations,
    })
}

/// Clique marginals in increasing rank: a root's set-chain already is its
/// marginal; a child multiplies its set-chain by the parent's marginal
/// summed down to the separator.
pub fn downward_pass<T: Scalar>(tree: &CliqueTree, set_chains: &[Factor<T>]) -> Result<Vec<Factor<T>>> {
    let mut marginals: Vec<Factor<T>> = Vec::with_capacity(tree.len());
    for c in tree.cliques() {
        let m = match c.parent {
            None => set_chains[c.id].clone(),
            Some(p) => {
                let sep: Vec<&String> = c.separator.iter().collect();
                let p_sep = marginals[p].marginal(&sep)?;
                set_chains[c.id].multiply(&p_sep)?
            }
        };
        marginals.push(m);
    }
    Ok(marginals)
}

/// `P(v)` for every variable, read from the lowest-ranked clique holding it.
pub fn node_marginals<T: Scalar>(
    bn: &BayesianNetwork<T>,
    tree: &CliqueTree,
    marginals: &[Factor<T>],
) -> Result<BTreeMap<String, Factor<T>>> {
    let mut out = BTreeMap::new();
    for v in bn.names() {
        let id = tree
            .lowest_containing([v])
            .ok_or_else(|| Error::Internal(format!("`{v}` is in no clique")))?;
        out.insert(v.to_string(), marginals[id].marginal(&[v])?);
    }
    Ok(out)
}

/// Runs the whole pre-processing pipeline.
pub fn preprocess<T: Scalar>(bn: &BayesianNetwork<T>, tree: &CliqueTree) -> Result<Vec<CliqueState<T>>> {
    let assignment = assign_cpts(bn, tree)?;
    let psi = compute_potentials(bn, tree, &assignment)?;
    let up = upward_pass(tree, &psi)?;
    let marginals = downward_pass(tree, &up.set_chains)?;
    let states = psi
        .into_iter()
        .zip(up.set_chains)
        .zip(marginals)
        .zip(up.normalizations)
        .enumerate()
        .map(|(id, (((psi, set_chain), marginal), normalization))| CliqueState {
            clique_id: id,
            assigned_cpts: assignment
                .iter()
                .filter(|(_, &c)| c == id)
                .map(|(v, _)| v.clone())
                .collect(),
            pristine_set_chain: set_chain.clone(),
            pristine_marginal: marginal.clone(),
            psi,
            set_chain,
            marginal,
            normalization,
            cache: BTreeMap::new(),
        })
        .collect();
    Ok(states)
}
