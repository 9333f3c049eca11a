use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::factor::{Factor, VarRef};
use crate::scalar::Scalar;
use crate::variable::Variable;

/// Each CPT row must sum to one within this tolerance (widened for
/// backends coarser than `f64`).
pub const CPT_TOLERANCE: f64 = 1e-9;

fn row_tolerance<T: Scalar>() -> f64 {
    CPT_TOLERANCE.max(64.0 * T::epsilon())
}

/// A discrete Bayesian network: variables, their parents, and one
/// conditional probability table per variable with scope `[parents.., child]`.
#[derive(Debug, Clone)]
pub struct BayesianNetwork<T> {
    variables: Vec<VarRef>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    cpts: Vec<Factor<T>>,
}

impl<T: Scalar> BayesianNetwork<T> {
    pub fn builder() -> NetworkBuilder<T> {
        NetworkBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[VarRef] {
        &self.variables
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.variables.iter().map(|v| v.name())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn variable(&self, name: &str) -> Result<&VarRef> {
        self.index_of(name)
            .map(|i| &self.variables[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn parents(&self, name: &str) -> Result<Vec<&str>> {
        let i = self
            .index_of(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(self.parents[i]
            .iter()
            .map(|&p| self.variables[p].name())
            .collect())
    }

    pub fn cpt(&self, name: &str) -> Result<&Factor<T>> {
        self.index_of(name)
            .map(|i| &self.cpts[i])
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn cpts(&self) -> &[Factor<T>] {
        &self.cpts
    }

    /// Variables in an order where every parent precedes its children.
    pub fn topological_order(&self) -> Vec<&str> {
        topo_sort(&self.parents)
            .expect("validated acyclic")
            .into_iter()
            .map(|i| self.variables[i].name())
            .collect()
    }
}

fn topo_sort(parents: &[Vec<usize>]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut out = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        out.push(v);
        for &c in children[v].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if out.len() == n {
        Ok(out)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

#[derive(Debug, Clone)]
pub struct NetworkBuilder<T> {
    variables: Vec<VarRef>,
    index: HashMap<String, usize>,
    cpts: Vec<Option<(Vec<usize>, Vec<T>)>>,
}

impl<T: Scalar> Default for NetworkBuilder<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> NetworkBuilder<T> {
    pub fn new() -> Self {
        NetworkBuilder {
            variables: Vec::new(),
            index: HashMap::new(),
            cpts: Vec::new(),
        }
    }

    pub fn variable(&mut self, var: Variable) -> Result<&mut Self> {
        if self.index.contains_key(var.name()) {
            return Err(Error::InvalidNetwork(format!(
                "variable `{}` declared twice",
                var.name()
            )));
        }
        self.index.insert(var.name().to_string(), self.variables.len());
        self.variables.push(Arc::new(var));
        self.cpts.push(None);
        Ok(self)
    }

    /// Sets the table of `child` given `parents`. `values` is row-major over
    /// `[parents.., child]`, child fastest.
    pub fn cpt<S: AsRef<str>>(&mut self, child: &str, parents: &[S], values: Vec<T>) -> Result<&mut Self> {
        let c = *self
            .index
            .get(child)
            .ok_or_else(|| Error::UnknownVariable(child.to_string()))?;
        let mut ps = Vec::with_capacity(parents.len());
        for p in parents {
            let i = *self
                .index
                .get(p.as_ref())
                .ok_or_else(|| Error::UnknownVariable(p.as_ref().to_string()))?;
            if i == c || ps.contains(&i) {
                return Err(Error::InvalidNetwork(format!(
                    "`{}` listed twice in the family of `{child}`",
                    p.as_ref()
                )));
            }
            ps.push(i);
        }
        if self.cpts[c].is_some() {
            return Err(Error::InvalidNetwork(format!("`{child}` has two CPTs")));
        }
        self.cpts[c] = Some((ps, values));
        Ok(self)
    }

    pub fn build(&self) -> Result<BayesianNetwork<T>> {
        let mut parents = Vec::with_capacity(self.variables.len());
        let mut cpts = Vec::with_capacity(self.variables.len());
        for (i, slot) in self.cpts.iter().enumerate() {
            let var = &self.variables[i];
            let (ps, values) = slot.as_ref().ok_or_else(|| {
                Error::InvalidNetwork(format!("`{}` has no CPT", var.name()))
            })?;
            let mut scope: Vec<VarRef> = ps.iter().map(|&p| self.variables[p].clone()).collect();
            scope.push(var.clone());
            let table = Factor::new(scope, values.clone()).map_err(|e| {
                Error::InvalidNetwork(format!("CPT of `{}`: {e}", var.name()))
            })?;
            let card = var.cardinality();
            for (row, chunk) in table.values().chunks(card).enumerate() {
                let sum: f64 = chunk.iter().map(Scalar::as_f64).sum();
                if (sum - 1.0).abs() > row_tolerance::<T>() {
                    return Err(Error::InvalidNetwork(format!(
                        "CPT of `{}` row {row} sums to {sum}",
                        var.name()
                    )));
                }
            }
            parents.push(ps.clone());
            cpts.push(table);
        }
        if let Err(cycle) = topo_sort(&parents) {
            return Err(Error::Cycle(
                cycle
                    .into_iter()
                    .map(|i| self.variables[i].name().to_string())
                    .collect(),
            ));
        }
        Ok(BayesianNetwork {
            variables: self.variables.clone(),
            index: self.index.clone(),
            parents,
            cpts,
        })
    }
}
