//! Goal-directed query answering over a preprocessed clique tree.
//!
//! A query for the joint `P(Z)` is sent to each component root and split
//! down the tree: a clique asked for `P(X | S_i)` keeps the targets in its
//! residual, forwards `X ∩ T(child)` (minus its own members) to each child
//! that the request touches, multiplies the child answers with its stored
//! `P(R_i | S_i)` and sums out the residual variables nobody asked for.
//! Answers are cached per `(clique, target set)`.
//!
//! Evidence is absorbed by substitution: every stored table and cache entry
//! mentioning the observed variable is sliced at the observed state. After
//! that, queries return the evidence-scaled joint `P(Z, e)`; the conditional
//! entry point normalizes.
//!
//! An [`Engine`] is a single-threaded actor: queries take `&mut self`
//! because they fill the cache. The whole engine is `Send` and can be moved
//! between threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::network::BayesianNetwork;
use crate::preprocess::{node_marginals, preprocess, CliqueState};
use crate::scalar::Scalar;
use crate::tree::{compile, CliqueId, CliqueTree, Compilation};

/// Work done by the three primitive operations plus cache traffic.
///
/// `multiplications` counts scalar products (one per cell of every product
/// table), `summations` counts scalar additions (input cells minus output
/// cells of every marginalization), and `substitutions` counts tables
/// sliced at an observed value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub multiplications: u64,
    pub summations: u64,
    pub substitutions: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

impl OpCounters {
    /// Counts accumulated after `earlier` was taken.
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            multiplications: self.multiplications - earlier.multiplications,
            summations: self.summations - earlier.summations,
            substitutions: self.substitutions - earlier.substitutions,
            cache_hits: self.cache_hits - earlier.cache_hits,
            cache_misses: self.cache_misses - earlier.cache_misses,
        }
    }

    pub fn multiply<T: Scalar>(&mut self, f: &Factor<T>, g: &Factor<T>) -> Result<Factor<T>> {
        let out = f.multiply(g)?;
        self.multiplications += out.len() as u64;
        Ok(out)
    }

    pub fn sum_out<T: Scalar, S: AsRef<str>>(&mut self, f: &Factor<T>, vars: &[S]) -> Result<Factor<T>> {
        let out = f.sum_out(vars)?;
        self.summations += (f.len() - out.len()) as u64;
        Ok(out)
    }

    pub fn substitute<T: Scalar>(&mut self, f: &Factor<T>, var: &str, state: usize) -> Result<Factor<T>> {
        let out = f.substitute(var, state)?;
        self.substitutions += 1;
        Ok(out)
    }
}

impl fmt::Display for OpCounters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "multiplications={} summations={} substitutions={} cache_hits={} cache_misses={}",
            self.multiplications, self.summations, self.substitutions, self.cache_hits, self.cache_misses
        )
    }
}

/// `P(targets | given)` with optional evidence that holds only for this query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub targets: Vec<String>,
    pub given: Vec<String>,
    pub evidence: Vec<(String, usize)>,
}

impl Query {
    pub fn joint<S: AsRef<str>>(targets: &[S]) -> Self {
        Query {
            targets: targets.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Query::default()
        }
    }

    pub fn conditional<S: AsRef<str>, U: AsRef<str>>(targets: &[S], given: &[U]) -> Self {
        Query {
            targets: targets.iter().map(|s| s.as_ref().to_string()).collect(),
            given: given.iter().map(|s| s.as_ref().to_string()).collect(),
            evidence: Vec::new(),
        }
    }

    pub fn with_evidence(mut self, var: impl Into<String>, state: usize) -> Self {
        self.evidence.push((var.into(), state));
        self
    }
}

/// Observed states, remembered in assertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvidenceSet {
    bindings: BTreeMap<String, usize>,
    applied_order: Vec<String>,
}

impl EvidenceSet {
    pub fn get(&self, var: &str) -> Option<usize> {
        self.bindings.get(var).copied()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.bindings.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// `(variable, state)` pairs in the order they were asserted.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.applied_order
            .iter()
            .map(|v| (v.as_str(), self.bindings[v]))
    }

    fn insert(&mut self, var: &str, state: usize) {
        self.bindings.insert(var.to_string(), state);
        self.applied_order.push(var.to_string());
    }

    fn remove(&mut self, var: &str) {
        self.bindings.remove(var);
        self.applied_order.retain(|v| v != var);
    }
}

/// A cached answer `P(targets, e_below | S_i)` at one clique.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry<T> {
    pub clique: CliqueId,
    /// Sorted target names.
    pub targets: Vec<String>,
    pub answer: Factor<T>,
    pub evidence_version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// Served from the cache.
    CacheHit,
    /// The stored set-chain conditional already is the answer.
    Stored,
    /// Combined from child answers and the set-chain conditional.
    Computed,
}

/// One request received by a clique during a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub depth: usize,
    pub clique: CliqueId,
    pub clique_label: String,
    pub targets: Vec<String>,
    pub given: Vec<String>,
    pub resolution: Resolution,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let targets = if self.targets.is_empty() {
            "evidence".to_string()
        } else {
            self.targets.join(",")
        };
        write!(f, "{}({}) <- P({}", "  ".repeat(self.depth), self.clique_label, targets)?;
        if !self.given.is_empty() {
            write!(f, " | {}", self.given.join(","))?;
        }
        f.write_str(")")?;
        match self.resolution {
            Resolution::CacheHit => f.write_str(" [cached]"),
            Resolution::Stored => f.write_str(" [stored]"),
            Resolution::Computed => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Engine<T> {
    network: BayesianNetwork<T>,
    compilation: Compilation,
    states: Vec<CliqueState<T>>,
    evidence: EvidenceSet,
    evidence_version: u64,
    counters: OpCounters,
    caching: bool,
}

impl<T: Scalar> Engine<T> {
    /// Compiles with the greedy min-fill order and preprocesses.
    pub fn new(network: BayesianNetwork<T>) -> Result<Self> {
        Self::with_order(network, None)
    }

    /// Compiles along a caller-supplied elimination order (min-fill when
    /// `None`) and preprocesses.
    pub fn with_order(network: BayesianNetwork<T>, order: Option<&[String]>) -> Result<Self> {
        let compilation = compile(&network, order)?;
        let states = preprocess(&network, &compilation.tree)?;
        Ok(Engine {
            network,
            compilation,
            states,
            evidence: EvidenceSet::default(),
            evidence_version: 0,
            counters: OpCounters::default(),
            caching: true,
        })
    }

    pub fn network(&self) -> &BayesianNetwork<T> {
        &self.network
    }

    pub fn tree(&self) -> &CliqueTree {
        &self.compilation.tree
    }

    pub fn compilation(&self) -> &Compilation {
        &self.compilation
    }

    pub fn states(&self) -> &[CliqueState<T>] {
        &self.states
    }

    pub fn evidence(&self) -> &EvidenceSet {
        &self.evidence
    }

    pub fn evidence_version(&self) -> u64 {
        self.evidence_version
    }

    pub fn op_counters(&self) -> OpCounters {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = OpCounters::default();
    }

    pub fn caching(&self) -> bool {
        self.caching
    }

    /// Turns answer caching on or off. Existing entries are dropped.
    pub fn set_caching(&mut self, enabled: bool) {
        self.caching = enabled;
        self.clear_cache();
    }

    pub fn clear_cache(&mut self) {
        for s in &mut self.states {
            s.cache.clear();
        }
    }

    pub fn cache_len(&self) -> usize {
        self.states.iter().map(|s| s.cache.len()).sum()
    }

    fn check_queryable(&self, names: &[String]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for n in names {
            self.network.variable(n)?;
            if self.evidence.contains(n) {
                return Err(Error::Observed(n.clone()));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidQuery(format!("`{n}` named twice")));
            }
        }
        Ok(())
    }

    /// `P(targets)`, or `P(targets, e)` when evidence is asserted. The result
    /// scope follows the order of `targets`.
    pub fn query_joint<S: AsRef<str>>(&mut self, targets: &[S]) -> Result<Factor<T>> {
        self.query_joint_traced(targets).map(|(f, _)| f)
    }

    /// Like [`Engine::query_joint`], also returning every request the
    /// cliques received, in visiting order.
    pub fn query_joint_traced<S: AsRef<str>>(&mut self, targets: &[S]) -> Result<(Factor<T>, Vec<TraceEvent>)> {
        let targets: Vec<String> = targets.iter().map(|s| s.as_ref().to_string()).collect();
        if targets.is_empty() {
            return Err(Error::InvalidQuery("no target variables".into()));
        }
        self.check_queryable(&targets)?;
        let mut trace = Vec::new();
        let f = self.joint(&targets, &mut trace)?;
        Ok((f, trace))
    }

    /// Probability of the current evidence (1 without evidence).
    pub fn evidence_probability(&mut self) -> Result<T> {
        let f = self.joint(&[], &mut Vec::new())?;
        Ok(f.total())
    }

    /// `P(targets, e_below | S_id)` computed at clique `id`; `targets` must lie
    /// in the clique's subtree and avoid its separator.
    pub fn resolve_at_clique<S: AsRef<str>>(&mut self, id: CliqueId, targets: &[S]) -> Result<Factor<T>> {
        if id >= self.tree().len() {
            return Err(Error::Internal(format!("no clique with id {id}")));
        }
        let targets: Vec<String> = targets.iter().map(|s| s.as_ref().to_string()).collect();
        self.check_queryable(&targets)?;
        self.resolve(id, targets, 0, &mut Vec::new())
    }

    fn evidence_below(&self, id: CliqueId) -> bool {
        let clique = self.tree().clique(id);
        let sub = self.tree().subtree(id);
        self.evidence
            .bindings
            .keys()
            .any(|v| sub.contains(v) && !clique.separator.contains(v))
    }

    fn joint(&mut self, targets: &[String], trace: &mut Vec<TraceEvent>) -> Result<Factor<T>> {
        let roots: Vec<CliqueId> = self.tree().roots().map(|c| c.id).collect();
        let mut acc: Option<Factor<T>> = None;
        for root in roots {
            let sub: Vec<String> = targets
                .iter()
                .filter(|t| self.tree().subtree(root).contains(*t))
                .cloned()
                .collect();
            if sub.is_empty() && !self.evidence_below(root) {
                continue;
            }
            let answer = self.resolve(root, sub, 0, trace)?;
            acc = Some(match acc {
                None => answer,
                Some(a) => self.counters.multiply(&a, &answer)?,
            });
        }
        let f = acc.unwrap_or_else(|| Factor::scalar(T::one()));
        f.permuted(targets)
    }

    /// Answers `P(targets, e_below | S_id)` at clique `id`.
    fn resolve(
        &mut self,
        id: CliqueId,
        targets: Vec<String>,
        depth: usize,
        trace: &mut Vec<TraceEvent>,
    ) -> Result<Factor<T>> {
        let clique = self.compilation.tree.clique(id).clone();
        if let Some(t) = targets.iter().find(|t| !self.tree().subtree(id).contains(*t) || clique.separator.contains(*t)) {
            return Err(Error::Internal(format!(
                "`{t}` routed to clique ({}) outside its reach",
                clique.label()
            )));
        }
        let mut key = targets.clone();
        key.sort();
        let slot = trace.len();
        trace.push(TraceEvent {
            depth,
            clique: id,
            clique_label: clique.label(),
            given: clique
                .separator
                .iter()
                .filter(|v| !self.evidence.contains(v))
                .cloned()
                .collect(),
            targets: targets.clone(),
            resolution: Resolution::Computed,
        });

        if self.caching {
            if let Some(hit) = self.states[id].cache.get(&key) {
                self.counters.cache_hits += 1;
                trace[slot].resolution = Resolution::CacheHit;
                return Ok(hit.answer.clone());
            }
            self.counters.cache_misses += 1;
        }

        let mut child_answers = Vec::new();
        for &child in self.compilation.tree.children(id).to_vec().iter() {
            let sub: Vec<String> = targets
                .iter()
                .filter(|t| !clique.members.contains(*t) && self.tree().subtree(child).contains(*t))
                .cloned()
                .collect();
            if sub.is_empty() && !self.evidence_below(child) {
                continue;
            }
            child_answers.push(self.resolve(child, sub, depth + 1, trace)?);
        }

        let set_chain = &self.states[id].set_chain;
        let mut product: Option<Factor<T>> = None;
        for answer in &child_answers {
            product = Some(match product {
                None => answer.clone(),
                Some(p) => self.counters.multiply(&p, answer)?,
            });
        }
        let product = match product {
            None => set_chain.clone(),
            Some(p) => self.counters.multiply(&p, set_chain)?,
        };
        let summed: Vec<&String> = clique
            .residual
            .iter()
            .filter(|r| !targets.contains(r) && product.contains(r))
            .collect();
        let answer = if summed.is_empty() {
            product
        } else {
            self.counters.sum_out(&product, &summed)?
        };
        if child_answers.is_empty() && summed.is_empty() {
            trace[slot].resolution = Resolution::Stored;
        }
        if self.caching {
            self.states[id].cache.insert(
                key.clone(),
                CacheEntry {
                    clique: id,
                    targets: key,
                    answer: answer.clone(),
                    evidence_version: self.evidence_version,
                },
            );
        }
        Ok(answer)
    }

    /// `P(targets | given, e)` where `e` is the asserted evidence plus the
    /// query's own transient evidence, which is retracted afterwards.
    /// Impossible conditioning contexts give all-zero columns.
    pub fn query_conditional(&mut self, query: &Query) -> Result<Factor<T>> {
        self.query_conditional_traced(query).map(|(f, _)| f)
    }

    /// Like [`Engine::query_conditional`], also returning the requests the
    /// cliques received.
    pub fn query_conditional_traced(&mut self, query: &Query) -> Result<(Factor<T>, Vec<TraceEvent>)> {
        if query.targets.is_empty() {
            return Err(Error::InvalidQuery("no target variables".into()));
        }
        let mut z = query.targets.clone();
        z.extend(query.given.iter().cloned());
        for (v, s) in &query.evidence {
            let var = self.network.variable(v)?;
            if *s >= var.cardinality() {
                return Err(Error::BadState {
                    name: v.clone(),
                    state: *s,
                    cardinality: var.cardinality(),
                });
            }
            if z.contains(v) {
                return Err(Error::InvalidQuery(format!(
                    "`{v}` is both queried and given a value"
                )));
            }
            if let Some(current) = self.evidence.get(v) {
                if current != *s {
                    return Err(self.conflict(v, current));
                }
            }
        }
        self.check_queryable(&z)?;

        let mut transient = Vec::new();
        for (v, s) in &query.evidence {
            if !self.evidence.contains(v) {
                self.observe(v, *s)?;
                transient.push(v.clone());
            }
        }
        let mut trace = Vec::new();
        let result = self
            .joint(&z, &mut trace)
            .and_then(|joint| joint.normalize_conditional(&query.targets));
        if !transient.is_empty() {
            self.retract_all(&transient)?;
        }
        result.map(|f| (f, trace))
    }

    fn conflict(&self, var: &str, current: usize) -> Error {
        let label = self
            .network
            .variable(var)
            .map(|v| v.states()[current].clone())
            .unwrap_or_default();
        Error::ConflictingObservation {
            name: var.to_string(),
            current: label,
        }
    }

    /// Asserts `var = state`. Re-asserting the same state is a no-op.
    pub fn observe(&mut self, var: &str, state: usize) -> Result<()> {
        let v = self.network.variable(var)?;
        if state >= v.cardinality() {
            return Err(Error::BadState {
                name: var.to_string(),
                state,
                cardinality: v.cardinality(),
            });
        }
        if let Some(current) = self.evidence.get(var) {
            return if current == state {
                Ok(())
            } else {
                Err(self.conflict(var, current))
            };
        }
        self.substitute_everywhere(var, state)?;
        self.evidence.insert(var, state);
        self.evidence_version += 1;
        Ok(())
    }

    /// [`Engine::observe`] by state label.
    pub fn observe_label(&mut self, var: &str, label: &str) -> Result<()> {
        let state = self.network.variable(var)?.state_index(label)?;
        self.observe(var, state)
    }

    fn substitute_everywhere(&mut self, var: &str, state: usize) -> Result<()> {
        for id in 0..self.states.len() {
            let s = &mut self.states[id];
            if s.set_chain.contains(var) {
                s.set_chain = self.counters.substitute(&s.set_chain, var, state)?;
            }
            if s.marginal.contains(var) {
                s.marginal = self.counters.substitute(&s.marginal, var, state)?;
            }
            let clique = self.compilation.tree.clique(id);
            let below = self.compilation.tree.subtree(id).contains(var) && !clique.separator.contains(var);
            let entries = std::mem::take(&mut s.cache);
            let mut kept = BTreeMap::new();
            let mut rekeyed = Vec::new();
            for (key, mut entry) in entries {
                if entry.answer.contains(var) {
                    entry.answer = self.counters.substitute(&entry.answer, var, state)?;
                    if entry.targets.iter().any(|t| t == var) {
                        entry.targets.retain(|t| t != var);
                        rekeyed.push(entry);
                    } else {
                        kept.insert(key, entry);
                    }
                } else if !below {
                    kept.insert(key, entry);
                }
                // otherwise the entry summed `var` out and no longer carries
                // the evidence likelihood: drop it
            }
            for entry in rekeyed {
                kept.insert(entry.targets.clone(), entry);
            }
            s.cache = kept;
        }
        Ok(())
    }

    /// Withdraws the observation of `var`: restores the preprocessed tables,
    /// drops the cache and re-applies the remaining evidence in its original
    /// order.
    pub fn retract(&mut self, var: &str) -> Result<()> {
        self.network.variable(var)?;
        if !self.evidence.contains(var) {
            return Err(Error::NotObserved(var.to_string()));
        }
        self.retract_all(&[var.to_string()])
    }

    fn retract_all(&mut self, vars: &[String]) -> Result<()> {
        for v in vars {
            self.evidence.remove(v);
        }
        for s in &mut self.states {
            s.set_chain = s.pristine_set_chain.clone();
            s.marginal = s.pristine_marginal.clone();
            s.cache.clear();
        }
        let replay: Vec<(String, usize)> = self.evidence.iter().map(|(v, s)| (v.to_string(), s)).collect();
        for (v, s) in replay {
            self.substitute_everywhere(&v, s)?;
        }
        self.evidence_version += 1;
        Ok(())
    }

    /// Posterior `P(v | e)` of every unobserved variable.
    pub fn posterior_marginals(&mut self) -> Result<BTreeMap<String, Factor<T>>> {
        if self.evidence.is_empty() {
            let marginals: Vec<Factor<T>> = self.states.iter().map(|s| s.marginal.clone()).collect();
            return node_marginals(&self.network, self.tree(), &marginals);
        }
        let names: Vec<String> = self
            .network
            .names()
            .filter(|n| !self.evidence.contains(n))
            .map(str::to_string)
            .collect();
        let mut out = BTreeMap::new();
        for n in names {
            let f = self.query_conditional(&Query::joint(&[n.as_str()]))?;
            out.insert(n, f);
        }
        Ok(out)
    }
}
