use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A discrete random variable with named, ordered states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    name: String,
    states: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(name: impl Into<String>, states: Vec<S>) -> Result<Self> {
        let name = name.into();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::InvalidNetwork("variable names must be non-empty".into()));
        }
        if states.is_empty() {
            return Err(Error::InvalidNetwork(format!("variable `{name}` has no states")));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::InvalidNetwork(format!(
                    "variable `{name}` repeats state `{s}`"
                )));
            }
        }
        Ok(Variable { name, states })
    }

    /// A variable with states `0..cardinality`, labelled by index.
    pub fn with_cardinality(name: impl Into<String>, cardinality: usize) -> Result<Self> {
        Variable::new(name, (0..cardinality).map(|i| i.to_string()).collect())
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Variable::new(name, vec!["0", "1"]).expect("two distinct states")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states
            .iter()
            .position(|s| s == label)
            .ok_or_else(|| Error::UnknownState {
                name: self.name.clone(),
                state: label.to_string(),
            })
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A partial assignment of state indices to variable names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<String, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: &Variable, state: usize) -> Result<()> {
        if state >= var.cardinality() {
            return Err(Error::BadState {
                name: var.name().to_string(),
                state,
                cardinality: var.cardinality(),
            });
        }
        self.bindings.insert(var.name().to_string(), state);
        Ok(())
    }

    pub fn with(mut self, var: &Variable, state: usize) -> Result<Self> {
        self.bind(var, state)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.bindings.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}
