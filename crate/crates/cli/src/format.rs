//! Plain-text network files.
//!
//! ```text
//! # comments run to the end of the line
//! network 1                       # format version, first statement
//! variable A yes no               # name, then the ordered state labels
//! variable T yes no
//! cpt A = 0.01 0.99               # a root: one row over the child's states
//! cpt T | A = 0.05 0.95           # parents after `|`, values after `=`
//!             0.01 0.99           # values may continue on following lines
//! order A T                       # optional default elimination order
//! ```
//!
//! CPT values are row-major over `[parents in listed order, child]` with the
//! child varying fastest. Commas are accepted anywhere as separators.
//!
//! Rows are renormalized on load: rows within 1e-12 of one are kept as
//! written, others are divided by their sum, and a warning naming the row is
//! produced when the sum was off by more than 1e-6.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use cliquenet::{Network64, NetworkBuilder, Variable};
use thiserror::Error;

pub const FORMAT_VERSION: &str = "1";

/// Rows this close to one are left exactly as written.
const KEEP_TOLERANCE: f64 = 1e-12;
/// Rows further than this from one are reported when renormalized.
const WARN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported format version `{found}` (expected {FORMAT_VERSION})")]
    Version { line: usize, found: String },
    #[error("missing `network {FORMAT_VERSION}` header")]
    MissingHeader,
    #[error("line {line}: variable `{name}` declared twice")]
    DuplicateVariable { line: usize, name: String },
    #[error("line {line}: unknown variable `{name}`")]
    UnresolvedReference { line: usize, name: String },
    #[error("line {line}: cpt `{child}` needs {expected} values, found {found}")]
    BadCptLength {
        line: usize,
        child: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cpt `{child}` has invalid probability `{value}`")]
    InvalidProbability {
        line: usize,
        child: String,
        value: String,
    },
    #[error("line {line}: cpt `{child}` row {row} ({context}) sums to zero")]
    ZeroRow {
        line: usize,
        child: String,
        row: usize,
        context: String,
    },
    #[error("line {line}: second cpt for `{child}`")]
    DuplicateCpt { line: usize, child: String },
    #[error("variable `{name}` has no cpt")]
    MissingCpt { name: String },
    #[error("the parent relation has a cycle through {}", .variables.join(", "))]
    Cycle { variables: Vec<String> },
    #[error("line {line}: bad elimination order: {message}")]
    BadOrder { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Network(cliquenet::Error),
}

/// A parsed network with its optional default order and load-time notes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub network: Network64,
    pub order: Option<Vec<String>>,
    pub warnings: Vec<String>,
}

struct Statement {
    line: usize,
    tokens: Vec<String>,
}

fn tokenize(line: &str) -> Vec<String> {
    let line = line.split('#').next().unwrap_or("");
    line.replace(',', " ")
        .replace('|', " | ")
        .replace('=', " = ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

const KEYWORDS: [&str; 4] = ["network", "variable", "cpt", "order"];

fn statements(text: &str) -> Result<Vec<Statement>, FormatError> {
    let mut out: Vec<Statement> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let tokens = tokenize(raw);
        let Some(first) = tokens.first() else { continue };
        if KEYWORDS.contains(&first.as_str()) {
            out.push(Statement { line, tokens });
            continue;
        }
        match out.last_mut() {
            Some(s) if s.tokens[0] == "cpt" && first.parse::<f64>().is_ok() => s.tokens.extend(tokens),
            _ => {
                return Err(FormatError::Syntax {
                    line,
                    message: format!("unexpected `{first}`"),
                })
            }
        }
    }
    Ok(out)
}

fn row_context(states: &[(&Variable, usize)]) -> String {
    if states.is_empty() {
        return "no parents".to_string();
    }
    states
        .iter()
        .map(|(v, s)| format!("{}={}", v.name(), v.states()[*s]))
        .collect::<Vec<_>>()
        .join(", ")
}

/// The parent state tuple of row `row` (row-major, last parent fastest).
fn parent_states<'a>(parents: &[&'a Variable], mut row: usize) -> Vec<(&'a Variable, usize)> {
    let mut out = vec![];
    for p in parents.iter().rev() {
        out.push((*p, row % p.cardinality()));
        row /= p.cardinality();
    }
    out.reverse();
    out
}

pub fn parse_network(text: &str) -> Result<Loaded, FormatError> {
    let stmts = statements(text)?;
    let mut iter = stmts.iter();
    match iter.next() {
        Some(s) if s.tokens[0] == "network" => {
            let found = s.tokens.get(1).cloned().unwrap_or_default();
            if found != FORMAT_VERSION || s.tokens.len() != 2 {
                return Err(FormatError::Version { line: s.line, found });
            }
        }
        _ => return Err(FormatError::MissingHeader),
    }
    let rest: Vec<&Statement> = iter.collect();

    let mut variables: Vec<Variable> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in rest.iter().filter(|s| s.tokens[0] == "variable") {
        let (name, states) = match s.tokens.as_slice() {
            [_, name, states @ ..] if !states.is_empty() => (name, states),
            _ => {
                return Err(FormatError::Syntax {
                    line: s.line,
                    message: "expected `variable <name> <state> ...`".into(),
                })
            }
        };
        if ["|", "="].contains(&name.as_str()) || states.iter().any(|t| t == "|" || t == "=") {
            return Err(FormatError::Syntax {
                line: s.line,
                message: "`|` and `=` are not allowed in names".into(),
            });
        }
        if index.contains_key(name) {
            return Err(FormatError::DuplicateVariable {
                line: s.line,
                name: name.clone(),
            });
        }
        let var = Variable::new(name.clone(), states.to_vec()).map_err(|e| FormatError::Syntax {
            line: s.line,
            message: e.to_string(),
        })?;
        index.insert(name.clone(), variables.len());
        variables.push(var);
    }

    let mut builder = NetworkBuilder::<f64>::new();
    for v in &variables {
        builder.variable(v.clone()).map_err(FormatError::Network)?;
    }
    let resolve = |line: usize, name: &str| -> Result<usize, FormatError> {
        index.get(name).copied().ok_or_else(|| FormatError::UnresolvedReference {
            line,
            name: name.to_string(),
        })
    };

    let mut warnings = Vec::new();
    let mut has_cpt = vec![false; variables.len()];
    for s in rest.iter().filter(|s| s.tokens[0] == "cpt") {
        let eq = s.tokens.iter().position(|t| t == "=").ok_or_else(|| FormatError::Syntax {
            line: s.line,
            message: "expected `=` before the probabilities".into(),
        })?;
        let head = &s.tokens[1..eq];
        let (child, parents): (&String, Vec<&String>) = match head {
            [child] => (child, vec![]),
            [child, bar, parents @ ..] if bar == "|" && !parents.is_empty() => (child, parents.iter().collect()),
            _ => {
                return Err(FormatError::Syntax {
                    line: s.line,
                    message: "expected `cpt <child> [| <parent> ...] = <values>`".into(),
                })
            }
        };
        let c = resolve(s.line, child)?;
        let ps: Vec<usize> = parents
            .iter()
            .map(|p| resolve(s.line, p))
            .collect::<Result<_, _>>()?;
        if has_cpt[c] {
            return Err(FormatError::DuplicateCpt {
                line: s.line,
                child: child.clone(),
            });
        }
        has_cpt[c] = true;
        let mut values = Vec::new();
        for t in &s.tokens[eq + 1..] {
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => values.push(v),
                _ => {
                    return Err(FormatError::InvalidProbability {
                        line: s.line,
                        child: child.clone(),
                        value: t.clone(),
                    })
                }
            }
        }
        let card = variables[c].cardinality();
        let parent_vars: Vec<&Variable> = ps.iter().map(|&p| &variables[p]).collect();
        let rows: usize = parent_vars.iter().map(|v| v.cardinality()).product();
        if values.len() != rows * card {
            return Err(FormatError::BadCptLength {
                line: s.line,
                child: child.clone(),
                expected: rows * card,
                found: values.len(),
            });
        }
        for (row, chunk) in values.chunks_mut(card).enumerate() {
            let sum: f64 = chunk.iter().sum();
            let context = || row_context(&parent_states(&parent_vars, row));
            if sum == 0.0 {
                return Err(FormatError::ZeroRow {
                    line: s.line,
                    child: child.clone(),
                    row,
                    context: context(),
                });
            }
            if (sum - 1.0).abs() > KEEP_TOLERANCE {
                chunk.iter_mut().for_each(|v| *v /= sum);
                if (sum - 1.0).abs() > WARN_TOLERANCE {
                    warnings.push(format!(
                        "line {}: cpt `{child}` row {row} ({}) sums to {sum}; renormalized",
                        s.line,
                        context()
                    ));
                }
            }
        }
        builder
            .cpt(child, &parents, values)
            .map_err(FormatError::Network)?;
    }
    if let Some(i) = has_cpt.iter().position(|h| !h) {
        return Err(FormatError::MissingCpt {
            name: variables[i].name().to_string(),
        });
    }

    let mut order = None;
    for s in rest.iter().filter(|s| s.tokens[0] == "order") {
        if order.is_some() {
            return Err(FormatError::BadOrder {
                line: s.line,
                message: "given twice".into(),
            });
        }
        let names: Vec<String> = s.tokens[1..].to_vec();
        for n in &names {
            resolve(s.line, n)?;
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() || names.len() != variables.len() {
            return Err(FormatError::BadOrder {
                line: s.line,
                message: "must list every variable exactly once".into(),
            });
        }
        order = Some(names);
    }

    let network = builder.build().map_err(|e| match e {
        cliquenet::Error::Cycle(variables) => FormatError::Cycle { variables },
        other => FormatError::Network(other),
    })?;
    Ok(Loaded {
        network,
        order,
        warnings,
    })
}

pub fn load(path: &Path) -> Result<Loaded, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_network(&text)
}

/// Writes a network (and optional order) in the file format, one CPT row
/// per line. Values use the shortest representation that reparses exactly.
pub fn serialize_network(net: &Network64, order: Option<&[String]>) -> String {
    let mut out = String::new();
    writeln!(out, "network {FORMAT_VERSION}").unwrap();
    for v in net.variables() {
        writeln!(out, "variable {} {}", v.name(), v.states().join(" ")).unwrap();
    }
    for v in net.variables() {
        let parents = net.parents(v.name()).expect("own variable");
        let cpt = net.cpt(v.name()).expect("own variable");
        let head = if parents.is_empty() {
            format!("cpt {} =", v.name())
        } else {
            format!("cpt {} | {} =", v.name(), parents.join(" "))
        };
        let indent = " ".repeat(head.len());
        for (i, row) in cpt.values().chunks(v.cardinality()).enumerate() {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            let lead = if i == 0 { head.as_str() } else { indent.as_str() };
            writeln!(out, "{lead} {}", cells.join(" ")).unwrap();
        }
    }
    if let Some(order) = order {
        writeln!(out, "order {}", order.join(" ")).unwrap();
    }
    out
}
