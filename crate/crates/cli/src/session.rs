//! The command interpreter shared by one-shot and interactive use.

use std::fmt::Write as _;
use std::path::Path;

use cliquenet::oracle::{enumerate_joint, oracle_joint, oracle_query};
use cliquenet::{Engine64, Factor64, JointTable, Network64, Query, TraceEvent};
use thiserror::Error;

use crate::dot::tree_to_dot;
use crate::expr::{parse_query, ExprError, QueryExpr};
use crate::format::{load, parse_network, FormatError, Loaded};

/// `--check` fails when the engine and the oracle differ by more than this.
pub const CHECK_TOLERANCE: f64 = 1e-9;

pub const HELP: &str = "\
commands:
  compile [--order A,B,...]       recompile (clears evidence and counters) and describe the result
  query P(X,.. | Y,.., Z=s) [--check] [--normalize] [--trace]
  observe VAR=STATE ...           assert evidence
  retract VAR ...                 retract evidence
  show tree [--dot PATH]          list cliques, optionally writing Graphviz to PATH
  show marginals                  posterior marginal of every variable
  show evidence
  show counters
  reset counters
  cache on|off
  help
  quit";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Engine(#[from] cliquenet::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
    #[error("check failed: max deviation {deviation:e} exceeds {CHECK_TOLERANCE:e}")]
    CheckFailed { deviation: f64 },
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Text(String),
    Quit,
}

/// Formats a probability with six significant digits, or exactly.
pub fn format_value(v: f64, full_precision: bool) -> String {
    if full_precision {
        return v.to_string();
    }
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    }
}

/// Splits a command line on whitespace, honouring single and double quotes.
pub fn split_words(line: &str) -> Result<Vec<String>, CliError> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut in_word = false;
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => cur.push(c),
            None if c == '"' || c == '\'' => {
                quote = Some(c);
                in_word = true;
            }
            None if c.is_whitespace() => {
                if in_word {
                    words.push(std::mem::take(&mut cur));
                    in_word = false;
                }
            }
            None => {
                cur.push(c);
                in_word = true;
            }
        }
    }
    if quote.is_some() {
        return Err(usage("unterminated quote"));
    }
    if in_word {
        words.push(cur);
    }
    Ok(words)
}

pub struct Session {
    loaded: Loaded,
    order: Option<Vec<String>>,
    engine: Engine64,
    joint: Option<JointTable<f64>>,
    full_precision: bool,
}

impl Session {
    /// Compiles along `order`, else the file's `order` line, else min-fill.
    pub fn new(loaded: Loaded, order: Option<Vec<String>>, full_precision: bool) -> Result<Self, CliError> {
        let order = order.or_else(|| loaded.order.clone());
        let engine = Engine64::with_order(loaded.network.clone(), order.as_deref())?;
        Ok(Session {
            loaded,
            order,
            engine,
            joint: None,
            full_precision,
        })
    }

    pub fn open(path: &Path, order: Option<Vec<String>>, full_precision: bool) -> Result<Self, CliError> {
        Self::new(load(path)?, order, full_precision)
    }

    pub fn from_text(text: &str, order: Option<Vec<String>>, full_precision: bool) -> Result<Self, CliError> {
        Self::new(parse_network(text)?, order, full_precision)
    }

    /// Load-time notes such as renormalized rows.
    pub fn warnings(&self) -> &[String] {
        &self.loaded.warnings
    }

    pub fn network(&self) -> &Network64 {
        &self.loaded.network
    }

    pub fn engine(&self) -> &Engine64 {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut Engine64 {
        &mut self.engine
    }

    pub fn execute(&mut self, line: &str) -> Result<Reply, CliError> {
        self.execute_words(&split_words(line)?)
    }

    /// Runs one command given as already-split words.
    pub fn execute_words<S: AsRef<str>>(&mut self, words: &[S]) -> Result<Reply, CliError> {
        let words: Vec<String> = words.iter().map(|w| w.as_ref().to_string()).collect();
        let Some((cmd, args)) = words.split_first() else {
            return Ok(Reply::Text(String::new()));
        };
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let text = match (cmd.as_str(), args.as_slice()) {
            ("quit" | "exit", []) => return Ok(Reply::Quit),
            ("help", []) => HELP.to_string(),
            ("compile", rest) => self.compile(rest)?,
            ("query", rest) => self.query(rest)?,
            ("observe", pairs) if !pairs.is_empty() => self.observe(pairs)?,
            ("retract", vars) if !vars.is_empty() => {
                for v in vars {
                    self.engine.retract(v)?;
                }
                format!("retracted {}", vars.join(" "))
            }
            ("show", ["tree"]) => self.describe_tree(),
            ("show", ["tree", "--dot", path]) => {
                std::fs::write(path, tree_to_dot(self.engine.tree())).map_err(|e| CliError::Io {
                    path: path.to_string(),
                    message: e.to_string(),
                })?;
                format!("{}wrote {path}", self.describe_tree())
            }
            ("show", ["marginals"]) => self.marginals()?,
            ("show", ["evidence"]) => self.describe_evidence(),
            ("show", ["counters"]) => self.engine.op_counters().to_string(),
            ("reset", ["counters"]) => {
                self.engine.reset_counters();
                "counters reset".to_string()
            }
            ("cache", ["on"]) => {
                self.engine.set_caching(true);
                "cache on".to_string()
            }
            ("cache", ["off"]) => {
                self.engine.set_caching(false);
                "cache off".to_string()
            }
            _ => return Err(usage(format!("unrecognised command `{}`; try `help`", words.join(" ")))),
        };
        Ok(Reply::Text(text))
    }

    fn compile(&mut self, args: &[&str]) -> Result<String, CliError> {
        match args {
            [] => {}
            ["--order", list] => {
                self.order = Some(list.split(',').map(|s| s.trim().to_string()).collect());
            }
            _ => return Err(usage("usage: compile [--order A,B,...]")),
        }
        let caching = self.engine.caching();
        self.engine = Engine64::with_order(self.loaded.network.clone(), self.order.as_deref())?;
        self.engine.set_caching(caching);
        let c = self.engine.compilation();
        let mut out = String::new();
        writeln!(out, "elimination order: {}", c.order.as_slice().join(" ")).unwrap();
        let fill: Vec<String> = self.engine.tree().fill_edges().iter().map(|(a, b)| format!("{a}-{b}")).collect();
        if fill.is_empty() {
            writeln!(out, "fill edges: none").unwrap();
        } else {
            writeln!(out, "fill edges: {}", fill.join(" ")).unwrap();
        }
        out.push_str(&self.describe_tree());
        Ok(out.trim_end().to_string())
    }

    fn describe_tree(&self) -> String {
        let mut out = String::new();
        let tree = self.engine.tree();
        writeln!(out, "cliques: {}", tree.len()).unwrap();
        for c in tree.cliques() {
            let join = |s: &std::collections::BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
            let link = match c.parent {
                Some(p) => format!("parent {p}"),
                None => "root".to_string(),
            };
            writeln!(
                out,
                "  {} ({}) {link} separator {{{}}} residual {{{}}}",
                c.id,
                c.label(),
                join(&c.separator),
                join(&c.residual)
            )
            .unwrap();
        }
        out
    }

    fn describe_evidence(&self) -> String {
        let items: Vec<String> = self
            .engine
            .evidence()
            .iter()
            .map(|(v, s)| self.label(v, s))
            .collect();
        if items.is_empty() {
            "evidence: none".to_string()
        } else {
            format!("evidence: {}", items.join(" "))
        }
    }

    fn label(&self, var: &str, state: usize) -> String {
        let states = self.loaded.network.variable(var).map(|v| v.states().to_vec()).unwrap_or_default();
        format!("{var}={}", states.get(state).map(String::as_str).unwrap_or("?"))
    }

    fn state_of(&self, var: &str, label: &str) -> Result<usize, CliError> {
        Ok(self.loaded.network.variable(var)?.state_index(label)?)
    }

    fn observe(&mut self, pairs: &[&str]) -> Result<String, CliError> {
        let mut parsed = Vec::new();
        for p in pairs {
            let (v, s) = p
                .split_once('=')
                .ok_or_else(|| usage(format!("expected VAR=STATE, got `{p}`")))?;
            parsed.push((v.to_string(), self.state_of(v, s)?));
        }
        for (v, s) in &parsed {
            self.engine.observe(v, *s)?;
        }
        Ok(format!("observed {}", pairs.join(" ")))
    }

    fn marginals(&mut self) -> Result<String, CliError> {
        let posteriors = self.engine.posterior_marginals()?;
        let mut out = String::new();
        for v in self.loaded.network.variables() {
            if let Some(s) = self.engine.evidence().get(v.name()) {
                writeln!(out, "{}: {} (observed)", v.name(), v.states()[s]).unwrap();
                continue;
            }
            let f = &posteriors[v.name()];
            let cells: Vec<String> = v
                .states()
                .iter()
                .zip(f.values())
                .map(|(s, p)| format!("{s}={}", format_value(*p, self.full_precision)))
                .collect();
            writeln!(out, "{}: {}", v.name(), cells.join(" ")).unwrap();
        }
        Ok(out.trim_end().to_string())
    }

    fn query(&mut self, args: &[&str]) -> Result<String, CliError> {
        let (mut check, mut normalize, mut trace) = (false, false, false);
        let mut expr_parts = Vec::new();
        for a in args {
            match *a {
                "--check" => check = true,
                "--normalize" => normalize = true,
                "--trace" => trace = true,
                flag if flag.starts_with("--") => return Err(usage(format!("unknown query flag `{flag}`"))),
                part => expr_parts.push(part),
            }
        }
        if expr_parts.is_empty() {
            return Err(usage("usage: query P(X,.. | Y,..) [--check] [--normalize] [--trace]"));
        }
        let expr = parse_query(&expr_parts.join(" "))?;
        let (result, events, normalized) = self.run_query(&expr, normalize)?;

        let mut out = String::new();
        if trace {
            writeln!(out, "trace:").unwrap();
            for e in &events {
                writeln!(out, "  {e}").unwrap();
            }
        }
        out.push_str(&self.render_table(&expr, &result));
        let evidence_present = !self.engine.evidence().is_empty();
        if !normalized && evidence_present {
            writeln!(
                out,
                "mass {} (probability of the evidence)",
                format_value(result.total(), self.full_precision)
            )
            .unwrap();
        }
        if check {
            let deviation = self.check(&expr, &result, normalized)?;
            writeln!(out, "check: max deviation from enumeration {deviation:e}").unwrap();
            if deviation.is_nan() || deviation > CHECK_TOLERANCE {
                return Err(CliError::CheckFailed { deviation });
            }
        }
        Ok(out.trim_end().to_string())
    }

    /// Returns the answer, the clique requests and whether it is normalized.
    fn run_query(&mut self, expr: &QueryExpr, normalize: bool) -> Result<(Factor64, Vec<TraceEvent>, bool), CliError> {
        if expr.is_plain_joint() {
            let (f, events) = self.engine.query_joint_traced(&expr.targets)?;
            if normalize {
                let f = f.normalize_conditional(&expr.targets)?;
                return Ok((f, events, true));
            }
            return Ok((f, events, false));
        }
        let mut q = Query::conditional(&expr.targets, &expr.given);
        for (v, s) in &expr.evidence {
            q = q.with_evidence(v.clone(), self.state_of(v, s)?);
        }
        let (f, events) = self.engine.query_conditional_traced(&q)?;
        Ok((f, events, true))
    }

    fn check(&mut self, expr: &QueryExpr, result: &Factor64, normalized: bool) -> Result<f64, CliError> {
        if self.joint.is_none() {
            self.joint = Some(enumerate_joint(&self.loaded.network)?);
        }
        let joint = self.joint.as_ref().expect("just built");
        let mut evidence: Vec<(String, usize)> = self.engine.evidence().iter().map(|(v, s)| (v.to_string(), s)).collect();
        for (v, s) in &expr.evidence {
            let idx = self.loaded.network.variable(v)?.state_index(s)?;
            if !evidence.iter().any(|(e, _)| e == v) {
                evidence.push((v.clone(), idx));
            }
        }
        let oracle = if normalized {
            oracle_query(joint, &expr.targets, &expr.given, &evidence)?
        } else {
            oracle_joint(joint, &expr.targets, &evidence)?
        };
        Ok(result.max_abs_diff(&oracle)?)
    }

    fn render_table(&self, expr: &QueryExpr, f: &Factor64) -> String {
        let mut header: Vec<String> = f.names().map(str::to_string).collect();
        header.push(expr.to_string());
        let mut rows = vec![header];
        let cards: Vec<usize> = f.scope().iter().map(|v| v.cardinality()).collect();
        let mut idx = vec![0usize; cards.len()];
        for value in f.values() {
            let mut row: Vec<String> = f
                .scope()
                .iter()
                .zip(&idx)
                .map(|(v, &s)| v.states()[s].clone())
                .collect();
            row.push(format_value(*value, self.full_precision));
            rows.push(row);
            for k in (0..cards.len()).rev() {
                idx[k] += 1;
                if idx[k] < cards[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in rows {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            writeln!(out, "{}", cells.join("  ").trim_end()).unwrap();
        }
        out
    }
}
