//! Query expressions: `P(T1, T2 | C1, C2=state)`.
//!
//! Targets go before `|`. After it, a bare name is a conditioning variable
//! and `name=state` is evidence that holds for this query only.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad query `{text}`: {message}")]
pub struct ExprError {
    pub text: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryExpr {
    pub targets: Vec<String>,
    pub given: Vec<String>,
    /// `(variable, state label)` pairs.
    pub evidence: Vec<(String, String)>,
}

impl QueryExpr {
    pub fn is_plain_joint(&self) -> bool {
        self.given.is_empty() && self.evidence.is_empty()
    }
}

impl fmt::Display for QueryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P({}", self.targets.join(","))?;
        let right: Vec<String> = self
            .given
            .iter()
            .cloned()
            .chain(self.evidence.iter().map(|(v, s)| format!("{v}={s}")))
            .collect();
        if !right.is_empty() {
            write!(f, " | {}", right.join(","))?;
        }
        f.write_str(")")
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.contains(|c: char| c.is_whitespace() || "(),|=".contains(c))
}

pub fn parse_query(text: &str) -> Result<QueryExpr, ExprError> {
    let fail = |message: &str| ExprError {
        text: text.to_string(),
        message: message.to_string(),
    };
    let inner = text
        .trim()
        .strip_prefix("P(")
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| fail("expected P( ... )"))?;
    let (left, right) = match inner.split_once('|') {
        Some((l, r)) => (l, Some(r)),
        None => (inner, None),
    };
    let mut q = QueryExpr::default();
    for t in left.split(',').map(str::trim) {
        if !valid_name(t) {
            return Err(fail(&format!("bad target `{t}`")));
        }
        q.targets.push(t.to_string());
    }
    if let Some(right) = right {
        for item in right.split(',').map(str::trim) {
            match item.split_once('=') {
                Some((v, s)) if valid_name(v.trim()) && valid_name(s.trim()) => {
                    q.evidence.push((v.trim().to_string(), s.trim().to_string()))
                }
                None if valid_name(item) => q.given.push(item.to_string()),
                _ => return Err(fail(&format!("bad condition `{item}`"))),
            }
        }
    }
    Ok(q)
}
