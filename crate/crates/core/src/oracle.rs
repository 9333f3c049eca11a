//! Brute-force reference answers: build the full joint as the product of
//! every CPT, then substitute and marginalize directly. No clique tree and
//! no cache are involved.

use crate::engine::OpCounters;
use crate::error::{Error, Result};
use crate::factor::Factor;
use crate::network::BayesianNetwork;
use crate::scalar::Scalar;

/// Largest joint table the oracle agrees to build.
pub const DEFAULT_CELL_CAP: usize = 1 << 22;

/// The full joint distribution over every network variable, in declaration
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable<T>(Factor<T>);

impl<T: Scalar> JointTable<T> {
    pub fn factor(&self) -> &Factor<T> {
        &self.0
    }

    pub fn total(&self) -> T {
        self.0.total()
    }
}

pub fn enumerate_joint<T: Scalar>(bn: &BayesianNetwork<T>) -> Result<JointTable<T>> {
    enumerate_joint_with(bn, DEFAULT_CELL_CAP, &mut OpCounters::default())
}

/// Builds the joint, refusing when it would exceed `cap` cells. Products are
/// recorded in `counters`.
pub fn enumerate_joint_with<T: Scalar>(
    bn: &BayesianNetwork<T>,
    cap: usize,
    counters: &mut OpCounters,
) -> Result<JointTable<T>> {
    let cells: u128 = bn
        .variables()
        .iter()
        .map(|v| v.cardinality() as u128)
        .product();
    if cells > cap as u128 {
        return Err(Error::StateSpaceTooLarge { cells, cap });
    }
    let mut acc = Factor::scalar(T::one());
    for (i, cpt) in bn.cpts().iter().enumerate() {
        acc = if i == 0 {
            cpt.clone()
        } else {
            counters.multiply(&acc, cpt)?
        };
    }
    let names: Vec<&str> = bn.names().collect();
    Ok(JointTable(acc.permuted(&names)?))
}

fn check_disjoint<S: AsRef<str>, U: AsRef<str>>(
    joint: &Factor<impl Scalar>,
    targets: &[S],
    given: &[U],
    evidence: &[(String, usize)],
) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    let names = targets
        .iter()
        .map(AsRef::as_ref)
        .chain(given.iter().map(AsRef::as_ref))
        .chain(evidence.iter().map(|(v, _)| v.as_str()));
    for n in names {
        if !joint.contains(n) {
            return Err(Error::UnknownVariable(n.to_string()));
        }
        if seen.contains(&n) {
            return Err(Error::InvalidQuery(format!("`{n}` appears more than once")));
        }
        seen.push(n);
    }
    Ok(())
}

/// Unnormalized `P(targets, e)`, scope in `targets` order.
pub fn oracle_joint<T: Scalar, S: AsRef<str>>(
    joint: &JointTable<T>,
    targets: &[S],
    evidence: &[(String, usize)],
) -> Result<Factor<T>> {
    check_disjoint::<S, &str>(&joint.0, targets, &[], evidence)?;
    let mut f = joint.0.clone();
    for (v, s) in evidence {
        f = f.substitute(v, *s)?;
    }
    f.marginal(targets)?.permuted(targets)
}

/// `P(targets | given, e)` with `0/0 := 0`, scope `targets` then `given`.
pub fn oracle_query<T: Scalar, S: AsRef<str>, U: AsRef<str>>(
    joint: &JointTable<T>,
    targets: &[S],
    given: &[U],
    evidence: &[(String, usize)],
) -> Result<Factor<T>> {
    check_disjoint(&joint.0, targets, given, evidence)?;
    let z: Vec<&str> = targets
        .iter()
        .map(AsRef::as_ref)
        .chain(given.iter().map(AsRef::as_ref))
        .collect();
    oracle_joint(joint, &z, evidence)?.normalize_conditional(targets)
}
