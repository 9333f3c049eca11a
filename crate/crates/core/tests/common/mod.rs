#![allow(dead_code)]

use cliquenet::generate::ASIA_ORDER;
use cliquenet::{BayesianNetwork, Factor, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn asia_order() -> Vec<String> {
    ASIA_ORDER.iter().map(|s| s.to_string()).collect()
}

/// A random query: disjoint targets, conditioning variables and evidence.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub targets: Vec<String>,
    pub given: Vec<String>,
    pub evidence: Vec<(String, usize)>,
}

pub fn sample_query<T: Scalar, R: Rng>(rng: &mut R, net: &BayesianNetwork<T>, max_evidence: usize) -> Sampled {
    let mut names: Vec<String> = net.names().map(str::to_string).collect();
    names.shuffle(rng);
    let n = names.len();
    let n_targets = rng.gen_range(1..=n.min(3));
    let n_given = rng.gen_range(0..=(n - n_targets).min(2));
    let n_evidence = rng.gen_range(0..=(n - n_targets - n_given).min(max_evidence));
    let targets = names[..n_targets].to_vec();
    let given = names[n_targets..n_targets + n_given].to_vec();
    let evidence = names[n_targets + n_given..n_targets + n_given + n_evidence]
        .iter()
        .map(|v| {
            let card = net.variable(v).unwrap().cardinality();
            (v.clone(), rng.gen_range(0..card))
        })
        .collect();
    Sampled { targets, given, evidence }
}

pub fn assert_close<T: Scalar>(a: &Factor<T>, b: &Factor<T>, tol: f64) {
    let d = a.max_abs_diff(b).unwrap();
    assert!(d <= tol, "deviation {d:e} > {tol:e}\n{a:?}\n{b:?}");
}
