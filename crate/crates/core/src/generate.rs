//! Network constructors for tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::network::BayesianNetwork;
use crate::scalar::Scalar;
use crate::variable::Variable;

/// Elimination order that compiles [`asia`] into the cliques
/// `{A,T} {T,L,E} {L,E,B} {B,L,S} {E,B,D} {E,X}` rooted at `{A,T}`.
///
/// Greedy min-fill with name tie-breaks picks a different (equally small)
/// triangulation for this graph.
pub const ASIA_ORDER: [&str; 8] = ["A", "X", "D", "T", "S", "B", "E", "L"];

/// The eight-node chest clinic network: A→T, S→L, S→B, T→E, L→E, E→X,
/// B→D, E→D, with states `yes`/`no`. E is the deterministic OR of T and L.
pub fn asia<T: Scalar>() -> BayesianNetwork<T> {
    let p = |x: u64| T::ratio(x, 1000);
    let mut b = BayesianNetwork::builder();
    for name in ["A", "T", "S", "L", "B", "E", "X", "D"] {
        b.variable(Variable::new(name, vec!["yes", "no"]).expect("valid")).expect("fresh");
    }
    let rows: [(&str, &[&str], [u64; 8]); 8] = [
        ("A", &[], [10, 990, 0, 0, 0, 0, 0, 0]),
        ("T", &["A"], [50, 950, 10, 990, 0, 0, 0, 0]),
        ("S", &[], [500, 500, 0, 0, 0, 0, 0, 0]),
        ("L", &["S"], [100, 900, 10, 990, 0, 0, 0, 0]),
        ("B", &["S"], [600, 400, 300, 700, 0, 0, 0, 0]),
        ("E", &["T", "L"], [1000, 0, 1000, 0, 1000, 0, 0, 1000]),
        ("X", &["E"], [980, 20, 50, 950, 0, 0, 0, 0]),
        ("D", &["B", "E"], [900, 100, 800, 200, 700, 300, 100, 900]),
    ];
    for (child, parents, values) in rows {
        let n = 2usize << parents.len();
        b.cpt(child, parents, values[..n].iter().map(|&x| p(x)).collect())
            .expect("known names");
    }
    b.build().expect("valid network")
}

/// Binary chain `V00 → V01 → … ` with random CPTs.
pub fn chain<T: Scalar, R: Rng>(rng: &mut R, length: usize) -> BayesianNetwork<T> {
    let mut b = BayesianNetwork::builder();
    let names: Vec<String> = (0..length).map(|i| format!("V{i:02}")).collect();
    for n in &names {
        b.variable(Variable::binary(n.as_str())).expect("fresh");
    }
    for (i, n) in names.iter().enumerate() {
        let parents: Vec<&str> = if i == 0 { vec![] } else { vec![names[i - 1].as_str()] };
        let rows = 1 << parents.len();
        let values = random_rows(rng, rows, 2, 0.0);
        b.cpt(n, &parents, values).expect("known names");
    }
    b.build().expect("valid network")
}

/// Shape of a random network.
#[derive(Debug, Clone, Copy)]
pub struct RandomSpec {
    pub variables: usize,
    pub max_parents: usize,
    pub max_cardinality: usize,
    /// Chance that any single CPT weight is zero.
    pub zero_weight: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            variables: 8,
            max_parents: 3,
            max_cardinality: 2,
            zero_weight: 0.05,
        }
    }
}

/// CPT rows built from small integer weights, so exact backends get exact
/// normalization.
fn random_rows<T: Scalar, R: Rng>(rng: &mut R, rows: usize, card: usize, zero_weight: f64) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        let mut w: Vec<u64> = (0..card)
            .map(|_| if rng.gen_bool(zero_weight) { 0 } else { rng.gen_range(1..=16) })
            .collect();
        if w.iter().all(|&x| x == 0) {
            let i = rng.gen_range(0..card);
            w[i] = 1;
        }
        let total: u64 = w.iter().sum();
        out.extend(w.into_iter().map(|x| T::ratio(x, total)));
    }
    out
}

/// A random DAG over `V00, V01, …` (declared in index order, arcs following
/// a hidden random topological order) with random CPTs.
pub fn random_network<T: Scalar, R: Rng>(rng: &mut R, spec: RandomSpec) -> BayesianNetwork<T> {
    let n = spec.variables;
    let names: Vec<String> = (0..n).map(|i| format!("V{i:02}")).collect();
    let cards: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(2..=spec.max_cardinality.max(2)))
        .collect();
    let mut topo: Vec<usize> = (0..n).collect();
    topo.shuffle(rng);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &v) in topo.iter().enumerate() {
        let k = rng.gen_range(0..=spec.max_parents.min(pos));
        let mut earlier: Vec<usize> = topo[..pos].to_vec();
        earlier.shuffle(rng);
        parents[v] = earlier.into_iter().take(k).collect();
    }
    let mut b = BayesianNetwork::builder();
    for (name, &card) in names.iter().zip(&cards) {
        b.variable(Variable::with_cardinality(name.as_str(), card).expect("valid"))
            .expect("fresh");
    }
    for v in 0..n {
        let ps: Vec<&str> = parents[v].iter().map(|&p| names[p].as_str()).collect();
        let rows: usize = parents[v].iter().map(|&p| cards[p]).product();
        let values = random_rows(rng, rows, cards[v], spec.zero_weight);
        b.cpt(&names[v], &ps, values).expect("known names");
    }
    b.build().expect("valid network")
}
