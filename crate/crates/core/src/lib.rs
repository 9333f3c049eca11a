//! Exact inference for discrete Bayesian networks.
//!
//! A network is compiled into a ranked clique tree, each clique stores its
//! set-chain conditional `P(R_i | S_i)` and marginal `P(C_i)`, and arbitrary
//! joint or conditional queries are answered by recursive decomposition down
//! the tree with per-clique caching. Evidence is absorbed by substituting
//! observed values into every stored table.
//!
//! All tables are generic over [`Scalar`]; the aliases below fix the common
//! choices.

pub mod engine;
pub mod error;
pub mod factor;
pub mod generate;
pub mod graph;
pub mod network;
pub mod oracle;
pub mod preprocess;
pub mod scalar;
pub mod tree;
pub mod variable;

pub use engine::{CacheEntry, Engine, EvidenceSet, OpCounters, Query, Resolution, TraceEvent};
pub use error::{Error, Result};
pub use factor::{Factor, VarRef};
pub use graph::{EliminationOrder, UndirectedGraph};
pub use network::{BayesianNetwork, NetworkBuilder};
pub use oracle::JointTable;
pub use preprocess::CliqueState;
pub use scalar::Scalar;
pub use tree::{Clique, CliqueId, CliqueTree, Compilation};
pub use variable::{Assignment, Variable};

pub use num_rational::BigRational;

pub type Factor64 = Factor<f64>;
pub type Factor32 = Factor<f32>;
pub type ExactFactor = Factor<BigRational>;

pub type Network64 = BayesianNetwork<f64>;
pub type Network32 = BayesianNetwork<f32>;
pub type ExactNetwork = BayesianNetwork<BigRational>;

pub type Engine64 = Engine<f64>;
pub type Engine32 = Engine<f32>;
pub type ExactEngine = Engine<BigRational>;
