use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable `{name}` used with cardinality {left} and {right}")]
    IncompatibleVariable {
        name: String,
        left: usize,
        right: usize,
    },
    #[error("variable `{0}` is not in the factor's scope")]
    MissingVariable(String),
    #[error("state index {state} out of range for `{name}` (cardinality {cardinality})")]
    BadState {
        name: String,
        state: usize,
        cardinality: usize,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown state `{state}` for variable `{name}`")]
    UnknownState { name: String, state: String },
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("the parent relation has a cycle through {0:?}")]
    Cycle(Vec<String>),
    #[error("invalid elimination order: {0}")]
    InvalidOrder(String),
    #[error("clique {clique} breaks the running intersection property (separator {separator:?})")]
    RunningIntersection {
        clique: String,
        separator: Vec<String>,
    },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("variable `{0}` is observed and cannot appear in a query")]
    Observed(String),
    #[error("variable `{name}` is already observed in state `{current}`")]
    ConflictingObservation { name: String, current: String },
    #[error("variable `{0}` is not observed")]
    NotObserved(String),
    #[error("joint state space of {cells} cells exceeds the cap of {cap}")]
    StateSpaceTooLarge { cells: u128, cap: usize },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}
