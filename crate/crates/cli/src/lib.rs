//! Command-line front end: network files, query expressions and sessions.

pub mod dot;
pub mod expr;
pub mod format;
pub mod session;

pub use format::{load, parse_network, serialize_network, FormatError, Loaded};
pub use session::{CliError, Reply, Session};
