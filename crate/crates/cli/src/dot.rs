//! Graphviz export of a clique tree.

use std::fmt::Write as _;

use cliquenet::CliqueTree;

/// Nodes are labelled with clique members, edges with separators.
pub fn tree_to_dot(tree: &CliqueTree) -> String {
    let mut out = String::from("graph clique_tree {\n  node [shape=box];\n");
    for c in tree.cliques() {
        writeln!(out, "  c{} [label=\"{}\"];", c.id, escape(&c.label())).unwrap();
    }
    for c in tree.cliques() {
        if let Some(p) = c.parent {
            let sep: Vec<&str> = c.separator.iter().map(String::as_str).collect();
            writeln!(out, "  c{p} -- c{} [label=\"{}\"];", c.id, escape(&sep.join(","))).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
