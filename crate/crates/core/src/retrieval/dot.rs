//! Graphviz rendering of an activation run.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::graph::EntityId;

use super::{Activation, Subgraph};

pub const GOLDEN_COLOR: &str = "yellow";
pub const ACTIVATED_COLOR: &str = "red";
pub const INACTIVE_COLOR: &str = "lightblue";
pub const ACTIVATED_GOLDEN_COLOR: &str = "pink";

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ")
}

pub fn node_color(activated: bool, golden: bool) -> &'static str {
    match (activated, golden) {
        (true, true) => ACTIVATED_GOLDEN_COLOR,
        (false, true) => GOLDEN_COLOR,
        (true, false) => ACTIVATED_COLOR,
        (false, false) => INACTIVE_COLOR,
    }
}

/// Seeds get a thick border; edges carry the rescaled weight.
pub fn export_activation_dot(
    subgraph: &Subgraph,
    activation: &Activation,
    golden: Option<&BTreeSet<EntityId>>,
) -> String {
    let seeds: BTreeSet<EntityId> = subgraph.seed_ids().into_iter().collect();
    let mut out = String::from("digraph activation {\n  node [style=filled, shape=ellipse];\n");
    for &e in subgraph.entities() {
        let is_golden = golden.is_some_and(|g| g.contains(&e));
        let color = node_color(activation.activated.contains(&e), is_golden);
        let border = if seeds.contains(&e) {
            ", color=\"darkred\", penwidth=3"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "  \"{e}\" [label=\"{}\\n{:.2}\", fillcolor=\"{color}\"{border}];",
            escape(&subgraph.label(e)),
            activation.state.value(e),
        );
    }
    for (from, arc) in subgraph.arcs() {
        if arc.forward {
            let _ = writeln!(
                out,
                "  \"{from}\" -> \"{}\" [label=\"{:.2}\"];",
                arc.target, arc.weight
            );
        }
    }
    out.push_str("}\n");
    out
}
