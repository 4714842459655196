//! Deterministic JSON and DOT renderings of summary hierarchies.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ConceptNode, NestedDiagram, SummaryHierarchy};

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    parent: usize,
    child: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct HierarchyDocument {
    nodes: Vec<ConceptNode>,
    edges: Vec<EdgeRecord>,
}

/// JSON document with one entry per concept (intent, extent pairs, card,
/// count, level) and the cover edges. Byte-stable for a fixed hierarchy.
pub fn hierarchy_to_json(h: &SummaryHierarchy) -> String {
    let doc = HierarchyDocument {
        nodes: h.nodes.clone(),
        edges: h
            .edges
            .iter()
            .map(|&(parent, child)| EdgeRecord { parent, child })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("hierarchy serializes");
    out.push('\n');
    out
}

/// Reads a hierarchy back from its JSON export.
pub fn hierarchy_from_json(text: &str) -> Result<SummaryHierarchy, serde_json::Error> {
    let doc: HierarchyDocument = serde_json::from_str(text)?;
    Ok(SummaryHierarchy {
        nodes: doc.nodes,
        edges: doc.edges.iter().map(|e| (e.parent, e.child)).collect(),
    })
}

fn dot_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn node_label(node: &ConceptNode) -> String {
    format!("{{{}}} / card={:.2}", node.intent.join(", "), node.card)
}

/// Hasse diagram in DOT, nodes labeled `intent / card`.
pub fn hierarchy_to_dot(h: &SummaryHierarchy) -> String {
    let mut out = String::from("digraph summary_hierarchy {\n  rankdir=TB;\n");
    for (i, node) in h.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", dot_escape(&node_label(node)));
    }
    for &(parent, child) in &h.edges {
        let _ = writeln!(out, "  n{parent} -> n{child};");
    }
    out.push_str("}\n");
    out
}

/// Nested line diagram in DOT: one cluster per outer concept, the inner
/// hierarchy drawn inside, and outer cover edges drawn between cluster
/// anchors.
pub fn nested_to_dot(d: &NestedDiagram) -> String {
    let mut out = String::from("digraph nested_diagram {\n  rankdir=TB;\n  compound=true;\n");
    let mut anchor = vec![String::new(); d.outer.nodes.len()];
    for (o, node) in d.outer.nodes.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_o{o} {{");
        let _ = writeln!(out, "    label=\"{}\";", dot_escape(&node_label(node)));
        match &d.cells[o] {
            Some(inner) => {
                anchor[o] = format!("o{o}_n{}", inner.root());
                for (i, inner_node) in inner.nodes.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "    o{o}_n{i} [label=\"{}\"];",
                        dot_escape(&node_label(inner_node))
                    );
                }
                for &(p, ch) in &inner.edges {
                    let _ = writeln!(out, "    o{o}_n{p} -> o{o}_n{ch};");
                }
            }
            None => {
                anchor[o] = format!("o{o}_empty");
                let _ = writeln!(out, "    o{o}_empty [label=\"(empty)\"];");
            }
        }
        out.push_str("  }\n");
    }
    for &(p, ch) in &d.outer.edges {
        let _ = writeln!(
            out,
            "  {} -> {} [ltail=cluster_o{p}, lhead=cluster_o{ch}];",
            anchor[p], anchor[ch]
        );
    }
    out.push_str("}\n");
    out
}
