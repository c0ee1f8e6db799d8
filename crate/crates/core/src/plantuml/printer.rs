use std::fmt::Write as _;

use crate::model::{Attribute, Diagram, DiagramKind, Node, NodeKind, Operation, Relationship};

use super::crows_foot_supported;

/// Emits canonical PlantUML: LF line endings, two-space member indentation,
/// nodes then relationships in the diagram's (canonical) order.
pub fn print_plantuml(diagram: &Diagram) -> String {
    let mut out = String::from("@startuml\n");
    for node in &diagram.nodes {
        print_node(&mut out, node);
    }
    for rel in &diagram.relationships {
        print_relationship(&mut out, diagram.kind, rel);
    }
    out.push_str("@enduml");
    out
}

fn name(raw: &str) -> String {
    let bare = !raw.is_empty()
        && raw.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !matches!(raw.to_ascii_lowercase().as_str(), "class" | "abstract" | "interface" | "enum" | "entity" | "note");
    if bare {
        raw.to_string()
    } else {
        format!("\"{raw}\"")
    }
}

fn print_node(out: &mut String, node: &Node) {
    let _ = write!(out, "{} {}", node.node_kind.keyword(), name(&node.name));
    if node.attributes.is_empty() && node.operations.is_empty() {
        out.push('\n');
        return;
    }
    out.push_str(" {\n");
    if node.node_kind == NodeKind::Entity {
        for attr in node.attributes.iter().filter(|a| a.is_key) {
            print_attribute(out, attr);
        }
        out.push_str("  --\n");
        for attr in node.attributes.iter().filter(|a| !a.is_key) {
            print_attribute(out, attr);
        }
    } else {
        for attr in &node.attributes {
            print_attribute(out, attr);
        }
    }
    for op in &node.operations {
        print_operation(out, op);
    }
    out.push_str("}\n");
}

fn print_attribute(out: &mut String, attr: &Attribute) {
    out.push_str("  ");
    if attr.is_mandatory {
        out.push('*');
    }
    out.push_str(attr.visibility.prefix());
    out.push_str(&attr.name);
    if let Some(ty) = &attr.type_text {
        let _ = write!(out, " : {ty}");
    }
    out.push('\n');
}

fn print_operation(out: &mut String, op: &Operation) {
    let params: Vec<String> = op
        .parameters
        .iter()
        .map(|p| match &p.type_text {
            Some(ty) => format!("{} : {ty}", p.name),
            None => p.name.clone(),
        })
        .collect();
    let _ = write!(out, "  {}{}({})", op.visibility.prefix(), op.name, params.join(", "));
    if let Some(ret) = &op.return_type {
        let _ = write!(out, " : {ret}");
    }
    out.push('\n');
}

fn print_relationship(out: &mut String, kind: DiagramKind, rel: &Relationship) {
    let a = name(&rel.end_a);
    let b = name(&rel.end_b);
    match kind {
        DiagramKind::ERDiagram => {
            let left = rel.multiplicity_a.and_then(crows_foot_supported).map(|s| s.0).unwrap_or("||");
            let right = rel.multiplicity_b.and_then(crows_foot_supported).map(|s| s.1).unwrap_or("||");
            let _ = write!(out, "{a} {left}--{right} {b}");
        }
        DiagramKind::ClassDiagram => {
            out.push_str(&a);
            if let Some(m) = rel.multiplicity_a {
                let _ = write!(out, " \"{m}\"");
            }
            let _ = write!(out, " {}", rel.rel_kind.arrow());
            if let Some(m) = rel.multiplicity_b {
                let _ = write!(out, " \"{m}\"");
            }
            let _ = write!(out, " {b}");
        }
    }
    if let Some(label) = &rel.label {
        let _ = write!(out, " : {label}");
    }
    out.push('\n');
}
