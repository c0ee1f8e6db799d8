//! Single-edit mutation operators. Each mutant records the difference and the
//! misconception tag that comparing it against the original must produce.

use std::fmt;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use serde::Serialize;

use crate::diff::{Category, Change};
use crate::generate::{class_types, er_types, CLASS_MULTIPLICITIES, ER_MULTIPLICITIES, VISIBILITIES};
use crate::misconception::MisconceptionCode;
use crate::model::{
    canonical_name_lossy, canonicalize, Attribute, Diagram, DiagramKind, Node, NodeKind, RelKind,
    Relationship,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationOperator {
    DeleteNode,
    AddNode,
    DeleteAttribute,
    ChangeAttributeType,
    ChangeVisibility,
    ChangeRelationshipKind,
    ReverseInheritance,
    ChangeMultiplicity,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 8] = [
        MutationOperator::DeleteNode,
        MutationOperator::AddNode,
        MutationOperator::DeleteAttribute,
        MutationOperator::ChangeAttributeType,
        MutationOperator::ChangeVisibility,
        MutationOperator::ChangeRelationshipKind,
        MutationOperator::ReverseInheritance,
        MutationOperator::ChangeMultiplicity,
    ];
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MutationOperator::DeleteNode => "delete_node",
            MutationOperator::AddNode => "add_node",
            MutationOperator::DeleteAttribute => "delete_attribute",
            MutationOperator::ChangeAttributeType => "change_attribute_type",
            MutationOperator::ChangeVisibility => "change_visibility",
            MutationOperator::ChangeRelationshipKind => "change_relationship_kind",
            MutationOperator::ReverseInheritance => "reverse_inheritance",
            MutationOperator::ChangeMultiplicity => "change_multiplicity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub category: Category,
    pub change: Change,
    pub subject: String,
    pub code: MisconceptionCode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mutant {
    pub operator: MutationOperator,
    pub diagram: Diagram,
    pub expected: Expectation,
}

/// Applies `op` to a random applicable site of `diagram`. Returns `None` when
/// the diagram has no such site.
pub fn mutate<R: Rng>(diagram: &Diagram, op: MutationOperator, rng: &mut R) -> Option<Mutant> {
    let mut d = diagram.clone();
    let node_category = match d.kind {
        DiagramKind::ClassDiagram => Category::Classes,
        DiagramKind::ERDiagram => Category::Entities,
    };
    let expect = |category, change, subject: String, code| Expectation { category, change, subject, code };
    let expected = match op {
        MutationOperator::DeleteNode => {
            let node = d
                .nodes
                .iter()
                .filter(|n| d.relationships.iter().any(|r| touches(r, &n.name)))
                .choose(rng)?
                .name
                .clone();
            d.nodes.retain(|n| n.name != node);
            d.relationships.retain(|r| !touches(r, &node));
            expect(node_category, Change::Missing, node, MisconceptionCode::MissingRelationship)
        }
        MutationOperator::AddNode => {
            let anchor = d.nodes.choose(rng)?.name.clone();
            let name = (1..)
                .map(|i| format!("Zephyr{i}"))
                .find(|n| d.node(n).is_none())
                .expect("unbounded");
            let rel = match d.kind {
                DiagramKind::ClassDiagram => Relationship::new(RelKind::Association, &anchor, &name),
                DiagramKind::ERDiagram => Relationship::new(RelKind::ERRelationship, &anchor, &name)
                    .with_multiplicities(
                        Some(*ER_MULTIPLICITIES.choose(rng).unwrap()),
                        Some(*ER_MULTIPLICITIES.choose(rng).unwrap()),
                    ),
            };
            d.nodes.push(Node::new(&name, d.kind.default_node_kind()));
            d.relationships.push(rel);
            expect(node_category, Change::Extra, name, MisconceptionCode::RedundantRelationship)
        }
        MutationOperator::DeleteAttribute => {
            let (ni, ai) = pick_attribute(&d, rng, |_, _| true)?;
            let node = &mut d.nodes[ni];
            let attr = node.attributes.remove(ai);
            expect(
                Category::Attributes,
                Change::Missing,
                format!("{}.{}", node.name, attr.name),
                MisconceptionCode::AttrError,
            )
        }
        MutationOperator::ChangeAttributeType => {
            let (ni, ai) = pick_attribute(&d, rng, |_, _| true)?;
            let pool = match d.kind {
                DiagramKind::ClassDiagram => class_types(),
                DiagramKind::ERDiagram => er_types(),
            };
            let node = &mut d.nodes[ni];
            let attr = &mut node.attributes[ai];
            let current = attr.type_text.as_deref().map(canonical_name_lossy);
            let new = pool
                .iter()
                .filter(|t| Some(canonical_name_lossy(t)) != current)
                .choose(rng)
                .expect("type pool has alternatives");
            attr.type_text = Some(new.to_string());
            expect(
                Category::Attributes,
                Change::Modified,
                format!("{}.{}", node.name, attr.name),
                MisconceptionCode::AttrError,
            )
        }
        MutationOperator::ChangeVisibility => {
            let (ni, ai) = pick_attribute(&d, rng, |n, _| {
                matches!(n.node_kind, NodeKind::Class | NodeKind::AbstractClass | NodeKind::Interface)
            })?;
            let node = &mut d.nodes[ni];
            let attr = &mut node.attributes[ai];
            attr.visibility = *VISIBILITIES.iter().filter(|v| **v != attr.visibility).choose(rng).unwrap();
            expect(
                Category::Visibility,
                Change::Modified,
                format!("{}.{}", node.name, attr.name),
                MisconceptionCode::AttrError,
            )
        }
        MutationOperator::ChangeRelationshipKind => {
            const STRUCTURAL: [RelKind; 5] = [
                RelKind::Association,
                RelKind::DirectedAssociation,
                RelKind::Aggregation,
                RelKind::Composition,
                RelKind::Dependency,
            ];
            let ri = (0..d.relationships.len())
                .filter(|&i| STRUCTURAL.contains(&d.relationships[i].rel_kind))
                .choose(rng)?;
            let rel = &mut d.relationships[ri];
            let subject = rel.subject();
            rel.rel_kind = *STRUCTURAL.iter().filter(|k| **k != rel.rel_kind).choose(rng).unwrap();
            expect(Category::Relationships, Change::Modified, subject, MisconceptionCode::SymbolMisuse)
        }
        MutationOperator::ReverseInheritance => {
            let ri = (0..d.relationships.len())
                .filter(|&i| d.relationships[i].rel_kind == RelKind::Inheritance)
                .choose(rng)?;
            let rel = &mut d.relationships[ri];
            let subject = rel.subject();
            std::mem::swap(&mut rel.end_a, &mut rel.end_b);
            expect(Category::Inheritance, Change::Modified, subject, MisconceptionCode::InheritanceConfusion)
        }
        MutationOperator::ChangeMultiplicity => {
            let ri = (0..d.relationships.len())
                .filter(|&i| !d.relationships[i].rel_kind.is_hierarchy())
                .choose(rng)?;
            let pool = match d.kind {
                DiagramKind::ClassDiagram => CLASS_MULTIPLICITIES,
                DiagramKind::ERDiagram => ER_MULTIPLICITIES,
            };
            let rel = &mut d.relationships[ri];
            let subject = rel.subject();
            let end = if rng.gen_bool(0.5) { &mut rel.multiplicity_a } else { &mut rel.multiplicity_b };
            *end = Some(*pool.iter().filter(|m| Some(**m) != *end).choose(rng).unwrap());
            expect(Category::Multiplicities, Change::Modified, subject, MisconceptionCode::WrongMultiplicity)
        }
    };
    let diagram = canonicalize(&d).ok()?;
    diagram.validate().ok()?;
    Some(Mutant { operator: op, diagram, expected })
}

/// Up to `per_operator` mutants of each operator, skipping inapplicable ones.
pub fn mutants<R: Rng>(diagram: &Diagram, per_operator: usize, rng: &mut R) -> Vec<Mutant> {
    MutationOperator::ALL
        .iter()
        .flat_map(|op| (0..per_operator).filter_map(|_| mutate(diagram, *op, rng)).collect::<Vec<_>>())
        .collect()
}

fn touches(rel: &Relationship, node: &str) -> bool {
    rel.end_a == node || rel.end_b == node
}

fn pick_attribute<R: Rng>(
    d: &Diagram,
    rng: &mut R,
    allow: impl Fn(&Node, &Attribute) -> bool,
) -> Option<(usize, usize)> {
    d.nodes
        .iter()
        .enumerate()
        .flat_map(|(ni, n)| n.attributes.iter().enumerate().map(move |(ai, a)| (ni, ai, n, a)))
        .filter(|(_, _, n, a)| allow(n, a))
        .map(|(ni, ai, _, _)| (ni, ai))
        .choose(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_diagram;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mutants_are_valid_and_differ() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = std::collections::HashSet::new();
        for i in 0..60 {
            let kind = if i % 2 == 0 { DiagramKind::ClassDiagram } else { DiagramKind::ERDiagram };
            let d = random_diagram(&mut rng, kind, 7);
            for m in mutants(&d, 1, &mut rng) {
                m.diagram.validate().unwrap();
                assert_ne!(m.diagram, d, "{}", m.operator);
                seen.insert(m.operator);
            }
        }
        assert_eq!(seen.len(), MutationOperator::ALL.len());
    }
}
