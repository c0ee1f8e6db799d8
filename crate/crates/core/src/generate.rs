//! Seeded random generation of valid diagrams for property tests, the
//! mutation harness and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    canonicalize, Attribute, Diagram, DiagramKind, Multiplicity, Node, NodeKind, Operation, RelKind,
    Relationship, Upper, Visibility,
};

pub const NODE_NAMES: &[&str] = &[
    "Student", "Course", "Teacher", "Enrollment", "Library", "Book", "Author", "Order", "Customer",
    "Product", "Invoice", "Payment", "Address", "Account", "Department", "Employee", "Project",
    "Room", "Building", "Vehicle", "Driver", "Ticket", "Event", "Venue", "Review", "Category",
    "Supplier", "Warehouse", "Shipment", "Playlist", "Song", "Artist", "Album", "Patient", "Doctor",
    "Appointment", "Hospital", "Ward", "Recipe", "Ingredient", "Menu", "Table", "Reservation",
    "Flight", "Airport", "Passenger", "Seat", "Order Line", "Bank Branch", "Lab_Report",
];

const ATTRIBUTE_NAMES: &[&str] = &[
    "id", "name", "title", "email", "price", "total", "quantity", "date", "status", "code",
    "description", "rating", "capacity", "address", "phone", "salary", "isbn", "year", "duration",
    "balance", "weight", "color", "level", "score", "created_at",
];

const CLASS_TYPES: &[&str] = &[
    "String", "int", "Integer", "float", "double", "boolean", "Date", "List<String>", "Money",
    "long", "char",
];

const ER_TYPES: &[&str] = &["int", "varchar(255)", "text", "date", "float", "boolean", "decimal(10,2)", "timestamp"];

const OPERATION_NAMES: &[&str] = &[
    "enroll", "cancel", "pay", "ship", "register", "update", "find", "add", "remove", "print",
    "validate", "compute", "open", "close", "assign",
];

const PARAMETER_NAMES: &[&str] = &["x", "item", "amount", "when", "target", "count"];

const ENUM_VALUES: &[&str] = &["RED", "GREEN", "BLUE", "OPEN", "CLOSED", "PENDING", "DONE", "NEW"];

const LABELS: &[&str] = &["has", "owns", "places", "contains", "belongs to", "teaches", "uses"];

pub const CLASS_MULTIPLICITIES: &[Multiplicity] = &[
    Multiplicity::ONE,
    Multiplicity::ZERO_OR_ONE,
    Multiplicity::MANY,
    Multiplicity::ONE_OR_MORE,
    Multiplicity { min: 2, max: Upper::Bounded(5) },
    Multiplicity { min: 3, max: Upper::Bounded(3) },
];

/// Multiplicities expressible with crow's-foot ends.
pub const ER_MULTIPLICITIES: &[Multiplicity] =
    &[Multiplicity::ONE, Multiplicity::ZERO_OR_ONE, Multiplicity::ONE_OR_MORE, Multiplicity::MANY];

pub const VISIBILITIES: &[Visibility] = &[
    Visibility::Public,
    Visibility::Private,
    Visibility::Protected,
    Visibility::Package,
    Visibility::Unspecified,
];

pub fn class_types() -> &'static [&'static str] {
    CLASS_TYPES
}

pub fn er_types() -> &'static [&'static str] {
    ER_TYPES
}

/// A random valid, canonical diagram of `kind` with 1 to `max_nodes` nodes.
pub fn random_diagram<R: Rng>(rng: &mut R, kind: DiagramKind, max_nodes: usize) -> Diagram {
    let count = rng.gen_range(1..=max_nodes.clamp(1, NODE_NAMES.len()));
    let names: Vec<&str> = NODE_NAMES.choose_multiple(rng, count).copied().collect();
    let mut diagram = Diagram::new(kind);
    for name in &names {
        diagram.nodes.push(match kind {
            DiagramKind::ClassDiagram => random_class(rng, name),
            DiagramKind::ERDiagram => random_entity(rng, name),
        });
    }
    let rel_count = rng.gen_range(0..=count + 1);
    for _ in 0..rel_count {
        if let Some(rel) = random_relationship(rng, &diagram) {
            if !diagram.relationships.iter().any(|r| same_link(r, &rel)) {
                diagram.relationships.push(rel);
            }
        }
    }
    canonicalize(&diagram).expect("generated diagrams are valid")
}

fn same_link(a: &Relationship, b: &Relationship) -> bool {
    (a.end_a == b.end_a && a.end_b == b.end_b) || (a.end_a == b.end_b && a.end_b == b.end_a)
}

fn random_class<R: Rng>(rng: &mut R, name: &str) -> Node {
    let kind = match rng.gen_range(0..10) {
        0 => NodeKind::AbstractClass,
        1 => NodeKind::Interface,
        2 => NodeKind::Enum,
        _ => NodeKind::Class,
    };
    let mut node = Node::new(name, kind);
    if kind == NodeKind::Enum {
        let n = rng.gen_range(0..=4);
        for value in ENUM_VALUES.choose_multiple(rng, n) {
            node.attributes.push(Attribute::new(*value, None));
        }
        return node;
    }
    if kind != NodeKind::Interface {
        let n = rng.gen_range(0..=4);
        for attr in ATTRIBUTE_NAMES.choose_multiple(rng, n) {
            let ty = if rng.gen_bool(0.9) { Some(*CLASS_TYPES.choose(rng).unwrap()) } else { None };
            node.attributes
                .push(Attribute::new(*attr, ty).with_visibility(*VISIBILITIES.choose(rng).unwrap()));
        }
    }
    let n = rng.gen_range(0..=3);
    for op_name in OPERATION_NAMES.choose_multiple(rng, n) {
        let mut op = Operation::new(*op_name).with_visibility(*VISIBILITIES.choose(rng).unwrap());
        let params = rng.gen_range(0..=2);
        for p in PARAMETER_NAMES.choose_multiple(rng, params) {
            op = op.param(p, Some(CLASS_TYPES.choose(rng).unwrap()));
        }
        if rng.gen_bool(0.6) {
            op = op.returns(CLASS_TYPES.choose(rng).unwrap());
        }
        node.operations.push(op);
    }
    node
}

fn random_entity<R: Rng>(rng: &mut R, name: &str) -> Node {
    let mut node = Node::new(name, NodeKind::Entity);
    let n = rng.gen_range(0..=5);
    let keys = if n == 0 { 0 } else { rng.gen_range(0..=n.min(2)) };
    for (i, attr) in ATTRIBUTE_NAMES.choose_multiple(rng, n).enumerate() {
        let ty = if rng.gen_bool(0.9) { Some(*ER_TYPES.choose(rng).unwrap()) } else { None };
        let mut a = Attribute::new(*attr, ty);
        if i < keys {
            a = a.key().mandatory();
        } else if rng.gen_bool(0.4) {
            a = a.mandatory();
        }
        node.attributes.push(a);
    }
    node
}

fn random_relationship<R: Rng>(rng: &mut R, diagram: &Diagram) -> Option<Relationship> {
    let n = diagram.nodes.len();
    if n < 2 {
        return None;
    }
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let (a, b) = (&diagram.nodes[i], &diagram.nodes[j]);
    let label = if rng.gen_bool(0.3) { Some(*LABELS.choose(rng).unwrap()) } else { None };
    let rel = match diagram.kind {
        DiagramKind::ERDiagram => Relationship::new(RelKind::ERRelationship, &a.name, &b.name)
            .with_multiplicities(
                Some(*ER_MULTIPLICITIES.choose(rng).unwrap()),
                Some(*ER_MULTIPLICITIES.choose(rng).unwrap()),
            ),
        DiagramKind::ClassDiagram => {
            let classlike = |k: NodeKind| matches!(k, NodeKind::Class | NodeKind::AbstractClass);
            // Hierarchies always point from a later node to an earlier one, so
            // they never form cycles.
            let (child, parent) = if i > j { (a, b) } else { (b, a) };
            if classlike(child.node_kind) && classlike(parent.node_kind) && rng.gen_bool(0.3) {
                Relationship::new(RelKind::Inheritance, &child.name, &parent.name)
            } else if classlike(child.node_kind) && parent.node_kind == NodeKind::Interface && rng.gen_bool(0.5) {
                Relationship::new(RelKind::Realization, &child.name, &parent.name)
            } else {
                let kind = *[
                    RelKind::Association,
                    RelKind::DirectedAssociation,
                    RelKind::Aggregation,
                    RelKind::Composition,
                    RelKind::Dependency,
                ]
                .choose(rng)
                .unwrap();
                let mut mult = || {
                    if rng.gen_bool(0.6) {
                        Some(*CLASS_MULTIPLICITIES.choose(rng).unwrap())
                    } else {
                        None
                    }
                };
                let (ma, mb) = (mult(), mult());
                Relationship::new(kind, &a.name, &b.name).with_multiplicities(ma, mb)
            }
        }
    };
    Some(match label {
        Some(l) => rel.with_label(l),
        None => rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_diagrams_validate_and_are_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for i in 0..200 {
            let kind = if i % 2 == 0 { DiagramKind::ClassDiagram } else { DiagramKind::ERDiagram };
            let d = random_diagram(&mut rng, kind, 8);
            d.validate().unwrap();
            assert_eq!(canonicalize(&d).unwrap(), d);
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_diagram(&mut ChaCha8Rng::seed_from_u64(3), DiagramKind::ClassDiagram, 6);
        let b = random_diagram(&mut ChaCha8Rng::seed_from_u64(3), DiagramKind::ClassDiagram, 6);
        assert_eq!(a, b);
    }
}
