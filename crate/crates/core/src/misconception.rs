//! Tags differences with common modelling misconceptions and checks that a
//! class diagram and an ER diagram describe the same domain.
//!
//! Rule table, first match wins:
//!
//! | difference                              | code                    |
//! |-----------------------------------------|-------------------------|
//! | any Minor name-spelling change          | `NamingDrift`           |
//! | category Attributes or Visibility       | `AttrError`             |
//! | category Inheritance                    | `InheritanceConfusion`  |
//! | Relationships, Modified                 | `SymbolMisuse`          |
//! | Relationships, Missing                  | `MissingRelationship`   |
//! | Relationships, Extra                    | `RedundantRelationship` |
//! | category Multiplicities                 | `WrongMultiplicity`     |
//! | Classes/Entities kind change            | `SymbolMisuse`          |
//!
//! Missing or extra nodes and operation differences carry no tag.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{Aspect, Category, Change, DiffReport, Difference};
use crate::matching::match_names;
use crate::model::{canonical_name_lossy, Diagram, DiagramKind, NodeKind, RelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MisconceptionCode {
    AttrError,
    InheritanceConfusion,
    SymbolMisuse,
    MissingRelationship,
    RedundantRelationship,
    WrongMultiplicity,
    CrossModelInconsistency,
    NamingDrift,
}

impl MisconceptionCode {
    pub const ALL: [MisconceptionCode; 8] = [
        MisconceptionCode::AttrError,
        MisconceptionCode::InheritanceConfusion,
        MisconceptionCode::SymbolMisuse,
        MisconceptionCode::MissingRelationship,
        MisconceptionCode::RedundantRelationship,
        MisconceptionCode::WrongMultiplicity,
        MisconceptionCode::CrossModelInconsistency,
        MisconceptionCode::NamingDrift,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MisconceptionCode::AttrError => "AttrError",
            MisconceptionCode::InheritanceConfusion => "InheritanceConfusion",
            MisconceptionCode::SymbolMisuse => "SymbolMisuse",
            MisconceptionCode::MissingRelationship => "MissingRelationship",
            MisconceptionCode::RedundantRelationship => "RedundantRelationship",
            MisconceptionCode::WrongMultiplicity => "WrongMultiplicity",
            MisconceptionCode::CrossModelInconsistency => "CrossModelInconsistency",
            MisconceptionCode::NamingDrift => "NamingDrift",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MisconceptionCode::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn explanation(self) -> &'static str {
        match self {
            MisconceptionCode::AttrError => {
                "Attribute details such as presence, type, key membership or visibility differ from the reference."
            }
            MisconceptionCode::InheritanceConfusion => {
                "Generalization is modelled differently: the hierarchy kind or its direction differs from the reference."
            }
            MisconceptionCode::SymbolMisuse => {
                "A relationship or element symbol differs from the one the reference uses for the same connection."
            }
            MisconceptionCode::MissingRelationship => "The reference connects elements that the submission leaves unconnected.",
            MisconceptionCode::RedundantRelationship => "The submission connects elements that the reference leaves unconnected.",
            MisconceptionCode::WrongMultiplicity => "Cardinality constraints on relationship ends differ from the reference.",
            MisconceptionCode::CrossModelInconsistency => "The class diagram and the ER diagram describe the domain differently.",
            MisconceptionCode::NamingDrift => "Element names are spelled differently from the reference.",
        }
    }
}

impl fmt::Display for MisconceptionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisconceptionTag {
    pub code: MisconceptionCode,
    pub difference_refs: Vec<usize>,
    pub explanation: String,
}

impl MisconceptionTag {
    /// Occurrences counted by analytics: one per referenced difference, or
    /// one for a tag that stands on its own.
    pub fn occurrences(&self) -> u64 {
        self.difference_refs.len().max(1) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrossModelError {
    #[error("expected a {expected} but got a {found}")]
    KindMismatch { expected: DiagramKind, found: DiagramKind },
}

/// The code a single difference contributes to, if any.
pub fn code_for(d: &Difference) -> Option<MisconceptionCode> {
    use MisconceptionCode as M;
    if d.aspect == Aspect::Name {
        return Some(M::NamingDrift);
    }
    match (d.category, d.change) {
        (Category::Attributes | Category::Visibility, _) => Some(M::AttrError),
        (Category::Inheritance, _) => Some(M::InheritanceConfusion),
        (Category::Relationships, Change::Modified) => Some(M::SymbolMisuse),
        (Category::Relationships, Change::Missing) => Some(M::MissingRelationship),
        (Category::Relationships, Change::Extra) => Some(M::RedundantRelationship),
        (Category::Multiplicities, _) => Some(M::WrongMultiplicity),
        (Category::Classes | Category::Entities, Change::Modified) if d.aspect == Aspect::Kind => {
            Some(M::SymbolMisuse)
        }
        _ => None,
    }
}

/// Groups the report's differences by misconception code, in code order.
pub fn classify(report: &DiffReport) -> Vec<MisconceptionTag> {
    let mut groups: BTreeMap<MisconceptionCode, Vec<usize>> = BTreeMap::new();
    for (i, d) in report.differences.iter().enumerate() {
        if let Some(code) = code_for(d) {
            groups.entry(code).or_default().push(i);
        }
    }
    groups
        .into_iter()
        .map(|(code, difference_refs)| MisconceptionTag {
            code,
            difference_refs,
            explanation: code.explanation().to_string(),
        })
        .collect()
}

/// Compares the classes of a class diagram with the entities of an ER
/// diagram by name and by the number of structural relationships each takes
/// part in. Interfaces and enums have no ER counterpart and are ignored.
pub fn cross_model_check(
    class_diagram: &Diagram,
    er_diagram: &Diagram,
    threshold: f64,
) -> Result<Vec<MisconceptionTag>, CrossModelError> {
    if class_diagram.kind != DiagramKind::ClassDiagram {
        return Err(CrossModelError::KindMismatch {
            expected: DiagramKind::ClassDiagram,
            found: class_diagram.kind,
        });
    }
    if er_diagram.kind != DiagramKind::ERDiagram {
        return Err(CrossModelError::KindMismatch { expected: DiagramKind::ERDiagram, found: er_diagram.kind });
    }
    let classes: Vec<&str> = class_diagram
        .nodes
        .iter()
        .filter(|n| matches!(n.node_kind, NodeKind::Class | NodeKind::AbstractClass))
        .map(|n| n.name.as_str())
        .collect();
    let entities: Vec<&str> = er_diagram.nodes.iter().map(|n| n.name.as_str()).collect();
    let matching = match_names(&classes, &entities, threshold);

    let tag = |explanation: String| MisconceptionTag {
        code: MisconceptionCode::CrossModelInconsistency,
        difference_refs: Vec::new(),
        explanation,
    };
    let mut tags = Vec::new();
    for name in &matching.unmatched_reference {
        tags.push(tag(format!("Class `{name}` has no corresponding entity.")));
    }
    for name in &matching.unmatched_student {
        tags.push(tag(format!("Entity `{name}` has no corresponding class.")));
    }
    for pair in &matching.pairs {
        let class_degree = degree(class_diagram, &pair.reference);
        let entity_degree = degree(er_diagram, &pair.student);
        if class_degree != entity_degree {
            tags.push(tag(format!(
                "Class `{}` takes part in {class_degree} relationship(s) but entity `{}` in {entity_degree}.",
                pair.reference, pair.student
            )));
        }
    }
    Ok(tags)
}

fn degree(diagram: &Diagram, node: &str) -> usize {
    let key = canonical_name_lossy(node);
    diagram
        .relationships
        .iter()
        .filter(|r| !matches!(r.rel_kind, RelKind::Inheritance | RelKind::Realization | RelKind::Dependency))
        .filter(|r| {
            canonical_name_lossy(&r.end_a) == key || canonical_name_lossy(&r.end_b) == key
        })
        .count()
}
