//! Diagram intermediate representation shared by the parser, the diff engine,
//! feedback rendering and the store.
//!
//! A [`Diagram`] is tagged with its [`DiagramKind`] so class diagrams and ER
//! diagrams go through the same matching and diff machinery. Names are compared
//! through [`canonical_name`], which folds case and drops whitespace,
//! underscores and hyphens.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("name is empty after canonicalization")]
    EmptyName,
    #[error("malformed multiplicity `{0}`")]
    MalformedMultiplicity(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate attribute `{attribute}` in `{node}`")]
    DuplicateAttribute { node: String, attribute: String },
    #[error("duplicate operation `{signature}` in `{node}`")]
    DuplicateOperation { node: String, signature: String },
    #[error("relationship endpoint `{0}` does not name a node")]
    UnknownEndpoint(String),
    #[error("{node_kind} node `{node}` is not allowed in a {diagram_kind}")]
    NodeKindNotAllowed {
        node: String,
        node_kind: NodeKind,
        diagram_kind: DiagramKind,
    },
    #[error("{rel_kind} relationship is not allowed in a {diagram_kind}")]
    RelationshipKindNotAllowed {
        rel_kind: RelKind,
        diagram_kind: DiagramKind,
    },
    #[error("invalid multiplicity on {0}: {1}")]
    InvalidMultiplicity(String, String),
}

/// Case-folds `raw` and strips surrounding whitespace plus any internal
/// whitespace, underscores and hyphens.
pub fn canonical_name(raw: &str) -> Result<String, ModelError> {
    let name = canonical_name_lossy(raw);
    if name.is_empty() {
        Err(ModelError::EmptyName)
    } else {
        Ok(name)
    }
}

/// Like [`canonical_name`] but returns an empty string instead of an error.
pub fn canonical_name_lossy(raw: &str) -> String {
    raw.chars()
        .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagramKind {
    ClassDiagram,
    #[serde(rename = "er_diagram")]
    ERDiagram,
}

impl DiagramKind {
    pub fn default_node_kind(self) -> NodeKind {
        match self {
            DiagramKind::ClassDiagram => NodeKind::Class,
            DiagramKind::ERDiagram => NodeKind::Entity,
        }
    }

    pub fn allows_node(self, kind: NodeKind) -> bool {
        match self {
            DiagramKind::ClassDiagram => kind != NodeKind::Entity,
            DiagramKind::ERDiagram => kind == NodeKind::Entity,
        }
    }

    pub fn allows_relationship(self, kind: RelKind) -> bool {
        match self {
            DiagramKind::ClassDiagram => kind != RelKind::ERRelationship,
            DiagramKind::ERDiagram => kind == RelKind::ERRelationship,
        }
    }
}

impl fmt::Display for DiagramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagramKind::ClassDiagram => "class diagram",
            DiagramKind::ERDiagram => "ER diagram",
        })
    }
}

impl FromStr for DiagramKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "class" | "class_diagram" | "uml" => Ok(DiagramKind::ClassDiagram),
            "er" | "er_diagram" | "erd" => Ok(DiagramKind::ERDiagram),
            other => Err(format!("unknown diagram kind `{other}` (expected class or er)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Class,
    AbstractClass,
    Interface,
    Enum,
    Entity,
}

impl NodeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Class => "class",
            NodeKind::AbstractClass => "abstract class",
            NodeKind::Interface => "interface",
            NodeKind::Enum => "enum",
            NodeKind::Entity => "entity",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Private,
    Protected,
    Package,
    #[default]
    Unspecified,
}

impl Visibility {
    pub fn from_prefix(c: char) -> Option<Self> {
        match c {
            '+' => Some(Visibility::Public),
            '-' => Some(Visibility::Private),
            '#' => Some(Visibility::Protected),
            '~' => Some(Visibility::Package),
            _ => None,
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            Visibility::Public => "+",
            Visibility::Private => "-",
            Visibility::Protected => "#",
            Visibility::Package => "~",
            Visibility::Unspecified => "",
        }
    }
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
            Visibility::Protected => "protected",
            Visibility::Package => "package",
            Visibility::Unspecified => "unspecified",
        })
    }
}

/// Upper bound of a [`Multiplicity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Upper {
    Bounded(u32),
    Unbounded,
}

impl PartialOrd for Upper {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Upper {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Upper::Bounded(a), Upper::Bounded(b)) => a.cmp(b),
            (Upper::Bounded(_), Upper::Unbounded) => Ordering::Less,
            (Upper::Unbounded, Upper::Bounded(_)) => Ordering::Greater,
            (Upper::Unbounded, Upper::Unbounded) => Ordering::Equal,
        }
    }
}

/// Allowed count range on one end of a relationship.
///
/// Serialized as its canonical text form (`1`, `0..*`, `2..5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplicity {
    pub min: u32,
    pub max: Upper,
}

impl Multiplicity {
    pub const ONE: Multiplicity = Multiplicity { min: 1, max: Upper::Bounded(1) };
    pub const ZERO_OR_ONE: Multiplicity = Multiplicity { min: 0, max: Upper::Bounded(1) };
    pub const ONE_OR_MORE: Multiplicity = Multiplicity { min: 1, max: Upper::Unbounded };
    pub const MANY: Multiplicity = Multiplicity { min: 0, max: Upper::Unbounded };

    pub fn new(min: u32, max: Upper) -> Result<Self, ModelError> {
        if let Upper::Bounded(m) = max {
            if min > m {
                return Err(ModelError::MalformedMultiplicity(format!("{min}..{m}")));
            }
        }
        Ok(Multiplicity { min, max })
    }
}

/// Parses the multiplicity grammar `N`, `N..M`, `N..*` and `*`.
pub fn canonical_multiplicity(raw: &str) -> Result<Multiplicity, ModelError> {
    let text = raw.trim();
    let malformed = || ModelError::MalformedMultiplicity(raw.to_string());
    let number = |s: &str| -> Result<u32, ModelError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        s.parse().map_err(|_| malformed())
    };
    if text == "*" {
        return Ok(Multiplicity::MANY);
    }
    match text.split_once("..") {
        None => {
            let n = number(text)?;
            Ok(Multiplicity { min: n, max: Upper::Bounded(n) })
        }
        Some((lo, hi)) => {
            let min = number(lo)?;
            let max = if hi == "*" { Upper::Unbounded } else { Upper::Bounded(number(hi)?) };
            Multiplicity::new(min, max).map_err(|_| malformed())
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.max {
            Upper::Bounded(max) if max == self.min => write!(f, "{max}"),
            Upper::Bounded(max) => write!(f, "{}..{max}", self.min),
            Upper::Unbounded => write!(f, "{}..*", self.min),
        }
    }
}

impl FromStr for Multiplicity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        canonical_multiplicity(s)
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Multiplicity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        canonical_multiplicity(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub type_text: Option<String>,
    #[serde(default)]
    pub visibility: Visibility,
    #[serde(default)]
    pub is_key: bool,
    #[serde(default)]
    pub is_mandatory: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, type_text: Option<&str>) -> Self {
        Attribute {
            name: name.into(),
            type_text: type_text.map(str::to_string),
            visibility: Visibility::Unspecified,
            is_key: false,
            is_mandatory: false,
        }
    }

    pub fn with_visibility(mut self, visibility: Visibility) -> Self {
        self.visibility = visibility;
        self
    }

    pub fn key(mut self) -> Self {
        self.is_key = true;
        self
    }

    pub fn mandatory(mut self) -> Self {
        self.is_mandatory = true;
        self
    }

    pub fn canonical_name(&self) -> String {
        canonical_name_lossy(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub type_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Operation {
    pub name: String,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_type: Option<String>,
    #[serde(default)]
    pub visibility: Visibility,
}

/// Identity of an operation within its node: canonical name plus the
/// canonicalized parameter type list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub name: String,
    pub parameter_types: Vec<String>,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.parameter_types.join(", "))
    }
}

impl Operation {
    pub fn new(name: impl Into<String>) -> Self {
        Operation {
            name: name.into(),
            parameters: Vec::new(),
            return_type: None,
            visibility: Visibility::Unspecified,
        }
    }

    pub fn param(mut self, name: &str, type_text: Option<&str>) -> Self {
        self.parameters.push(Parameter {
            name: name.to_string(),
            type_text: type_text.map(str::to_string),
        });
        self
    }

    pub fn returns(mut self, type_text: &str) -> Self {
        self.return_type = Some(type_text.to_string());
        self
    }

    pub fn with_visibility(mut self, visibility: Visibility) -> Self {
        self.visibility = visibility;
        self
    }

    pub fn signature(&self) -> Signature {
        Signature {
            name: canonical_name_lossy(&self.name),
            parameter_types: self
                .parameters
                .iter()
                .map(|p| p.type_text.as_deref().map(canonical_name_lossy).unwrap_or_default())
                .collect(),
        }
    }

    /// Display form used in difference subjects, e.g. `enroll(Course)`.
    pub fn display_signature(&self) -> String {
        let types: Vec<&str> = self
            .parameters
            .iter()
            .map(|p| p.type_text.as_deref().unwrap_or(p.name.as_str()))
            .collect();
        format!("{}({})", self.name, types.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    #[serde(rename = "kind")]
    pub node_kind: NodeKind,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
    #[serde(default)]
    pub operations: Vec<Operation>,
}

impl Node {
    pub fn new(name: impl Into<String>, node_kind: NodeKind) -> Self {
        Node {
            name: name.into(),
            node_kind,
            attributes: Vec::new(),
            operations: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, attribute: Attribute) -> Self {
        self.attributes.push(attribute);
        self
    }

    pub fn with_operation(mut self, operation: Operation) -> Self {
        self.operations.push(operation);
        self
    }

    pub fn canonical_name(&self) -> String {
        canonical_name_lossy(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelKind {
    Association,
    DirectedAssociation,
    Aggregation,
    Composition,
    Inheritance,
    Realization,
    Dependency,
    #[serde(rename = "er_relationship")]
    ERRelationship,
}

impl RelKind {
    /// Symmetric kinds have no meaningful direction; their endpoints are
    /// ordered by canonical name.
    pub fn is_symmetric(self) -> bool {
        matches!(self, RelKind::Association | RelKind::ERRelationship)
    }

    pub fn is_hierarchy(self) -> bool {
        matches!(self, RelKind::Inheritance | RelKind::Realization)
    }

    /// Kinds grouped together when deciding whether two relationships are the
    /// same relationship written differently.
    pub fn kind_class(self) -> u8 {
        match self {
            RelKind::Association | RelKind::DirectedAssociation => 0,
            RelKind::Aggregation => 1,
            RelKind::Composition => 2,
            RelKind::Inheritance => 3,
            RelKind::Realization => 4,
            RelKind::Dependency => 5,
            RelKind::ERRelationship => 6,
        }
    }

    /// Forward PlantUML arrow for class diagrams.
    pub fn arrow(self) -> &'static str {
        match self {
            RelKind::Association => "--",
            RelKind::DirectedAssociation => "-->",
            RelKind::Aggregation => "o--",
            RelKind::Composition => "*--",
            RelKind::Inheritance => "--|>",
            RelKind::Realization => "..|>",
            RelKind::Dependency => "..>",
            RelKind::ERRelationship => "--",
        }
    }
}

impl fmt::Display for RelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelKind::Association => "association",
            RelKind::DirectedAssociation => "directed association",
            RelKind::Aggregation => "aggregation",
            RelKind::Composition => "composition",
            RelKind::Inheritance => "inheritance",
            RelKind::Realization => "realization",
            RelKind::Dependency => "dependency",
            RelKind::ERRelationship => "relationship",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relationship {
    #[serde(rename = "kind")]
    pub rel_kind: RelKind,
    pub end_a: String,
    pub end_b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity_a: Option<Multiplicity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicity_b: Option<Multiplicity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Relationship {
    pub fn new(rel_kind: RelKind, end_a: impl Into<String>, end_b: impl Into<String>) -> Self {
        Relationship {
            rel_kind,
            end_a: end_a.into(),
            end_b: end_b.into(),
            multiplicity_a: None,
            multiplicity_b: None,
            label: None,
        }
    }

    pub fn with_multiplicities(mut self, a: Option<Multiplicity>, b: Option<Multiplicity>) -> Self {
        self.multiplicity_a = a;
        self.multiplicity_b = b;
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    /// Swaps endpoints of symmetric kinds into canonical-name order.
    pub fn canonicalized(mut self) -> Self {
        if self.rel_kind.is_symmetric()
            && canonical_name_lossy(&self.end_b) < canonical_name_lossy(&self.end_a)
        {
            std::mem::swap(&mut self.end_a, &mut self.end_b);
            std::mem::swap(&mut self.multiplicity_a, &mut self.multiplicity_b);
        }
        self
    }

    /// Path used to refer to this relationship, e.g. `Student--Course`.
    pub fn subject(&self) -> String {
        format!("{}--{}", self.end_a, self.end_b)
    }

    fn sort_key(&self) -> (String, String, RelKind, Option<Multiplicity>, Option<Multiplicity>, Option<String>) {
        (
            canonical_name_lossy(&self.end_a),
            canonical_name_lossy(&self.end_b),
            self.rel_kind,
            self.multiplicity_a,
            self.multiplicity_b,
            self.label.clone(),
        )
    }
}

/// One class diagram or ER diagram.
///
/// Equality ignores `source_name`, which only records provenance.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
pub struct Diagram {
    pub kind: DiagramKind,
    #[serde(default)]
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub relationships: Vec<Relationship>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_name: String,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.nodes == other.nodes
            && self.relationships == other.relationships
    }
}

impl Diagram {
    pub fn new(kind: DiagramKind) -> Self {
        Diagram {
            kind,
            nodes: Vec::new(),
            relationships: Vec::new(),
            source_name: String::new(),
        }
    }

    pub fn with_node(mut self, node: Node) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn with_relationship(mut self, relationship: Relationship) -> Self {
        self.relationships.push(relationship);
        self
    }

    pub fn named(mut self, source_name: impl Into<String>) -> Self {
        self.source_name = source_name.into();
        self
    }

    /// Looks a node up by canonical name.
    pub fn node(&self, name: &str) -> Option<&Node> {
        let key = canonical_name_lossy(name);
        self.nodes.iter().find(|n| n.canonical_name() == key)
    }

    /// Checks every structural invariant of the IR.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = HashSet::new();
        for node in &self.nodes {
            let key = canonical_name(&node.name)?;
            if !names.insert(key) {
                return Err(ModelError::DuplicateNode(node.name.clone()));
            }
            if !self.kind.allows_node(node.node_kind) {
                return Err(ModelError::NodeKindNotAllowed {
                    node: node.name.clone(),
                    node_kind: node.node_kind,
                    diagram_kind: self.kind,
                });
            }
            let mut attrs = HashSet::new();
            for attr in &node.attributes {
                if !attrs.insert(canonical_name(&attr.name)?) {
                    return Err(ModelError::DuplicateAttribute {
                        node: node.name.clone(),
                        attribute: attr.name.clone(),
                    });
                }
            }
            let mut sigs = HashSet::new();
            for op in &node.operations {
                canonical_name(&op.name)?;
                let sig = op.signature();
                if !sigs.insert(sig.clone()) {
                    return Err(ModelError::DuplicateOperation {
                        node: node.name.clone(),
                        signature: sig.to_string(),
                    });
                }
            }
        }
        for rel in &self.relationships {
            for end in [&rel.end_a, &rel.end_b] {
                if !names.contains(&canonical_name_lossy(end)) {
                    return Err(ModelError::UnknownEndpoint(end.clone()));
                }
            }
            if !self.kind.allows_relationship(rel.rel_kind) {
                return Err(ModelError::RelationshipKindNotAllowed {
                    rel_kind: rel.rel_kind,
                    diagram_kind: self.kind,
                });
            }
            let has_mult = rel.multiplicity_a.is_some() || rel.multiplicity_b.is_some();
            if rel.rel_kind.is_hierarchy() && has_mult {
                return Err(ModelError::InvalidMultiplicity(
                    rel.subject(),
                    format!("{} carries no multiplicities", rel.rel_kind),
                ));
            }
            if rel.rel_kind == RelKind::ERRelationship {
                for m in [rel.multiplicity_a, rel.multiplicity_b] {
                    match m {
                        None => {
                            return Err(ModelError::InvalidMultiplicity(
                                rel.subject(),
                                "both ends need a cardinality".into(),
                            ))
                        }
                        Some(m) if crate::plantuml::crows_foot_supported(m).is_none() => {
                            return Err(ModelError::InvalidMultiplicity(
                                rel.subject(),
                                format!("`{m}` has no crow's-foot notation"),
                            ))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }
}

/// Returns the canonical form of `diagram`: nodes, members and relationships
/// sorted, symmetric relationships endpoint-ordered and endpoint names resolved
/// to the declared node names. The result is a fixed point.
pub fn canonicalize(diagram: &Diagram) -> Result<Diagram, ModelError> {
    let mut out = diagram.clone();
    let mut seen = HashSet::new();
    for node in &out.nodes {
        if !seen.insert(canonical_name(&node.name)?) {
            return Err(ModelError::DuplicateNode(node.name.clone()));
        }
    }
    for node in &mut out.nodes {
        if node.node_kind == NodeKind::Entity {
            // Stable: key group first, source order kept among equal names.
            node.attributes
                .sort_by_key(|a| (!a.is_key, canonical_name_lossy(&a.name)));
        } else {
            node.attributes.sort_by_key(Attribute::canonical_name);
        }
        node.operations.sort_by_cached_key(|op| (op.signature(), op.name.clone()));
    }
    out.nodes.sort_by_cached_key(Node::canonical_name);

    let resolve = |name: &str| -> String {
        out.node(name).map(|n| n.name.clone()).unwrap_or_else(|| name.to_string())
    };
    let mut rels: Vec<Relationship> = out
        .relationships
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.end_a = resolve(&r.end_a);
            r.end_b = resolve(&r.end_b);
            r.canonicalized()
        })
        .collect();
    rels.sort_by_cached_key(Relationship::sort_key);
    out.relationships = rels;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_name_examples() {
        assert_eq!(canonical_name("Student").unwrap(), "student");
        assert_eq!(canonical_name("order_line Item").unwrap(), "orderlineitem");
        assert_eq!(canonical_name("  Course ").unwrap(), "course");
        assert_eq!(canonical_name("Order-Line").unwrap(), "orderline");
        assert_eq!(canonical_name("  _- "), Err(ModelError::EmptyName));
    }

    #[test]
    fn multiplicity_forms() {
        let many = canonical_multiplicity("0..*").unwrap();
        assert_eq!(many, Multiplicity { min: 0, max: Upper::Unbounded });
        assert_eq!(many, canonical_multiplicity("*").unwrap());
        assert_eq!(canonical_multiplicity("1").unwrap(), Multiplicity::ONE);
        assert_eq!(canonical_multiplicity("1..1").unwrap(), Multiplicity::ONE);
        assert_eq!(
            canonical_multiplicity("2..5").unwrap(),
            Multiplicity { min: 2, max: Upper::Bounded(5) }
        );
        assert_eq!(
            canonical_multiplicity("3..*").unwrap(),
            Multiplicity { min: 3, max: Upper::Unbounded }
        );
    }

    #[test]
    fn multiplicity_rejects_other_text() {
        for raw in ["1,3", "", "n", "5..2", "*..1", "1..", "..3", "-1", "1...2", "0..**"] {
            assert!(
                matches!(canonical_multiplicity(raw), Err(ModelError::MalformedMultiplicity(_))),
                "{raw:?} should be rejected"
            );
        }
    }

    #[test]
    fn multiplicity_display_round_trips() {
        for raw in ["1", "0..1", "0..*", "1..*", "2..5", "7"] {
            let m = canonical_multiplicity(raw).unwrap();
            assert_eq!(m.to_string(), raw);
        }
        assert_eq!(canonical_multiplicity("*").unwrap().to_string(), "0..*");
    }

    #[test]
    fn canonicalize_sorts_nodes() {
        let d = Diagram::new(DiagramKind::ClassDiagram)
            .with_node(Node::new("B", NodeKind::Class))
            .with_node(Node::new("A", NodeKind::Class));
        let c = canonicalize(&d).unwrap();
        let names: Vec<_> = c.nodes.iter().map(|n| n.name.as_str()).collect();
        assert_eq!(names, ["A", "B"]);
        assert_eq!(canonicalize(&c).unwrap(), c);
    }

    #[test]
    fn canonicalize_detects_collisions() {
        let d = Diagram::new(DiagramKind::ClassDiagram)
            .with_node(Node::new("Order_Line", NodeKind::Class))
            .with_node(Node::new("orderline", NodeKind::Class));
        assert!(matches!(canonicalize(&d), Err(ModelError::DuplicateNode(_))));
    }

    #[test]
    fn symmetric_relationship_order_is_canonical() {
        let forward = Relationship::new(RelKind::Association, "Student", "Course")
            .with_multiplicities(Some(Multiplicity::MANY), Some(Multiplicity::ONE));
        let backward = Relationship::new(RelKind::Association, "Course", "Student")
            .with_multiplicities(Some(Multiplicity::ONE), Some(Multiplicity::MANY));
        assert_eq!(forward.canonicalized(), backward.clone().canonicalized());
        assert_eq!(backward.canonicalized().end_a, "Course");

        let inherit = Relationship::new(RelKind::Inheritance, "Student", "Person");
        assert_eq!(inherit.clone().canonicalized(), inherit);
    }

    #[test]
    fn entity_attributes_keep_key_group_first() {
        let d = Diagram::new(DiagramKind::ERDiagram).with_node(
            Node::new("Order", NodeKind::Entity)
                .with_attribute(Attribute::new("total", Some("float")))
                .with_attribute(Attribute::new("id", Some("int")).key().mandatory())
                .with_attribute(Attribute::new("amount", None)),
        );
        let c = canonicalize(&d).unwrap();
        let names: Vec<_> = c.nodes[0].attributes.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["id", "amount", "total"]);
    }

    #[test]
    fn validate_rejects_dangling_endpoint() {
        let d = Diagram::new(DiagramKind::ClassDiagram)
            .with_node(Node::new("A", NodeKind::Class))
            .with_relationship(Relationship::new(RelKind::Association, "A", "B"));
        assert_eq!(d.validate(), Err(ModelError::UnknownEndpoint("B".into())));
    }

    #[test]
    fn validate_rejects_mixed_node_kinds() {
        let d = Diagram::new(DiagramKind::ERDiagram).with_node(Node::new("A", NodeKind::Class));
        assert!(matches!(d.validate(), Err(ModelError::NodeKindNotAllowed { .. })));
    }

    #[test]
    fn diagram_json_uses_stable_field_names() {
        let d = Diagram::new(DiagramKind::ERDiagram)
            .with_node(Node::new("Customer", NodeKind::Entity))
            .with_node(
                Node::new("Order", NodeKind::Entity)
                    .with_attribute(Attribute::new("id", Some("int")).key().mandatory()),
            )
            .with_relationship(
                Relationship::new(RelKind::ERRelationship, "Customer", "Order")
                    .with_multiplicities(Some(Multiplicity::ONE), Some(Multiplicity::MANY))
                    .with_label("places"),
            );
        let json = serde_json::to_value(&d).unwrap();
        assert_eq!(json["kind"], "er_diagram");
        assert_eq!(json["nodes"][1]["attributes"][0]["is_key"], true);
        assert_eq!(json["relationships"][0]["multiplicity_b"], "0..*");
        let back: Diagram = serde_json::from_value(json).unwrap();
        assert_eq!(back, d);
    }
}
