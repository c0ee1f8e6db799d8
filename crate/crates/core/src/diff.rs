//! Structural difference report between a reference diagram and a student
//! diagram.
//!
//! The report lists facts only: what is missing, extra or modified, with the
//! expected and found values. Judgment and wording live in
//! [`crate::feedback`].
//!
//! Severity table:
//!
//! | difference                                              | severity |
//! |---------------------------------------------------------|----------|
//! | node, attribute, operation or relationship missing/extra | Major    |
//! | node kind changed (e.g. class → interface)               | Major    |
//! | relationship kind changed                                | Major    |
//! | association ↔ directed association                       | Minor    |
//! | inheritance / realization kind or direction changed      | Major    |
//! | other relationship direction reversed                    | Minor    |
//! | multiplicity changed                                     | Major    |
//! | attribute key membership changed                         | Major    |
//! | name spelling differs                                    | Minor    |
//! | visibility changed                                       | Minor    |
//! | attribute type, mandatory flag, parameter or return type | Minor    |

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{assign, Matching, DEFAULT_THRESHOLD};
use crate::model::{
    canonical_name_lossy, Attribute, Diagram, DiagramKind, Multiplicity, Node, Operation, RelKind,
    Relationship,
};
use crate::plantuml::crows_foot_supported;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("cannot compare a {reference} against a {student}")]
    KindMismatch { reference: DiagramKind, student: DiagramKind },
    #[error("matching is inconsistent with the diagrams: {0}")]
    InconsistentMatching(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Classes,
    Entities,
    Attributes,
    Operations,
    Relationships,
    Multiplicities,
    Visibility,
    Inheritance,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Classes,
        Category::Entities,
        Category::Attributes,
        Category::Operations,
        Category::Relationships,
        Category::Multiplicities,
        Category::Visibility,
        Category::Inheritance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Classes => "classes",
            Category::Entities => "entities",
            Category::Attributes => "attributes",
            Category::Operations => "operations",
            Category::Relationships => "relationships",
            Category::Multiplicities => "multiplicities",
            Category::Visibility => "visibility",
            Category::Inheritance => "inheritance",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Category::Classes => "Classes",
            Category::Entities => "Entities",
            Category::Attributes => "Attributes",
            Category::Operations => "Operations",
            Category::Relationships => "Relationships",
            Category::Multiplicities => "Multiplicities",
            Category::Visibility => "Visibility",
            Category::Inheritance => "Inheritance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Category::ALL.into_iter().find(|c| c.as_str() == s)
    }

    fn for_nodes(kind: DiagramKind) -> Self {
        match kind {
            DiagramKind::ClassDiagram => Category::Classes,
            DiagramKind::ERDiagram => Category::Entities,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Change {
    Missing,
    Extra,
    Modified,
}

impl Change {
    pub const ALL: [Change; 3] = [Change::Missing, Change::Extra, Change::Modified];

    pub fn as_str(self) -> &'static str {
        match self {
            Change::Missing => "missing",
            Change::Extra => "extra",
            Change::Modified => "modified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Change::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which property of the element differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Presence,
    Name,
    Kind,
    Type,
    Key,
    Mandatory,
    Visibility,
    Parameters,
    ReturnType,
    Direction,
    Multiplicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Major,
    Minor,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Detail {
    pub expected: Option<String>,
    pub found: Option<String>,
}

/// Structured position of a difference. Names come from the reference
/// diagram except for `Extra` differences, which use the student's names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Location {
    Node { node: String },
    Member { node: String, member: String },
    Relationship {
        end_a: String,
        end_b: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Difference {
    pub category: Category,
    pub change: Change,
    pub aspect: Aspect,
    pub subject: String,
    pub detail: Detail,
    pub severity: Severity,
    pub location: Location,
    /// The subject in the student's own names. For Missing items this is
    /// the closest enclosing element the student did model, if any.
    pub student_context: Option<String>,
}

impl Difference {
    fn sort_key(&self) -> (Category, Change, &str, Aspect, &Detail, &Location) {
        (self.category, self.change, &self.subject, self.aspect, &self.detail, &self.location)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub reference_name: String,
    pub student_name: String,
    pub differences: Vec<Difference>,
    pub matching: Matching,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.differences.is_empty()
    }

    /// Number of differences per category, every category present.
    pub fn category_counts(&self) -> BTreeMap<Category, u64> {
        let mut counts: BTreeMap<Category, u64> = Category::ALL.iter().map(|c| (*c, 0)).collect();
        for d in &self.differences {
            *counts.entry(d.category).or_default() += 1;
        }
        counts
    }
}

/// Compares `student` against `reference` using the default threshold for
/// member matching.
pub fn diff(reference: &Diagram, student: &Diagram, matching: &Matching) -> Result<DiffReport, DiffError> {
    diff_with_threshold(reference, student, matching, DEFAULT_THRESHOLD)
}

pub fn diff_with_threshold(
    reference: &Diagram,
    student: &Diagram,
    matching: &Matching,
    threshold: f64,
) -> Result<DiffReport, DiffError> {
    if reference.kind != student.kind {
        return Err(DiffError::KindMismatch { reference: reference.kind, student: student.kind });
    }
    check_matching(reference, student, matching)?;
    let node_category = Category::for_nodes(reference.kind);
    let mut out = Vec::new();

    for name in &matching.unmatched_reference {
        out.push(Difference {
            category: node_category,
            change: Change::Missing,
            aspect: Aspect::Presence,
            subject: name.clone(),
            detail: Detail { expected: Some(name.clone()), found: None },
            severity: Severity::Major,
            location: Location::Node { node: name.clone() },
            student_context: None,
        });
    }
    for name in &matching.unmatched_student {
        out.push(Difference {
            category: node_category,
            change: Change::Extra,
            aspect: Aspect::Presence,
            subject: name.clone(),
            detail: Detail { expected: None, found: Some(name.clone()) },
            severity: Severity::Major,
            location: Location::Node { node: name.clone() },
            student_context: Some(name.clone()),
        });
    }

    for pair in &matching.pairs {
        let r = reference.node(&pair.reference).expect("checked");
        let s = student.node(&pair.student).expect("checked");
        let location = Location::Node { node: r.name.clone() };
        if canonical_name_lossy(&r.name) != canonical_name_lossy(&s.name) {
            out.push(Difference {
                category: node_category,
                change: Change::Modified,
                aspect: Aspect::Name,
                subject: r.name.clone(),
                detail: Detail { expected: Some(r.name.clone()), found: Some(s.name.clone()) },
                severity: Severity::Minor,
                location: location.clone(),
                student_context: Some(s.name.clone()),
            });
        }
        if r.node_kind != s.node_kind {
            out.push(Difference {
                category: node_category,
                change: Change::Modified,
                aspect: Aspect::Kind,
                subject: r.name.clone(),
                detail: Detail {
                    expected: Some(r.node_kind.to_string()),
                    found: Some(s.node_kind.to_string()),
                },
                severity: Severity::Major,
                location,
                student_context: Some(s.name.clone()),
            });
        }
        diff_attributes(r, s, threshold, &mut out);
        diff_operations(r, s, threshold, &mut out);
    }

    diff_relationships(reference, student, matching, &mut out);

    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out.dedup();
    Ok(DiffReport {
        reference_name: reference.source_name.clone(),
        student_name: student.source_name.clone(),
        differences: out,
        matching: matching.clone(),
    })
}

fn check_matching(reference: &Diagram, student: &Diagram, matching: &Matching) -> Result<(), DiffError> {
    let covers = |diagram: &Diagram, names: Vec<&str>, side: &str| -> Result<(), DiffError> {
        let mut seen = HashSet::new();
        for name in &names {
            if diagram.node(name).is_none() {
                return Err(DiffError::InconsistentMatching(format!("unknown {side} node `{name}`")));
            }
            if !seen.insert(canonical_name_lossy(name)) {
                return Err(DiffError::InconsistentMatching(format!("{side} node `{name}` appears twice")));
            }
        }
        if seen.len() != diagram.nodes.len() {
            return Err(DiffError::InconsistentMatching(format!("some {side} nodes are not covered")));
        }
        Ok(())
    };
    covers(
        reference,
        matching
            .pairs
            .iter()
            .map(|p| p.reference.as_str())
            .chain(matching.unmatched_reference.iter().map(String::as_str))
            .collect(),
        "reference",
    )?;
    covers(
        student,
        matching
            .pairs
            .iter()
            .map(|p| p.student.as_str())
            .chain(matching.unmatched_student.iter().map(String::as_str))
            .collect(),
        "student",
    )
}

/// Member assignment that does not depend on which side is the reference, so
/// that swapping the diagrams swaps Missing and Extra exactly.
fn pair_members(
    left: &[&str],
    right: &[&str],
    threshold: f64,
    compatible: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize, f64)> {
    let sorted = |names: &[&str]| {
        let mut v: Vec<String> = names.iter().map(|n| canonical_name_lossy(n)).collect();
        v.sort();
        v
    };
    if sorted(left) <= sorted(right) {
        assign(left, right, threshold, compatible)
    } else {
        assign(right, left, threshold, |j, i| compatible(i, j))
            .into_iter()
            .map(|(j, i, score)| (i, j, score))
            .collect()
    }
}

fn unused<'a, T>(items: &'a [T], used: &'a [bool]) -> impl Iterator<Item = &'a T> {
    items.iter().zip(used).filter(|(_, u)| !**u).map(|(t, _)| t)
}

fn same_text(a: &Option<String>, b: &Option<String>) -> bool {
    a.as_deref().map(canonical_name_lossy) == b.as_deref().map(canonical_name_lossy)
}

fn or_unspecified(text: &Option<String>) -> String {
    text.clone().unwrap_or_else(|| "unspecified".to_string())
}

fn describe_attribute(a: &Attribute) -> String {
    match &a.type_text {
        Some(ty) => format!("{} : {ty}", a.name),
        None => a.name.clone(),
    }
}

fn describe_operation(op: &Operation) -> String {
    let params: Vec<String> = op
        .parameters
        .iter()
        .map(|p| match &p.type_text {
            Some(ty) => format!("{} : {ty}", p.name),
            None => p.name.clone(),
        })
        .collect();
    match &op.return_type {
        Some(ret) => format!("{}({}) : {ret}", op.name, params.join(", ")),
        None => format!("{}({})", op.name, params.join(", ")),
    }
}

fn diff_attributes(r: &Node, s: &Node, threshold: f64, out: &mut Vec<Difference>) {
    let rn: Vec<&str> = r.attributes.iter().map(|a| a.name.as_str()).collect();
    let sn: Vec<&str> = s.attributes.iter().map(|a| a.name.as_str()).collect();
    let pairs = pair_members(&rn, &sn, threshold, |_, _| true);
    let mut r_used = vec![false; rn.len()];
    let mut s_used = vec![false; sn.len()];
    for &(i, j, _) in &pairs {
        r_used[i] = true;
        s_used[j] = true;
        let (ra, sa) = (&r.attributes[i], &s.attributes[j]);
        let subject = format!("{}.{}", r.name, ra.name);
        let location = Location::Member { node: r.name.clone(), member: ra.name.clone() };
        let context = format!("{}.{}", s.name, sa.name);
        let mut push = |category, aspect, expected: String, found: String, severity| {
            out.push(Difference {
                category,
                change: Change::Modified,
                aspect,
                subject: subject.clone(),
                detail: Detail { expected: Some(expected), found: Some(found) },
                severity,
                location: location.clone(),
                student_context: Some(context.clone()),
            })
        };
        if canonical_name_lossy(&ra.name) != canonical_name_lossy(&sa.name) {
            push(Category::Attributes, Aspect::Name, ra.name.clone(), sa.name.clone(), Severity::Minor);
        }
        if !same_text(&ra.type_text, &sa.type_text) {
            push(
                Category::Attributes,
                Aspect::Type,
                or_unspecified(&ra.type_text),
                or_unspecified(&sa.type_text),
                Severity::Minor,
            );
        }
        if ra.visibility != sa.visibility {
            push(
                Category::Visibility,
                Aspect::Visibility,
                ra.visibility.to_string(),
                sa.visibility.to_string(),
                Severity::Minor,
            );
        }
        if ra.is_key != sa.is_key {
            let key = |k: bool| if k { "key" } else { "not key" }.to_string();
            push(Category::Attributes, Aspect::Key, key(ra.is_key), key(sa.is_key), Severity::Major);
        }
        if ra.is_mandatory != sa.is_mandatory {
            let m = |k: bool| if k { "mandatory" } else { "optional" }.to_string();
            push(
                Category::Attributes,
                Aspect::Mandatory,
                m(ra.is_mandatory),
                m(sa.is_mandatory),
                Severity::Minor,
            );
        }
    }
    for a in unused(&r.attributes, &r_used) {
        out.push(Difference {
            category: Category::Attributes,
            change: Change::Missing,
            aspect: Aspect::Presence,
            subject: format!("{}.{}", r.name, a.name),
            detail: Detail { expected: Some(describe_attribute(a)), found: None },
            severity: Severity::Major,
            location: Location::Member { node: r.name.clone(), member: a.name.clone() },
            student_context: Some(s.name.clone()),
        });
    }
    for a in unused(&s.attributes, &s_used) {
        out.push(Difference {
            category: Category::Attributes,
            change: Change::Extra,
            aspect: Aspect::Presence,
            subject: format!("{}.{}", s.name, a.name),
            student_context: Some(format!("{}.{}", s.name, a.name)),
            detail: Detail { expected: None, found: Some(describe_attribute(a)) },
            severity: Severity::Major,
            location: Location::Member { node: s.name.clone(), member: a.name.clone() },
        });
    }
}

fn diff_operations(r: &Node, s: &Node, threshold: f64, out: &mut Vec<Difference>) {
    let rn: Vec<&str> = r.operations.iter().map(|o| o.name.as_str()).collect();
    let sn: Vec<&str> = s.operations.iter().map(|o| o.name.as_str()).collect();
    let pairs = pair_members(&rn, &sn, threshold, |i, j| {
        r.operations[i].parameters.len() == s.operations[j].parameters.len()
    });
    let mut r_used = vec![false; rn.len()];
    let mut s_used = vec![false; sn.len()];
    for &(i, j, _) in &pairs {
        r_used[i] = true;
        s_used[j] = true;
        let (ro, so) = (&r.operations[i], &s.operations[j]);
        let subject = format!("{}.{}", r.name, ro.display_signature());
        let location = Location::Member { node: r.name.clone(), member: ro.display_signature() };
        let context = format!("{}.{}", s.name, so.display_signature());
        let mut push = |category, aspect, expected: String, found: String| {
            out.push(Difference {
                category,
                change: Change::Modified,
                aspect,
                subject: subject.clone(),
                detail: Detail { expected: Some(expected), found: Some(found) },
                severity: Severity::Minor,
                location: location.clone(),
                student_context: Some(context.clone()),
            })
        };
        if canonical_name_lossy(&ro.name) != canonical_name_lossy(&so.name) {
            push(Category::Operations, Aspect::Name, ro.name.clone(), so.name.clone());
        }
        let r_types: Vec<Option<String>> = ro.parameters.iter().map(|p| p.type_text.clone()).collect();
        let s_types: Vec<Option<String>> = so.parameters.iter().map(|p| p.type_text.clone()).collect();
        if r_types.iter().zip(&s_types).any(|(a, b)| !same_text(a, b)) {
            push(Category::Operations, Aspect::Parameters, describe_operation(ro), describe_operation(so));
        }
        if !same_text(&ro.return_type, &so.return_type) {
            push(
                Category::Operations,
                Aspect::ReturnType,
                or_unspecified(&ro.return_type),
                or_unspecified(&so.return_type),
            );
        }
        if ro.visibility != so.visibility {
            push(
                Category::Visibility,
                Aspect::Visibility,
                ro.visibility.to_string(),
                so.visibility.to_string(),
            );
        }
    }
    for o in unused(&r.operations, &r_used) {
        out.push(Difference {
            category: Category::Operations,
            change: Change::Missing,
            aspect: Aspect::Presence,
            subject: format!("{}.{}", r.name, o.display_signature()),
            detail: Detail { expected: Some(describe_operation(o)), found: None },
            severity: Severity::Major,
            location: Location::Member { node: r.name.clone(), member: o.display_signature() },
            student_context: Some(s.name.clone()),
        });
    }
    for o in unused(&s.operations, &s_used) {
        out.push(Difference {
            category: Category::Operations,
            change: Change::Extra,
            aspect: Aspect::Presence,
            subject: format!("{}.{}", s.name, o.display_signature()),
            student_context: Some(format!("{}.{}", s.name, o.display_signature())),
            detail: Detail { expected: None, found: Some(describe_operation(o)) },
            severity: Severity::Major,
            location: Location::Member { node: s.name.clone(), member: o.display_signature() },
        });
    }
}

/// One-line rendering of a relationship, e.g. `Library *-- Book` or
/// `Student "1" -- "0..*" Course`.
pub fn describe_relationship(rel: &Relationship) -> String {
    if rel.rel_kind == RelKind::ERRelationship {
        let left = rel.multiplicity_a.and_then(crows_foot_supported).map(|s| s.0).unwrap_or("--");
        let right = rel.multiplicity_b.and_then(crows_foot_supported).map(|s| s.1).unwrap_or("--");
        return format!("{} {left}--{right} {}", rel.end_a, rel.end_b);
    }
    let mut s = rel.end_a.clone();
    if let Some(m) = rel.multiplicity_a {
        s.push_str(&format!(" \"{m}\""));
    }
    s.push(' ');
    s.push_str(rel.rel_kind.arrow());
    if let Some(m) = rel.multiplicity_b {
        s.push_str(&format!(" \"{m}\""));
    }
    s.push(' ');
    s.push_str(&rel.end_b);
    s
}

/// A relationship with endpoints expressed as canonical reference names.
struct Projected<'a> {
    rel: &'a Relationship,
    a: String,
    b: String,
    /// Endpoint identities built from both diagrams' names.
    id_a: (String, String),
    id_b: (String, String),
}

impl Projected<'_> {
    fn unordered(&self) -> (String, String) {
        if self.a <= self.b {
            (self.a.clone(), self.b.clone())
        } else {
            (self.b.clone(), self.a.clone())
        }
    }

    fn exact_key(&self) -> (u8, String, String) {
        let class = self.rel.rel_kind.kind_class();
        if class == RelKind::Association.kind_class() || self.rel.rel_kind.is_symmetric() {
            let (a, b) = self.unordered();
            (class, a, b)
        } else {
            (class, self.a.clone(), self.b.clone())
        }
    }

    /// Name-independent order used to pair relationships within a group.
    fn tiebreak(&self) -> (RelKind, bool, Option<Multiplicity>, Option<Multiplicity>, Option<String>) {
        let forward = self.id_a <= self.id_b;
        let (ma, mb) = if forward {
            (self.rel.multiplicity_a, self.rel.multiplicity_b)
        } else {
            (self.rel.multiplicity_b, self.rel.multiplicity_a)
        };
        (self.rel.rel_kind, forward, ma, mb, self.rel.label.clone())
    }
}

fn diff_relationships(
    reference: &Diagram,
    student: &Diagram,
    matching: &Matching,
    out: &mut Vec<Difference>,
) {
    let canon = |n: &str| canonical_name_lossy(n);
    let identity = |reference_name: &str| {
        let r = canon(reference_name);
        let s = matching.student_for(reference_name).map(canon).unwrap_or_else(|| r.clone());
        if r <= s {
            (r, s)
        } else {
            (s, r)
        }
    };
    let project = |rel, a: String, b: String| Projected { rel, id_a: identity(&a), id_b: identity(&b), a, b };
    let reference_rels: Vec<Projected> = reference
        .relationships
        .iter()
        .map(|rel| project(rel, canon(&rel.end_a), canon(&rel.end_b)))
        .collect();
    // Student endpoints without a counterpart can never pair up.
    let student_rels: Vec<Option<Projected>> = student
        .relationships
        .iter()
        .map(|rel| {
            let a = matching.reference_for(&rel.end_a)?;
            let b = matching.reference_for(&rel.end_b)?;
            Some(project(rel, canon(a), canon(b)))
        })
        .collect();

    let mut r_used = vec![false; reference_rels.len()];
    let mut s_used = vec![false; student_rels.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    for exact in [true, false] {
        let mut groups: BTreeMap<(u8, String, String), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        let key = |p: &Projected| {
            if exact {
                p.exact_key()
            } else {
                let (a, b) = p.unordered();
                (0, a, b)
            }
        };
        for (i, p) in reference_rels.iter().enumerate().filter(|(i, _)| !r_used[*i]) {
            groups.entry(key(p)).or_default().0.push(i);
        }
        for (j, p) in student_rels.iter().enumerate().filter(|(j, _)| !s_used[*j]) {
            if let Some(p) = p {
                groups.entry(key(p)).or_default().1.push(j);
            }
        }
        for (_, (mut rs, mut ss)) in groups {
            rs.sort_by_key(|&i| reference_rels[i].tiebreak());
            ss.sort_by_key(|&j| student_rels[j].as_ref().expect("grouped").tiebreak());
            for (&i, &j) in rs.iter().zip(&ss) {
                r_used[i] = true;
                s_used[j] = true;
                pairs.push((i, j));
            }
        }
    }

    for (i, j) in pairs {
        compare_relationships(&reference_rels[i], student_rels[j].as_ref().expect("paired"), out);
    }
    for p in unused(&reference_rels, &r_used) {
        let rel = p.rel;
        out.push(Difference {
            category: Category::Relationships,
            change: Change::Missing,
            aspect: Aspect::Presence,
            subject: rel.subject(),
            detail: Detail { expected: Some(describe_relationship(rel)), found: None },
            severity: Severity::Major,
            location: Location::Relationship { end_a: rel.end_a.clone(), end_b: rel.end_b.clone(), end: None },
            student_context: match (matching.student_for(&rel.end_a), matching.student_for(&rel.end_b)) {
                (Some(a), Some(b)) => Some(format!("{a}--{b}")),
                (Some(a), None) | (None, Some(a)) => Some(a.to_string()),
                (None, None) => None,
            },
        });
    }
    for rel in unused(&student.relationships, &s_used) {
        out.push(Difference {
            category: Category::Relationships,
            change: Change::Extra,
            aspect: Aspect::Presence,
            subject: rel.subject(),
            student_context: Some(rel.subject()),
            detail: Detail { expected: None, found: Some(describe_relationship(rel)) },
            severity: Severity::Major,
            location: Location::Relationship { end_a: rel.end_a.clone(), end_b: rel.end_b.clone(), end: None },
        });
    }
}

fn compare_relationships(r: &Projected, s: &Projected, out: &mut Vec<Difference>) {
    let rel = r.rel;
    let reversed = r.a != r.b && s.a == r.b && s.b == r.a;
    let (s_mult_a, s_mult_b) = if reversed {
        (s.rel.multiplicity_b, s.rel.multiplicity_a)
    } else {
        (s.rel.multiplicity_a, s.rel.multiplicity_b)
    };
    let hierarchy = rel.rel_kind.is_hierarchy() || s.rel.rel_kind.is_hierarchy();
    let category = if hierarchy { Category::Inheritance } else { Category::Relationships };
    let location = Location::Relationship { end_a: rel.end_a.clone(), end_b: rel.end_b.clone(), end: None };
    let subject = rel.subject();

    if rel.rel_kind != s.rel.rel_kind {
        let minor = rel.rel_kind.kind_class() == s.rel.rel_kind.kind_class();
        out.push(Difference {
            category,
            change: Change::Modified,
            aspect: Aspect::Kind,
            subject: subject.clone(),
            detail: Detail {
                expected: Some(rel.rel_kind.to_string()),
                found: Some(s.rel.rel_kind.to_string()),
            },
            severity: if minor && !hierarchy { Severity::Minor } else { Severity::Major },
            location: location.clone(),
            student_context: Some(s.rel.subject()),
        });
    } else if reversed && !rel.rel_kind.is_symmetric() {
        out.push(Difference {
            category,
            change: Change::Modified,
            aspect: Aspect::Direction,
            subject: subject.clone(),
            detail: Detail {
                expected: Some(describe_relationship(rel)),
                found: Some(describe_relationship(s.rel)),
            },
            severity: if hierarchy { Severity::Major } else { Severity::Minor },
            location: location.clone(),
            student_context: Some(s.rel.subject()),
        });
    }

    if hierarchy {
        return;
    }
    let (s_end_a, s_end_b) = if reversed {
        (&s.rel.end_b, &s.rel.end_a)
    } else {
        (&s.rel.end_a, &s.rel.end_b)
    };
    let ends = [
        (&rel.end_a, s_end_a, rel.multiplicity_a, s_mult_a),
        (&rel.end_b, s_end_b, rel.multiplicity_b, s_mult_b),
    ];
    for (end, student_end, expected, found) in ends {
        if expected != found {
            let text = |m: Option<Multiplicity>| m.map(|m| m.to_string()).unwrap_or_else(|| "unspecified".into());
            out.push(Difference {
                category: Category::Multiplicities,
                change: Change::Modified,
                aspect: Aspect::Multiplicity,
                subject: subject.clone(),
                detail: Detail { expected: Some(text(expected)), found: Some(text(found)) },
                severity: Severity::Major,
                location: Location::Relationship {
                    end_a: rel.end_a.clone(),
                    end_b: rel.end_b.clone(),
                    end: Some(end.clone()),
                },
                student_context: Some(format!("{} ({student_end} end)", s.rel.subject())),
            });
        }
    }
}
