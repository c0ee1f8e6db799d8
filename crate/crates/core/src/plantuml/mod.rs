//! PlantUML subset reader and canonical printer.
//!
//! Supported input:
//!
//! * declarations: `class`, `abstract class`, `interface`, `enum`, `entity`,
//!   with an optional `{ ... }` member block;
//! * class members with visibility prefixes `+ - # ~`, attributes written
//!   `name : Type` and operations written `name(p : T, ...) : R`;
//! * entity members where a leading `*` marks a mandatory attribute and the
//!   attributes above the first `--` separator form the primary key;
//! * class arrows `--`, `-->`, `o--`, `*--`, `--|>`, `..|>`, `..>` (and their
//!   mirrored forms) with optional quoted multiplicities and `: label`;
//! * crow's-foot ER links such as `||--o{`.
//!
//! Layout and styling directives (`skinparam`, notes, colors, direction
//! hints, ...) are skipped with a warning.

mod lexer;
mod printer;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{
    canonical_name_lossy, canonicalize, Diagram, DiagramKind, Multiplicity, Node, NodeKind,
    Relationship, Upper,
};

pub use printer::print_plantuml;

use lexer::{Arrow, Lexed, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    pub fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic { line, column, message: message.into(), severity: Severity::Error }
    }

    pub fn warning(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseDiagnostic { line, column, message: message.into(), severity: Severity::Warning }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {level}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    KindMismatch { expected: DiagramKind, found: DiagramKind },
    MissingEnclosure,
    MixedKinds,
}

/// Parse failure. `diagnostics` holds every error found plus the warnings
/// collected before giving up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseError {
    fn new(kind: ParseErrorKind, diagnostics: Vec<ParseDiagnostic>) -> Self {
        ParseError { kind, diagnostics }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self.kind {
            ParseErrorKind::Syntax => "syntax_error",
            ParseErrorKind::KindMismatch { .. } => "kind_mismatch",
            ParseErrorKind::MissingEnclosure => "missing_enclosure",
            ParseErrorKind::MixedKinds => "mixed_kinds",
        }
    }

    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax => f.write_str("syntax error")?,
            ParseErrorKind::KindMismatch { expected, found } => {
                write!(f, "expected a {expected}, found a {found}")?
            }
            ParseErrorKind::MissingEnclosure => f.write_str("missing @startuml/@enduml")?,
            ParseErrorKind::MixedKinds => {
                f.write_str("entity declarations mixed with class declarations")?
            }
        }
        if let Some(first) = self.errors().next() {
            write!(f, " at {first}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Successful parse: a canonical diagram plus any warnings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub diagram: Diagram,
    pub diagnostics: Vec<ParseDiagnostic>,
}

/// Cardinality to crow's-foot symbols, as (left end, right end).
pub fn crows_foot_supported(m: Multiplicity) -> Option<(&'static str, &'static str)> {
    match (m.min, m.max) {
        (1, Upper::Bounded(1)) => Some(("||", "||")),
        (0, Upper::Bounded(1)) => Some(("|o", "o|")),
        (1, Upper::Unbounded) => Some(("}|", "|{")),
        (0, Upper::Unbounded) => Some(("}o", "o{")),
        _ => None,
    }
}

/// Classifies `source` as a class diagram or an ER diagram.
pub fn detect_kind(source: &str) -> Result<DiagramKind, ParseError> {
    let lexed = lexer::lex(source)?;
    if lexed.has_errors() {
        return Err(ParseError::new(ParseErrorKind::Syntax, lexed.diagnostics));
    }
    Ok(kind_of(&lexed)?.unwrap_or(DiagramKind::ClassDiagram))
}

/// Returns `None` when the source carries no kind evidence at all.
fn kind_of(lexed: &Lexed) -> Result<Option<DiagramKind>, ParseError> {
    let mut first_entity = None;
    let mut first_class = None;
    let mut crows_foot = false;
    for stmt in &lexed.statements {
        match stmt {
            Stmt::Decl(d) if d.kind == NodeKind::Entity => {
                first_entity.get_or_insert((d.line, d.column));
            }
            Stmt::Decl(d) => {
                first_class.get_or_insert((d.line, d.column));
            }
            Stmt::Rel(r) => {
                crows_foot |= matches!(r.arrow, Arrow::CrowsFoot { .. });
            }
        }
    }
    match (first_entity, first_class) {
        (Some(e), Some(c)) => {
            let (line, column) = e.max(c);
            Err(ParseError::new(
                ParseErrorKind::MixedKinds,
                vec![ParseDiagnostic::error(
                    line,
                    column,
                    "entity and class declarations cannot share one diagram",
                )],
            ))
        }
        (None, Some(_)) => Ok(Some(DiagramKind::ClassDiagram)),
        (Some(_), None) => Ok(Some(DiagramKind::ERDiagram)),
        (None, None) if crows_foot => Ok(Some(DiagramKind::ERDiagram)),
        (None, None) if lexed.statements.is_empty() => Ok(None),
        (None, None) => Ok(Some(DiagramKind::ClassDiagram)),
    }
}

/// Parses `source` into a canonical [`Diagram`].
///
/// Undeclared relationship endpoints become empty nodes of the diagram's
/// default kind, each reported as a warning.
pub fn parse_plantuml(
    source: &str,
    expected_kind: Option<DiagramKind>,
) -> Result<Parsed, ParseError> {
    let lexed = lexer::lex(source)?;
    let detected = match kind_of(&lexed) {
        Ok(kind) => kind,
        Err(mut err) => {
            err.diagnostics.extend(lexed.diagnostics);
            return Err(err);
        }
    };
    let kind = match (detected, expected_kind) {
        (Some(found), Some(expected)) if found != expected => {
            let mut diagnostics = lexed.diagnostics;
            diagnostics.push(ParseDiagnostic::error(
                1,
                1,
                format!("expected a {expected}, found a {found}"),
            ));
            return Err(ParseError::new(
                ParseErrorKind::KindMismatch { expected, found },
                diagnostics,
            ));
        }
        (Some(found), _) => found,
        (None, expected) => expected.unwrap_or(DiagramKind::ClassDiagram),
    };

    let mut diagnostics = lexed.diagnostics;
    let mut diagram = Diagram::new(kind);
    let mut index: HashMap<String, usize> = HashMap::new();

    for stmt in &lexed.statements {
        let Stmt::Decl(decl) = stmt else { continue };
        let key = canonical_name_lossy(&decl.name);
        if index.contains_key(&key) {
            diagnostics.push(ParseDiagnostic::error(
                decl.line,
                decl.column,
                format!("`{}` is declared more than once", decl.name),
            ));
            continue;
        }
        let mut node = Node::new(decl.name.clone(), decl.kind);
        node.attributes = decl.attributes.iter().map(|m| m.value.clone()).collect();
        node.operations = decl.operations.iter().map(|m| m.value.clone()).collect();
        index.insert(key, diagram.nodes.len());
        diagram.nodes.push(node);
    }

    for stmt in &lexed.statements {
        let Stmt::Rel(rel) = stmt else { continue };
        let (rel_kind, mut end_a, mut end_b, mut mult_a, mut mult_b) = match rel.arrow {
            Arrow::Class { kind: rel_kind, swapped } => {
                if kind == DiagramKind::ERDiagram {
                    diagnostics.push(ParseDiagnostic::error(
                        rel.line,
                        rel.column,
                        "ER diagrams use crow's-foot relationships such as `||--o{`",
                    ));
                    continue;
                }
                let (a, b, ma, mb) = if swapped {
                    (&rel.right, &rel.left, rel.right_mult, rel.left_mult)
                } else {
                    (&rel.left, &rel.right, rel.left_mult, rel.right_mult)
                };
                (rel_kind, a.clone(), b.clone(), ma, mb)
            }
            Arrow::CrowsFoot { left, right } => {
                if kind == DiagramKind::ClassDiagram {
                    diagnostics.push(ParseDiagnostic::error(
                        rel.line,
                        rel.column,
                        "crow's-foot relationships require an ER diagram",
                    ));
                    continue;
                }
                (
                    crate::model::RelKind::ERRelationship,
                    rel.left.clone(),
                    rel.right.clone(),
                    Some(left),
                    Some(right),
                )
            }
        };
        if rel_kind.is_hierarchy() && (mult_a.is_some() || mult_b.is_some()) {
            diagnostics.push(ParseDiagnostic::warning(
                rel.line,
                rel.column,
                format!("multiplicities on {rel_kind} are ignored"),
            ));
            mult_a = None;
            mult_b = None;
        }
        for end in [&mut end_a, &mut end_b] {
            let key = canonical_name_lossy(end);
            match index.get(&key) {
                Some(&i) => *end = diagram.nodes[i].name.clone(),
                None => {
                    diagnostics.push(ParseDiagnostic::warning(
                        rel.line,
                        rel.column,
                        format!("`{end}` is not declared; treating it as an empty {}", kind.default_node_kind()),
                    ));
                    index.insert(key, diagram.nodes.len());
                    diagram.nodes.push(Node::new(end.clone(), kind.default_node_kind()));
                }
            }
        }
        let mut relationship =
            Relationship::new(rel_kind, end_a, end_b).with_multiplicities(mult_a, mult_b);
        relationship.label = rel.label.clone();
        diagram.relationships.push(relationship);
    }

    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        return Err(ParseError::new(ParseErrorKind::Syntax, diagnostics));
    }
    let canonical = canonicalize(&diagram)
        .and_then(|d| d.validate().map(|_| d))
        .map_err(|e| {
            let mut diagnostics = diagnostics.clone();
            diagnostics.push(ParseDiagnostic::error(1, 1, e.to_string()));
            ParseError::new(ParseErrorKind::Syntax, diagnostics)
        })?;
    Ok(Parsed { diagram: canonical, diagnostics })
}

#[cfg(test)]
mod tests;
