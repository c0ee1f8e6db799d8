//! End-to-end comparison of a student diagram against a reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{diff_with_threshold, DiffError, DiffReport};
use crate::feedback::{render_feedback, FeedbackBundle, TemplateError, TemplateSet};
use crate::matching::{match_nodes, MatchError, DEFAULT_THRESHOLD};
use crate::misconception::{classify, MisconceptionTag};
use crate::model::{Diagram, DiagramKind};
use crate::plantuml::{parse_plantuml, ParseDiagnostic, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reference,
    Student,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{role:?} diagram: {error}")]
    Parse { role: Role, error: ParseError },
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Parse { error, .. } => error.code(),
            PipelineError::Match(_) | PipelineError::Diff(_) => "kind_mismatch",
            PipelineError::Template(_) => "template_error",
        }
    }

    pub fn diagnostics(&self) -> &[ParseDiagnostic] {
        match self {
            PipelineError::Parse { error, .. } => &error.diagnostics,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions<'a> {
    pub threshold: f64,
    pub templates: &'a TemplateSet,
}

impl<'a> CompareOptions<'a> {
    pub fn new(templates: &'a TemplateSet) -> Self {
        CompareOptions { threshold: DEFAULT_THRESHOLD, templates }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub diff_report: DiffReport,
    pub tags: Vec<MisconceptionTag>,
    pub feedback: FeedbackBundle,
}

pub fn compare(reference: &Diagram, student: &Diagram, options: &CompareOptions) -> Result<Comparison, PipelineError> {
    let matching = match_nodes(reference, student, options.threshold)?;
    let diff_report = diff_with_threshold(reference, student, &matching, options.threshold)?;
    let tags = classify(&diff_report);
    let feedback = render_feedback(&diff_report, &tags, options.templates)?;
    Ok(Comparison { diff_report, tags, feedback })
}

/// Parses `source` for the given role. Errors carry every diagnostic.
pub fn parse_role(source: &str, kind: Option<DiagramKind>, role: Role) -> Result<Diagram, PipelineError> {
    parse_plantuml(source, kind)
        .map(|p| p.diagram)
        .map_err(|error| PipelineError::Parse { role, error })
}

/// Parses both sources (the student one must have the reference's kind) and
/// compares them.
pub fn compare_sources(
    reference: &str,
    student: &str,
    options: &CompareOptions,
) -> Result<Comparison, PipelineError> {
    let reference = parse_role(reference, None, Role::Reference)?;
    let student = parse_role(student, Some(reference.kind), Role::Student)?;
    compare(&reference, &student, options)
}
