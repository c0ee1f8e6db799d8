//! Student and educator Markdown feedback rendered from a [`DiffReport`].
//!
//! Student hints prompt a revisit without revealing reference values: they
//! use the student's own names, and Missing hints never name the absent
//! element. Educator output is complete.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{Aspect, Category, Change, DiffReport, Difference, Location};
use crate::misconception::{MisconceptionCode, MisconceptionTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Audience {
    Student,
    Educator,
}

impl Audience {
    pub fn as_str(self) -> &'static str {
        match self {
            Audience::Student => "student",
            Audience::Educator => "educator",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "student" => Some(Audience::Student),
            "educator" => Some(Audience::Educator),
            _ => None,
        }
    }
}

impl fmt::Display for Audience {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateKey {
    pub audience: Audience,
    pub category: Category,
    pub change: Change,
}

impl fmt::Display for TemplateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}.{}", self.audience, self.category, self.change)
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("no feedback template for `{0}`")]
    MissingTemplate(TemplateKey),
    #[error("template `{key}` uses unknown placeholder `{{{name}}}`")]
    UnknownPlaceholder { key: TemplateKey, name: String },
    #[error("template `{key}` may not use `{{{name}}}`: student hints for missing items must not reveal the reference")]
    ForbiddenPlaceholder { key: TemplateKey, name: String },
    #[error("template file name `{0}` is not `<audience>.<category>.<change>.tmpl`")]
    BadFileName(String),
    #[error("reading templates from {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

const PLACEHOLDERS: [&str; 4] = ["subject", "expected", "found", "aspect"];

macro_rules! embedded {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../templates/feedback/", $name)))),*]
    };
}

const DEFAULT_TEMPLATES: &[(&str, &str)] = embedded![
    "student.classes.missing.tmpl",
    "student.classes.extra.tmpl",
    "student.classes.modified.tmpl",
    "student.entities.missing.tmpl",
    "student.entities.extra.tmpl",
    "student.entities.modified.tmpl",
    "student.attributes.missing.tmpl",
    "student.attributes.extra.tmpl",
    "student.attributes.modified.tmpl",
    "student.operations.missing.tmpl",
    "student.operations.extra.tmpl",
    "student.operations.modified.tmpl",
    "student.relationships.missing.tmpl",
    "student.relationships.extra.tmpl",
    "student.relationships.modified.tmpl",
    "student.multiplicities.modified.tmpl",
    "student.visibility.modified.tmpl",
    "student.inheritance.modified.tmpl",
    "educator.classes.missing.tmpl",
    "educator.classes.extra.tmpl",
    "educator.classes.modified.tmpl",
    "educator.entities.missing.tmpl",
    "educator.entities.extra.tmpl",
    "educator.entities.modified.tmpl",
    "educator.attributes.missing.tmpl",
    "educator.attributes.extra.tmpl",
    "educator.attributes.modified.tmpl",
    "educator.operations.missing.tmpl",
    "educator.operations.extra.tmpl",
    "educator.operations.modified.tmpl",
    "educator.relationships.missing.tmpl",
    "educator.relationships.extra.tmpl",
    "educator.relationships.modified.tmpl",
    "educator.multiplicities.modified.tmpl",
    "educator.visibility.modified.tmpl",
    "educator.inheritance.modified.tmpl",
];

/// Hint templates keyed by audience, category and change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateKey, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let mut set = TemplateSet { templates: BTreeMap::new() };
        for (name, text) in DEFAULT_TEMPLATES {
            set.insert_file(name, text).expect("embedded templates are valid");
        }
        set
    }
}

impl TemplateSet {
    pub fn empty() -> Self {
        TemplateSet { templates: BTreeMap::new() }
    }

    /// Loads every `*.tmpl` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, TemplateError> {
        let io = |source| TemplateError::Io { path: dir.display().to_string(), source };
        let mut entries: Vec<_> = std::fs::read_dir(dir).map_err(io)?.collect::<Result<_, _>>().map_err(io)?;
        entries.sort_by_key(|e| e.file_name());
        let mut set = TemplateSet::empty();
        for entry in entries {
            let name = entry.file_name().to_string_lossy().into_owned();
            if !name.ends_with(".tmpl") {
                continue;
            }
            let text = std::fs::read_to_string(entry.path())
                .map_err(|source| TemplateError::Io { path: entry.path().display().to_string(), source })?;
            set.insert_file(&name, &text)?;
        }
        Ok(set)
    }

    fn insert_file(&mut self, file_name: &str, text: &str) -> Result<(), TemplateError> {
        let bad = || TemplateError::BadFileName(file_name.to_string());
        let stem = file_name.strip_suffix(".tmpl").ok_or_else(bad)?;
        let mut parts = stem.split('.');
        let (Some(a), Some(c), Some(ch), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        let key = TemplateKey {
            audience: Audience::parse(a).ok_or_else(bad)?,
            category: Category::parse(c).ok_or_else(bad)?,
            change: Change::parse(ch).ok_or_else(bad)?,
        };
        self.insert(key, text.trim())
    }

    /// Adds or replaces a template after checking its placeholders.
    pub fn insert(&mut self, key: TemplateKey, pattern: &str) -> Result<(), TemplateError> {
        for name in placeholders(pattern) {
            if !PLACEHOLDERS.contains(&name) {
                return Err(TemplateError::UnknownPlaceholder { key, name: name.to_string() });
            }
            if key.audience == Audience::Student && key.change == Change::Missing && name == "expected" {
                return Err(TemplateError::ForbiddenPlaceholder { key, name: name.to_string() });
            }
        }
        self.templates.insert(key, pattern.to_string());
        Ok(())
    }

    pub fn get(&self, key: TemplateKey) -> Option<&str> {
        self.templates.get(&key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }
}

/// `{word}` placeholders in order of appearance.
fn placeholders(pattern: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(start) = rest.find('{') {
        let after = &rest[start + 1..];
        match after.find('}') {
            Some(end) if !after[..end].is_empty() && after[..end].chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                out.push(&after[..end]);
                rest = &after[end + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

fn fill(pattern: &str, values: &[(&str, &str)]) -> String {
    let mut out = pattern.to_string();
    for (name, value) in values {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub category: Category,
    pub audience: Audience,
    pub hints: Vec<String>,
    /// Paraphrased prose replacing the bullet list, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
}

impl Section {
    fn markdown_body(&self) -> String {
        match &self.body {
            Some(body) => body.trim().to_string(),
            None => self.hints.iter().map(|h| format!("- {h}")).collect::<Vec<_>>().join("\n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MisconceptionSummary {
    pub code: MisconceptionCode,
    pub count: u64,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackBundle {
    pub student_markdown: String,
    pub educator_markdown: String,
    pub sections: Vec<Section>,
    pub misconceptions: Vec<MisconceptionSummary>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FeedbackBundle {
    pub fn sections_for(&self, audience: Audience) -> impl Iterator<Item = &Section> {
        self.sections.iter().filter(move |s| s.audience == audience)
    }

    /// Regenerates both Markdown documents from the sections.
    pub fn reassemble(&mut self) {
        self.student_markdown = student_document(self.sections_for(Audience::Student));
        self.educator_markdown = educator_document(self.sections_for(Audience::Educator), &self.misconceptions);
    }
}

const STUDENT_NONE: &str = "No structural differences were found between your diagram and the reference model.";
const STUDENT_INTRO: &str =
    "Your diagram was compared with the reference model. The points below suggest aspects worth revisiting.";
const LEAK_FALLBACK: &str = "Revisit this area of your diagram against the task.";
const EDUCATOR_NONE: &str = "No structural differences were found between the submission and the reference.";

fn student_document<'a>(sections: impl Iterator<Item = &'a Section>) -> String {
    let sections: Vec<&Section> = sections.collect();
    if sections.is_empty() {
        return format!("{STUDENT_NONE}\n");
    }
    let mut out = format!("{STUDENT_INTRO}\n");
    for s in sections {
        out.push_str(&format!("\n## {}\n\n{}\n", s.category.title(), s.markdown_body()));
    }
    out
}

fn educator_document<'a>(sections: impl Iterator<Item = &'a Section>, misconceptions: &[MisconceptionSummary]) -> String {
    let sections: Vec<&Section> = sections.collect();
    let mut out = if sections.is_empty() {
        format!("{EDUCATOR_NONE}\n")
    } else {
        let total: usize = sections.iter().map(|s| s.hints.len()).sum();
        let mut out = format!(
            "Structural comparison against the reference: {total} difference(s) in {} categor{}.\n",
            sections.len(),
            if sections.len() == 1 { "y" } else { "ies" }
        );
        for s in &sections {
            out.push_str(&format!("\n## {}\n\n{}\n", s.category.title(), s.markdown_body()));
        }
        out
    };
    if !sections.is_empty() || !misconceptions.is_empty() {
        out.push_str("\n## Misconceptions\n\n");
        if misconceptions.is_empty() {
            out.push_str("No misconception tags were assigned.\n");
        }
        for m in misconceptions {
            out.push_str(&format!("- **{}** ×{}: {}\n", m.code, m.count, m.explanation));
        }
    }
    out
}

pub fn aspect_label(aspect: Aspect) -> &'static str {
    match aspect {
        Aspect::Presence => "presence",
        Aspect::Name => "name spelling",
        Aspect::Kind => "kind",
        Aspect::Type => "type",
        Aspect::Key => "key membership",
        Aspect::Mandatory => "mandatory flag",
        Aspect::Visibility => "visibility",
        Aspect::Parameters => "parameter types",
        Aspect::ReturnType => "return type",
        Aspect::Direction => "direction",
        Aspect::Multiplicity => "multiplicity",
    }
}

fn code(text: &str) -> String {
    format!("`{text}`")
}

fn educator_subject(d: &Difference) -> String {
    match &d.location {
        Location::Relationship { end: Some(end), .. } => format!("{} ({end} end)", code(&d.subject)),
        _ => code(&d.subject),
    }
}

/// Whole-word, case-insensitive containment.
fn mentions(text: &str, word: &str) -> bool {
    !word.is_empty() && find_words(text, &[word.to_lowercase()]).next().is_some()
}

/// The missing element's own name, which a student hint must not contain.
pub fn missing_element_name(d: &Difference) -> Option<&str> {
    if d.change != Change::Missing {
        return None;
    }
    match &d.location {
        Location::Node { node } => Some(node),
        Location::Member { member, .. } => Some(member.split('(').next().unwrap_or(member)),
        Location::Relationship { .. } => None,
    }
}

fn student_subject(d: &Difference, node_category: Category) -> String {
    let fallback = match (d.category, node_category) {
        (Category::Relationships, _) => "the elements of your diagram",
        (_, Category::Entities) => "one of your entities",
        _ => "one of your classes",
    };
    match (&d.student_context, missing_element_name(d)) {
        (Some(context), Some(name)) if mentions(context, name) => fallback.to_string(),
        (Some(context), _) => code(context),
        (None, _) => fallback.to_string(),
    }
}

/// Renders both documents. Tags are summarized per code in the educator
/// document.
pub fn render_feedback(
    report: &DiffReport,
    tags: &[MisconceptionTag],
    templates: &TemplateSet,
) -> Result<FeedbackBundle, TemplateError> {
    let node_category = report
        .differences
        .iter()
        .map(|d| d.category)
        .find(|c| matches!(c, Category::Classes | Category::Entities))
        .unwrap_or(Category::Classes);
    let mut by_category: BTreeMap<Category, Vec<&Difference>> = BTreeMap::new();
    for d in &report.differences {
        by_category.entry(d.category).or_default().push(d);
    }
    let mut student = Vec::new();
    let mut educator = Vec::new();
    for (category, diffs) in by_category {
        let mut student_hints = Vec::new();
        let mut educator_hints = Vec::new();
        for d in diffs {
            let lookup = |audience| {
                let key = TemplateKey { audience, category, change: d.change };
                templates.get(key).ok_or(TemplateError::MissingTemplate(key))
            };
            let aspect = aspect_label(d.aspect);
            let found = d.detail.found.as_deref().map(code).unwrap_or_default();
            let expected = d.detail.expected.as_deref().map(code).unwrap_or_default();
            let subject = student_subject(d, node_category);
            let mut hint = fill(
                lookup(Audience::Student)?,
                &[("subject", &subject), ("found", &found), ("aspect", aspect), ("expected", "")],
            );
            if missing_element_name(d).is_some_and(|name| mentions(&hint, name)) {
                hint = LEAK_FALLBACK.to_string();
            }
            student_hints.push(hint);
            let subject = educator_subject(d);
            educator_hints.push(fill(
                lookup(Audience::Educator)?,
                &[("subject", &subject), ("found", &found), ("aspect", aspect), ("expected", &expected)],
            ));
        }
        student.push(Section { category, audience: Audience::Student, hints: student_hints, body: None });
        educator.push(Section { category, audience: Audience::Educator, hints: educator_hints, body: None });
    }
    let mut bundle = FeedbackBundle {
        student_markdown: String::new(),
        educator_markdown: String::new(),
        sections: student.into_iter().chain(educator).collect(),
        misconceptions: summarize(tags),
        warnings: Vec::new(),
    };
    bundle.reassemble();
    Ok(bundle)
}

fn summarize(tags: &[MisconceptionTag]) -> Vec<MisconceptionSummary> {
    let mut grouped: BTreeMap<MisconceptionCode, (u64, Vec<&str>)> = BTreeMap::new();
    for tag in tags {
        let entry = grouped.entry(tag.code).or_default();
        entry.0 += tag.occurrences();
        if !entry.1.contains(&tag.explanation.as_str()) {
            entry.1.push(&tag.explanation);
        }
    }
    grouped
        .into_iter()
        .map(|(code, (count, explanations))| MisconceptionSummary {
            code,
            count,
            explanation: explanations.join(" "),
        })
        .collect()
}

pub const DEFAULT_LEXICON: [&str; 7] = ["wrong", "incorrect", "mistake", "error", "bad", "fail", "failed"];

/// Forbidden judgment words for student-facing text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    words: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new(DEFAULT_LEXICON)
    }
}

impl Lexicon {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Self {
        let mut words: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        words.sort();
        words.dedup();
        Lexicon { words }
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        Lexicon::new(text.lines().map(|l| l.split('#').next().unwrap_or("")))
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Lexicon::parse(&std::fs::read_to_string(path)?))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub token: String,
    /// Byte offset of the match.
    pub position: usize,
    pub line: usize,
    pub column: usize,
}

fn find_words<'a>(text: &'a str, words: &'a [String]) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    let mut start = None;
    text.char_indices()
        .chain(std::iter::once((text.len(), ' ')))
        .filter_map(move |(i, c)| {
            if is_word(c) {
                start.get_or_insert(i);
                None
            } else {
                start.take().map(|s| (s, &text[s..i]))
            }
        })
        .filter(move |(_, w)| words.iter().any(|f| f.as_str() == w.to_lowercase()))
}

/// Whole-word, case-insensitive scan of `markdown` for lexicon words.
pub fn check_neutrality(markdown: &str, lexicon: &Lexicon) -> Vec<Violation> {
    find_words(markdown, lexicon.words())
        .map(|(position, word)| {
            let before = &markdown[..position];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
            Violation { token: word.to_lowercase(), position, line, column }
        })
        .collect()
}

/// A text-generation backend used to reword feedback sections.
pub trait Paraphraser {
    type Error: std::error::Error;

    /// When true, paraphrasing is skipped and bundles pass through.
    fn is_offline(&self) -> bool;

    fn paraphrase(&self, audience: Audience, text: &str) -> Result<String, Self::Error>;
}

#[derive(Debug, Error)]
#[error("paraphrasing section {section} failed: {source}")]
pub struct ParaphraseError<E: std::error::Error + 'static> {
    pub section: String,
    #[source]
    pub source: E,
}

/// Rewords every section through `paraphraser`. A rewording that contains a
/// lexicon word is discarded with a warning and the original kept.
pub fn paraphrase_feedback<P: Paraphraser>(
    bundle: &FeedbackBundle,
    paraphraser: &P,
    lexicon: &Lexicon,
) -> Result<FeedbackBundle, ParaphraseError<P::Error>>
where
    P::Error: 'static,
{
    if paraphraser.is_offline() {
        return Ok(bundle.clone());
    }
    let mut out = bundle.clone();
    for section in &mut out.sections {
        let id = format!("{}/{}", section.audience, section.category);
        let original = section.markdown_body();
        let text = paraphraser
            .paraphrase(section.audience, &original)
            .map_err(|source| ParaphraseError { section: id.clone(), source })?;
        let text = text.trim();
        if text.is_empty() || text == original {
            continue;
        }
        let violations = check_neutrality(text, lexicon);
        if let Some(v) = violations.first() {
            out.warnings.push(format!("kept the original {id} section: the rewording contains `{}`", v.token));
            continue;
        }
        section.body = Some(text.to_string());
    }
    out.reassemble();
    Ok(out)
}
