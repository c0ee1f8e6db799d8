//! Python module `duet`. Structured results cross the boundary as plain
//! dicts and lists built from the engine's JSON form.

use duet_core::feedback::{check_neutrality, Lexicon, TemplateSet};
use duet_core::matching::{match_nodes, DEFAULT_THRESHOLD};
use duet_core::misconception::classify;
use duet_core::pipeline::{compare, CompareOptions};
use duet_core::similarity::{levenshtein, name_similarity};
use duet_core::{parse_plantuml, print_plantuml, Diagram, DiagramKind};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_kind(kind: Option<&str>) -> PyResult<Option<DiagramKind>> {
    kind.map(|k| k.parse::<DiagramKind>().map_err(PyValueError::new_err))
        .transpose()
}

fn invalid(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A canonical class or ER diagram.
#[pyclass(name = "Diagram", module = "duet", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyDiagram {
    inner: Diagram,
}

#[pymethods]
impl PyDiagram {
    /// Parses PlantUML. Raises ValueError listing every diagnostic.
    #[staticmethod]
    #[pyo3(signature = (source, kind=None))]
    fn parse(source: &str, kind: Option<&str>) -> PyResult<Self> {
        let parsed = parse_plantuml(source, parse_kind(kind)?).map_err(|e| {
            let lines: Vec<String> = e.diagnostics.iter().map(|d| d.to_string()).collect();
            PyValueError::new_err(format!("{e}\n{}", lines.join("\n")))
        })?;
        Ok(PyDiagram { inner: parsed.diagram })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind {
            DiagramKind::ClassDiagram => "class_diagram",
            DiagramKind::ERDiagram => "er_diagram",
        }
    }

    #[getter]
    fn node_names(&self) -> Vec<String> {
        self.inner.nodes.iter().map(|n| n.name.clone()).collect()
    }

    fn to_plantuml(&self) -> String {
        print_plantuml(&self.inner)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Diagram(kind={:?}, nodes={})", self.kind(), self.inner.nodes.len())
    }
}

/// Full comparison: diff report, misconception tags and feedback.
#[pyfunction(name = "compare")]
#[pyo3(signature = (reference, student, threshold=DEFAULT_THRESHOLD))]
fn compare_py<'py>(py: Python<'py>, reference: &PyDiagram, student: &PyDiagram, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    let templates = TemplateSet::default();
    let options = CompareOptions { threshold, templates: &templates };
    let comparison = compare(&reference.inner, &student.inner, &options).map_err(invalid)?;
    to_py(py, &comparison)
}

/// Node matching as a dict of pairs and unmatched names.
#[pyfunction(name = "match_nodes")]
#[pyo3(signature = (reference, student, threshold=DEFAULT_THRESHOLD))]
fn match_py<'py>(py: Python<'py>, reference: &PyDiagram, student: &PyDiagram, threshold: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &match_nodes(&reference.inner, &student.inner, threshold).map_err(invalid)?)
}

/// Misconception codes for a comparison, one entry per tag.
#[pyfunction(name = "classify")]
fn classify_py(reference: &PyDiagram, student: &PyDiagram) -> PyResult<Vec<String>> {
    let templates = TemplateSet::default();
    let comparison = compare(&reference.inner, &student.inner, &CompareOptions::new(&templates)).map_err(invalid)?;
    Ok(classify(&comparison.diff_report).iter().map(|t| t.code.to_string()).collect())
}

/// Judgmental words found in `markdown` as (token, line, column) triples.
#[pyfunction(name = "check_neutrality")]
#[pyo3(signature = (markdown, words=None))]
fn neutrality_py(markdown: &str, words: Option<Vec<String>>) -> Vec<(String, usize, usize)> {
    let lexicon = words.map(Lexicon::new).unwrap_or_default();
    check_neutrality(markdown, &lexicon).into_iter().map(|v| (v.token, v.line, v.column)).collect()
}

#[pyfunction(name = "name_similarity")]
fn similarity_py(a: &str, b: &str) -> f64 {
    name_similarity(a, b)
}

#[pyfunction(name = "levenshtein")]
fn levenshtein_py(a: &str, b: &str) -> usize {
    levenshtein(a, b)
}

#[pymodule]
fn duet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiagram>()?;
    m.add_function(wrap_pyfunction!(compare_py, m)?)?;
    m.add_function(wrap_pyfunction!(match_py, m)?)?;
    m.add_function(wrap_pyfunction!(classify_py, m)?)?;
    m.add_function(wrap_pyfunction!(neutrality_py, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_py, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein_py, m)?)?;
    m.add("DEFAULT_THRESHOLD", DEFAULT_THRESHOLD)?;
    Ok(())
}
