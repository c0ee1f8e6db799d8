use std::path::PathBuf;

use duet_core::diff::diff;
use duet_core::matching::{match_nodes, DEFAULT_THRESHOLD};
use duet_core::misconception::{classify, cross_model_check};
use duet_core::plantuml::Severity;
use duet_core::{parse_plantuml, print_plantuml, Diagram, DiagramKind};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

fn parse(name: &str, text: &str) -> Diagram {
    let parsed = parse_plantuml(text, None).unwrap_or_else(|e| panic!("{name}: {e} {:?}", e.diagnostics));
    assert!(parsed.diagnostics.iter().all(|d| d.severity != Severity::Error), "{name}");
    parsed.diagram
}

#[test]
fn corpus_has_both_kinds() {
    let kinds: Vec<DiagramKind> = corpus().iter().map(|(n, t)| parse(n, t).kind).collect();
    assert!(kinds.iter().filter(|k| **k == DiagramKind::ClassDiagram).count() >= 10);
    assert!(kinds.iter().filter(|k| **k == DiagramKind::ERDiagram).count() >= 10);
}

#[test]
fn corpus_files_declare_every_node() {
    for (name, text) in corpus() {
        let parsed = parse_plantuml(&text, None).unwrap();
        let unexpected: Vec<_> = parsed.diagnostics.iter().filter(|d| !d.message.ends_with("skipped")).collect();
        assert!(unexpected.is_empty(), "{name}: {unexpected:?}");
    }
}

#[test]
fn corpus_round_trips() {
    for (name, text) in corpus() {
        let d = parse(&name, &text);
        let printed = print_plantuml(&d);
        let again = parse_plantuml(&printed, Some(d.kind)).unwrap();
        assert_eq!(again.diagram, d, "{name}\n{printed}");
        assert!(again.diagnostics.is_empty(), "{name}");
        assert_eq!(print_plantuml(&again.diagram), printed, "{name}");
    }
}

#[test]
fn corpus_identity_diffs_are_empty() {
    for (name, text) in corpus() {
        let d = parse(&name, &text);
        let m = match_nodes(&d, &d, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(m.pairs.len(), d.nodes.len(), "{name}");
        let report = diff(&d, &d, &m).unwrap();
        assert!(report.is_empty(), "{name}: {:?}", report.differences);
        assert!(classify(&report).is_empty());
    }
}

#[test]
fn paired_domains_cross_check() {
    let all = corpus();
    let get = |n: &str| parse(n, &all.iter().find(|(f, _)| f == n).unwrap().1);
    let tags = cross_model_check(&get("class_hotel.puml"), &get("er_hotel.puml"), DEFAULT_THRESHOLD).unwrap();
    let messages: Vec<&str> = tags.iter().map(|t| t.explanation.as_str()).collect();
    assert!(messages.contains(&"Entity `Charge` has no corresponding class."), "{messages:?}");
    assert!(messages.contains(&"Class `Service` has no corresponding entity."), "{messages:?}");
    assert!(messages.contains(&"Class `Suite` has no corresponding entity."), "{messages:?}");
    assert!(tags.iter().all(|t| t.difference_refs.is_empty()));
}
