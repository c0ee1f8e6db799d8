use super::*;
use crate::model::{Attribute, Multiplicity, Node, NodeKind, RelKind, Relationship, Visibility};

const STUDENT: &str = "@startuml\nclass Student {\n +name : String\n -gpa : Float\n +enroll(c : Course) : void\n}\nStudent \"0..*\" -- \"1..*\" Course : enrolls\n@enduml";

const ORDER: &str = "@startuml\nentity Order {\n *id : int\n --\n total : float\n}\nentity Customer\nCustomer ||--o{ Order : places\n@enduml";

fn parse(src: &str) -> Parsed {
    parse_plantuml(src, None).unwrap_or_else(|e| panic!("{e}: {:?}", e.diagnostics))
}

#[test]
fn class_example() {
    let parsed = parse(STUDENT);
    let d = &parsed.diagram;
    assert_eq!(d.kind, DiagramKind::ClassDiagram);
    assert_eq!(d.nodes.len(), 2);
    let course = &d.nodes[0];
    assert_eq!(course.name, "Course");
    assert!(course.attributes.is_empty() && course.operations.is_empty());
    let student = &d.nodes[1];
    assert_eq!(student.attributes.len(), 2);
    assert_eq!(student.operations.len(), 1);
    assert_eq!(student.attributes[0].name, "gpa");
    assert_eq!(student.attributes[0].visibility, Visibility::Private);
    assert_eq!(student.operations[0].return_type.as_deref(), Some("void"));

    // Canonical order puts Course first, so the multiplicities follow it.
    let rel = &d.relationships[0];
    assert_eq!(rel.rel_kind, RelKind::Association);
    assert_eq!((rel.end_a.as_str(), rel.end_b.as_str()), ("Course", "Student"));
    assert_eq!(rel.multiplicity_a, Some(Multiplicity::ONE_OR_MORE));
    assert_eq!(rel.multiplicity_b, Some(Multiplicity::MANY));
    assert_eq!(rel.label.as_deref(), Some("enrolls"));

    let implicit: Vec<_> = parsed
        .diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Warning && d.message.contains("Course"))
        .collect();
    assert_eq!(implicit.len(), 1);
    assert_eq!(implicit[0].line, 7);
}

#[test]
fn er_example() {
    let d = parse(ORDER).diagram;
    assert_eq!(d.kind, DiagramKind::ERDiagram);
    let order = d.node("Order").unwrap();
    assert_eq!(order.attributes[0], Attribute::new("id", Some("int")).key().mandatory());
    assert_eq!(order.attributes[1], Attribute::new("total", Some("float")));
    assert!(d.node("Customer").unwrap().attributes.is_empty());
    assert_eq!(
        d.relationships,
        vec![Relationship::new(RelKind::ERRelationship, "Customer", "Order")
            .with_multiplicities(Some(Multiplicity::ONE), Some(Multiplicity::MANY))
            .with_label("places")]
    );
}

#[test]
fn missing_colon_is_a_syntax_error_on_the_member_line() {
    let err = parse_plantuml("@startuml\nclass A {\n +name String\n}\n@enduml", None).unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::Syntax);
    let first = err.errors().next().unwrap();
    assert_eq!(first.line, 3);
    assert_eq!(first.column, 2);
}

#[test]
fn missing_enclosure() {
    let err = parse_plantuml("class A\n", None).unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::MissingEnclosure);
    let err = parse_plantuml("@startuml\nclass A\n", None).unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::MissingEnclosure);
    assert_eq!(err.diagnostics[0].line, 2);
}

#[test]
fn kind_mismatch_against_expectation() {
    let err = parse_plantuml(ORDER, Some(DiagramKind::ClassDiagram)).unwrap_err();
    assert_eq!(
        err.kind,
        ParseErrorKind::KindMismatch {
            expected: DiagramKind::ClassDiagram,
            found: DiagramKind::ERDiagram
        }
    );
    assert_eq!(err.code(), "kind_mismatch");
}

#[test]
fn empty_diagram_adopts_expected_kind() {
    let d = parse_plantuml("@startuml\n@enduml", Some(DiagramKind::ERDiagram)).unwrap().diagram;
    assert_eq!(d.kind, DiagramKind::ERDiagram);
    let d = parse_plantuml("@startuml\n@enduml", None).unwrap().diagram;
    assert_eq!(d.kind, DiagramKind::ClassDiagram);
}

#[test]
fn detect_kind_rules() {
    assert_eq!(
        detect_kind("@startuml\nentity A\nentity B\n@enduml").unwrap(),
        DiagramKind::ERDiagram
    );
    assert_eq!(
        detect_kind("@startuml\nclass A\nclass B\n@enduml").unwrap(),
        DiagramKind::ClassDiagram
    );
    assert_eq!(detect_kind("@startuml\nA ||--o{ B\n@enduml").unwrap(), DiagramKind::ERDiagram);
    let err = detect_kind("@startuml\nentity A\nclass B\n@enduml").unwrap_err();
    assert_eq!(err.kind, ParseErrorKind::MixedKinds);
    assert_eq!(err.diagnostics[0].line, 3);
}

#[test]
fn mirrored_arrows_normalize_direction() {
    let src = "@startuml\nclass Person\nclass Student\nPerson <|-- Student\nLibrary \"1\" --o \"*\" Book\n@enduml";
    let d = parse(src).diagram;
    assert!(d.relationships.contains(&Relationship::new(RelKind::Inheritance, "Student", "Person")));
    assert!(d.relationships.contains(
        &Relationship::new(RelKind::Aggregation, "Book", "Library")
            .with_multiplicities(Some(Multiplicity::MANY), Some(Multiplicity::ONE))
    ));
}

#[test]
fn skipped_directives_warn() {
    let src = "@startuml\nskinparam classAttributeIconSize 0\nskinparam class {\n  BackgroundColor White\n}\nnote \"hi\" as N1\nnote left of A\n  long text\nend note\nclass A #pink {\n  {static} count : int\n}\nhide empty members\n@enduml";
    let parsed = parse(src);
    assert_eq!(parsed.diagram.nodes, vec![Node::new("A", NodeKind::Class).with_attribute(Attribute::new("count", Some("int")))]);
    let warnings = parsed.diagnostics.iter().filter(|d| d.severity == Severity::Warning).count();
    assert_eq!(warnings, 7);
}

#[test]
fn unknown_statement_is_an_error_with_position() {
    let err = parse_plantuml("@startuml\nclass A\n  what is this\n@enduml", None).unwrap_err();
    let d = err.errors().next().unwrap();
    assert_eq!((d.line, d.column), (3, 3));
}

#[test]
fn malformed_multiplicity_is_reported() {
    let err = parse_plantuml("@startuml\nA \"1,3\" -- B\n@enduml", None).unwrap_err();
    assert!(err.errors().next().unwrap().message.contains("1,3"));
}

#[test]
fn duplicate_members_are_errors() {
    let err = parse_plantuml("@startuml\nclass A {\n x : int\n X : int\n}\n@enduml", None).unwrap_err();
    assert_eq!(err.errors().next().unwrap().line, 4);
    let err = parse_plantuml("@startuml\nclass A\nclass a\n@enduml", None).unwrap_err();
    assert_eq!(err.errors().next().unwrap().line, 3);
}

#[test]
fn class_arrows_rejected_in_er_and_vice_versa() {
    assert!(parse_plantuml("@startuml\nentity A\nentity B\nA -- B\n@enduml", None).is_err());
    assert!(parse_plantuml("@startuml\nclass A\nclass B\nA ||--o{ B\n@enduml", None).is_err());
}

#[test]
fn entity_without_separator_has_no_key() {
    let d = parse("@startuml\nentity A {\n *id : int\n name : text\n}\n@enduml").diagram;
    assert!(d.nodes[0].attributes.iter().all(|a| !a.is_key));
    assert!(d.nodes[0].attributes.iter().any(|a| a.is_mandatory));
}

#[test]
fn sql_types_with_parentheses_are_attributes() {
    let d = parse("@startuml\nentity A {\n *id : int\n --\n name : varchar(255)\n}\n@enduml").diagram;
    assert_eq!(d.nodes[0].attributes[1].type_text.as_deref(), Some("varchar(255)"));
}

#[test]
fn quoted_names_round_trip() {
    let src = "@startuml\nclass \"Order Line\"\nclass Item\n\"Order Line\" \"1\" -- \"*\" Item\n@enduml";
    let d = parse(src).diagram;
    assert_eq!(d.nodes[1].name, "Order Line");
    let printed = print_plantuml(&d);
    assert_eq!(parse(&printed).diagram, d);
}

#[test]
fn print_empty() {
    assert_eq!(print_plantuml(&Diagram::new(DiagramKind::ClassDiagram)), "@startuml\n@enduml");
}

#[test]
fn print_examples_reparse() {
    for src in [STUDENT, ORDER] {
        let d = parse(src).diagram;
        let printed = print_plantuml(&d);
        let again = parse_plantuml(&printed, Some(d.kind)).unwrap();
        assert_eq!(again.diagram, d);
        assert!(again.diagnostics.is_empty(), "{:?}", again.diagnostics);
        assert_eq!(print_plantuml(&again.diagram), printed);
    }
}

#[test]
fn print_layout() {
    let d = parse(ORDER).diagram;
    assert_eq!(
        print_plantuml(&d),
        "@startuml\nentity Customer\nentity Order {\n  *id : int\n  --\n  total : float\n}\nCustomer ||--o{ Order : places\n@enduml"
    );
}

#[test]
fn crlf_input() {
    let d = parse(&STUDENT.replace('\n', "\r\n")).diagram;
    assert_eq!(d, parse(STUDENT).diagram);
}
