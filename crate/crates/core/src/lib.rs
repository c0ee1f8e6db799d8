//! Structural comparison and formative feedback for UML class diagrams and
//! ER diagrams written in a PlantUML subset.
//!
//! The pipeline is: [`plantuml::parse_plantuml`] both diagrams,
//! [`matching::match_nodes`] reference elements to student elements,
//! [`diff::diff`] them into a [`diff::DiffReport`], tag likely misconceptions
//! with [`misconception::classify`] and render student and educator Markdown
//! with [`feedback::render_feedback`]. [`pipeline::compare`] runs all of it.

pub mod diff;
pub mod feedback;
pub mod gateway;
pub mod generate;
pub mod matching;
pub mod misconception;
pub mod model;
pub mod mutation;
pub mod pipeline;
pub mod plantuml;
pub mod similarity;
pub mod store;

pub use model::{
    canonical_multiplicity, canonical_name, canonicalize, Attribute, Diagram, DiagramKind,
    ModelError, Multiplicity, Node, NodeKind, Operation, Parameter, RelKind, Relationship, Upper,
    Visibility,
};
pub use plantuml::{detect_kind, parse_plantuml, print_plantuml, ParseDiagnostic, ParseError, Parsed};
