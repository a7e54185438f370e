//! Task-graph language: parsing, validation and rendering.

mod gen;
mod parser;
mod render;
mod types;
mod validate;

pub use parser::{is_identifier, parse_constraint, parse_program, parse_unchecked, validate_located, DslError, ParseError, SourceMap};
pub use gen::random_graph;
pub use render::render_program;
pub use types::*;
pub use validate::{find_cycle, parse_place, validate, DirectiveRef, PlaceTarget, Rule, ValidationIssue};

#[cfg(test)]
mod tests;
