//! Front end for the supported C fragment with ACSL-style annotations.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod spec;
pub mod validate;

pub use ast::*;
pub use parser::Parsed;
pub use printer::{print_expr, print_program, print_spec};
pub use spec::{parse_spec_expr, SpecScope};
pub use validate::{assigned_names, validate_subset};

use crate::diagnostics::{Diagnostic, Severity};

/// Parses without checking the fragment restrictions.
pub fn parse_unchecked(src: &str) -> Result<Parsed, Diagnostic> {
    parser::parse(src)
}

/// Parses and validates. On failure returns every error diagnostic found.
pub fn parse_translation_unit(src: &str) -> Result<Parsed, Vec<Diagnostic>> {
    let parsed = parser::parse(src).map_err(|d| vec![d])?;
    let errors: Vec<Diagnostic> = validate_subset(&parsed.program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(parsed)
    } else {
        Err(errors)
    }
}
