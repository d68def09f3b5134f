//! Extraction of an annotated active-object model from a C program.

mod specs;
mod translate;

use thiserror::Error;

use crate::abs_ir::AbsModel;
use crate::c_frontend::{ast::CProgram, validate::validate_subset};
use crate::diagnostics::{Diagnostic, Severity};

pub use specs::{
    synthesize_global_object_specs, synthesize_operator_postconditions,
    translate_function_contracts, translate_spec, translate_strong_global_invariants,
};
pub use translate::{Translator, ValueRef};

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("program is outside the supported fragment ({} problems)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("contract of `{function}` mentions global `{global}`; only parameters and \\result may appear in function contracts")]
    ContractTranslation { function: String, global: String },
    #[error("strong invariant of `{global}` does not hold for its initial value {initial}")]
    Invariant { global: String, initial: i64 },
    #[error("model function `{name}`: {message}")]
    ModelFunction { name: String, message: String },
    #[error("internal extraction error: {0}")]
    Internal(String),
}

/// Statement translation followed by all specification synthesis steps.
pub fn extract_model(program: &CProgram) -> Result<AbsModel, ExtractError> {
    let errors: Vec<Diagnostic> = validate_subset(program)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        return Err(ExtractError::Invalid(errors));
    }
    let m = Translator::new(program).translate()?;
    let m = synthesize_global_object_specs(m);
    let m = synthesize_operator_postconditions(m);
    let m = translate_function_contracts(m, program)?;
    translate_strong_global_invariants(m, program)
}
