//! Verification of C programs whose expression evaluation order is
//! unspecified, by extraction to an active-object model.

pub mod abs_ir;
pub mod c_frontend;
pub mod deadlock;
pub mod diagnostics;
pub mod extractor;
pub mod interpreter;
pub mod pipeline;
pub mod prover;
pub mod smt;

pub use diagnostics::{Diagnostic, DiagnosticKind, Pos, Severity};
