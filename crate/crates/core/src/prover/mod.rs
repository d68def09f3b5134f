//! Proof obligations and symbolic execution for cooperative method contracts.

pub mod logic;
pub mod obligations;
pub mod symex;

use thiserror::Error;

pub use logic::{apply_updates, compose, Formula, Modality, Op, Sort, Subst, Term, Update};
pub use obligations::{
    generate_obligations, method_contract_map, BehavioralContract, CalleeContract, PoKind,
    ProofObligation,
};
pub use symex::{symbolic_execute, Sequent};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProverError {
    #[error("unknown statement form: {0}")]
    UnknownStatementForm(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
}
