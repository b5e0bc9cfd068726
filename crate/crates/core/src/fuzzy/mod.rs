//! Fuzzy decision-making: membership shapes, linguistic variables, the rule
//! base with caregiver edits, and min/max inference with singleton outputs.

mod engine;
mod membership;
mod rule;
mod store;
mod variable;

pub use engine::{
    firing_strengths, fuzzify, infer_decision, select_outputs, CrispInputSnapshot, CrispValue, DecisionOutput,
    Fuzzified, Selection, DEFAULT_THRESHOLD,
};
pub use membership::MembershipFunction;
pub use rule::{Clause, Origin, Rule, RuleBase, RuleClass, RuleDocument, RuleEdit, RuleId};
pub use store::RuleStore;
pub use variable::{DataType, FuzzyVariable, Role, Term};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("parse error at line {line}, column {column} (field `{path}`): {message}")]
    Parse { line: usize, column: usize, path: String, message: String },
    #[error("reference error at {locus}: {message}")]
    Reference { locus: String, message: String },
    #[error("invalid variable `{name}`: {message}")]
    InvalidVariable { name: String, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("rule {0} already exists")]
    DuplicateRule(RuleId),
    #[error("no rule with id {0}")]
    UnknownRule(RuleId),
    #[error("activation threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

pub type Result<T> = std::result::Result<T, FuzzyError>;
