use alloc::string::String;

use crate::ast::RuleId;

/// Problems found while reading or validating a program.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared relation `{0}`")]
    UndeclaredRelation(String),
    #[error("relation `{relation}` has arity {expected}, found {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("rule {rule}: variable `{variable}` does not occur in a positive body atom")]
    UngroundedVariable { rule: RuleId, variable: String },
    #[error("relation `{0}` is declared more than once")]
    DuplicateDeclaration(String),
    #[error("relation `{0}` must have at least one attribute")]
    ZeroArity(String),
    #[error("type mismatch in `{relation}`: {detail}")]
    TypeMismatch { relation: String, detail: String },
    #[error("rule {rule}: {detail}")]
    ConstraintType { rule: RuleId, detail: String },
    #[error("rule ids must be 1-based and in source order, found {0}")]
    RuleNumbering(RuleId),
}

/// Negation inside a recursive cycle.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("relation `{head}` depends negatively on `{negated}` within one recursive component")]
pub struct CyclicNegation {
    pub negated: String,
    pub head: String,
}
