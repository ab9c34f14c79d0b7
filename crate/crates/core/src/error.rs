use thiserror::Error;

use crate::spe::Violation;
use crate::translator::RestrictionViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scope error: {0}")]
    Scope(String),
    #[error("conditioning event has probability zero")]
    ZeroProbability,
    #[error("conditioning event has density zero")]
    ZeroDensity,
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("unsupported event: {0}")]
    UnsupportedEvent(String),
    #[error("inclusion-exclusion over {clauses} clauses exceeds the limit of {limit}")]
    TooManyClauses { clauses: usize, limit: usize },
    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid SPE: {0}")]
    InvalidSpe(Violation),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{}", fmt_violations(.0))]
    Restriction(Vec<RestrictionViolation>),
    #[error("translation error: {0}")]
    Translate(String),
    #[error("format error: {0}")]
    Format(String),
}

fn fmt_violations(vs: &[RestrictionViolation]) -> String {
    let lines: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
    lines.join("\n")
}
