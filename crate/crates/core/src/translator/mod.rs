//! Source language front end: parsing, restriction checks, translation to
//! SPEs and back, and graph optimization.

use std::fmt;

pub mod ast;
mod eval;
mod lexer;
pub mod parser;
mod restrictions;
mod reverse;
mod translate;

pub use eval::{Scope, Val};
pub use parser::{parse_expr, parse_program};
pub use restrictions::check_restrictions;
pub use reverse::{optimize, parse_event, spe_to_program, OptimizeReport};
pub use translate::{
    assignment_event, translate, translate_source, TranslateOptions, TranslateStats, Translation,
};

use crate::{Error, Result};
use ast::{CmpOp, Expr, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionViolation {
    pub rule: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for RestrictionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (line {}): {}", self.rule, self.line, self.message)
    }
}

/// Expand `switch x cases (v in values): C` into an if/elif chain with one
/// branch per value and `v` replaced by that value in `C`. Values that are
/// lists give membership tests.
pub fn desugar_switch(s: &Stmt, scope: &Scope) -> Result<Stmt> {
    let StmtKind::Switch { subject, binder, values, body } = &s.kind else {
        return Ok(s.clone());
    };
    let line = s.line;
    let vals = match scope.eval(values)? {
        Val::List(xs) => xs,
        other => {
            return Err(Error::Translate(format!("line {line}: switch needs a list of values, got {other:?}")))
        }
    };
    if vals.is_empty() {
        return Err(Error::Translate(format!("line {line}: switch over an empty list")));
    }
    let mut branches = Vec::with_capacity(vals.len());
    for v in vals {
        let ve = v
            .to_expr()
            .ok_or_else(|| Error::Translate(format!("line {line}: switch values must be constants")))?;
        let op = if matches!(v, Val::List(_)) { CmpOp::In } else { CmpOp::Eq };
        let test = Expr::Compare(Box::new(subject.clone()), vec![(op, ve.clone())]);
        branches.push((test, ast::substitute_block(body, binder, &ve)));
    }
    Ok(Stmt { kind: StmtKind::If { branches, orelse: None }, line })
}
