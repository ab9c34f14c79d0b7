//! Static checks of the language restrictions, by a dry run that unrolls
//! loops and switches and tracks which variables each path defines.

use std::collections::BTreeSet;

use super::ast::{Program, Stmt, StmtKind};
use super::eval::{Scope, Val};
use super::translate::{expand_parameters, finite_support, resolve_target, Supports};
use super::{desugar_switch, RestrictionViolation};
use crate::{Error, Var};

#[derive(Clone, Default)]
struct Dry {
    scope: Scope,
    supports: Supports,
}

/// Every violation of R1 (fresh names), R2 (branches define the same
/// variables), R3 (univariate transforms) and R4 (parameters are constants
/// or finite-support variables). Other errors are left to translation.
pub fn check_restrictions(prog: &Program) -> Vec<RestrictionViolation> {
    let mut out = Vec::new();
    let mut st = Dry::default();
    block(prog, &mut st, &mut out);
    out.dedup();
    out
}

fn block(stmts: &[Stmt], st: &mut Dry, out: &mut Vec<RestrictionViolation>) {
    for s in stmts {
        stmt(s, st, out);
    }
}

fn record(err: Error, out: &mut Vec<RestrictionViolation>) {
    if let Error::Restriction(vs) = err {
        out.extend(vs);
    }
}

fn define(st: &mut Dry, var: Var, support: Option<Vec<Val>>, line: usize, out: &mut Vec<RestrictionViolation>) {
    if st.scope.randoms.contains(&var) || st.scope.consts.contains_key(var.as_str()) {
        out.push(RestrictionViolation {
            rule: "R1".into(),
            line,
            message: format!("variable {var} is already defined"),
        });
    }
    st.scope.randoms.insert(var.clone());
    st.supports.insert(var, support);
}

fn stmt(s: &Stmt, st: &mut Dry, out: &mut Vec<RestrictionViolation>) {
    st.scope.line = s.line;
    match &s.kind {
        StmtKind::Pass => {}
        StmtKind::Sample(t, e) => {
            let var = match resolve_target(&st.scope, t) {
                Ok(v) => v,
                Err(err) => return record(err, out),
            };
            let support = match st.scope.eval(e) {
                Ok(Val::Dist(d)) => finite_support(&d),
                Ok(v @ (Val::Num(_) | Val::Str(_))) => Some(vec![v]),
                Ok(_) => None,
                Err(Error::Restriction(vs)) if vs.iter().all(|v| v.rule == "R4") => {
                    match expand_parameters(&st.scope, &st.supports, t, e, s.line) {
                        Ok(Some(expanded)) => {
                            // check the expansion for the parameter values, then
                            // define the variable once
                            let mut probe = st.clone();
                            probe.scope.randoms.remove(&var);
                            if let StmtKind::If { branches, .. } = &expanded.kind {
                                for (_, b) in branches {
                                    let p = probe.clone();
                                    for inner in b {
                                        if let StmtKind::Sample(_, body) = &inner.kind {
                                            if let Err(err) = p.scope.eval(body) {
                                                record(err, out);
                                            }
                                        }
                                    }
                                }
                            }
                            None
                        }
                        Ok(None) => {
                            out.extend(vs);
                            None
                        }
                        Err(err) => {
                            record(err, out);
                            None
                        }
                    }
                }
                Err(err) => {
                    record(err, out);
                    None
                }
            };
            define(st, var, support, s.line, out);
        }
        StmtKind::Assign(t, e) => {
            let value = st.scope.eval(e);
            if t.index.is_none() {
                match value {
                    Ok(Val::Rand(_)) => {}
                    Ok(Val::Array(_, n)) => {
                        st.scope.consts.insert(t.name.clone(), Val::Array(t.name.clone(), n));
                        return;
                    }
                    Ok(v) => {
                        if st.scope.randoms.contains(&Var::new(&t.name)) {
                            out.push(RestrictionViolation {
                                rule: "R1".into(),
                                line: s.line,
                                message: format!("variable {} is already defined", t.name),
                            });
                        }
                        st.scope.consts.insert(t.name.clone(), v);
                        return;
                    }
                    Err(err) => record(err, out),
                }
            } else if let Err(err) = value {
                record(err, out);
            }
            match resolve_target(&st.scope, t) {
                Ok(var) => define(st, var, None, s.line, out),
                Err(err) => record(err, out),
            }
        }
        StmtKind::Condition(e) | StmtKind::Constrain(e) => {
            if let Err(err) = st.scope.eval(e) {
                record(err, out);
            }
        }
        StmtKind::For { var, iter, body } => match st.scope.eval(iter) {
            Ok(Val::List(xs)) => {
                for x in xs {
                    st.scope.consts.insert(var.clone(), x);
                    block(body, st, out);
                }
            }
            Ok(Val::Rand(_)) => out.push(RestrictionViolation {
                rule: "R4".into(),
                line: s.line,
                message: "loop bounds must be constants".into(),
            }),
            Ok(_) => {}
            Err(err) => record(err, out),
        },
        StmtKind::Switch { .. } => match desugar_switch(s, &st.scope) {
            Ok(d) => stmt(&d, st, out),
            Err(err) => record(err, out),
        },
        StmtKind::If { branches, orelse } => {
            let mut finals: Vec<Dry> = Vec::new();
            let mut taken = false;
            for (test, b) in branches {
                st.scope.line = s.line;
                let t = st.scope.eval(test).and_then(|v| st.scope.truth(v));
                match t {
                    Ok(Val::Bool(false)) => continue,
                    Ok(Val::Bool(true)) => {
                        let mut s2 = st.clone();
                        block(b, &mut s2, out);
                        finals.push(s2);
                        taken = true;
                        break;
                    }
                    Ok(_) => {}
                    Err(err) => record(err, out),
                }
                let mut s2 = st.clone();
                block(b, &mut s2, out);
                finals.push(s2);
            }
            if !taken {
                if let Some(b) = orelse {
                    let mut s2 = st.clone();
                    block(b, &mut s2, out);
                    finals.push(s2);
                }
            }
            let Some(first) = finals.first() else { return };
            let defined: BTreeSet<Var> = first.scope.randoms.clone();
            for f in &finals[1..] {
                if f.scope.randoms != defined {
                    let diff: Vec<String> =
                        defined.symmetric_difference(&f.scope.randoms).map(|v| v.to_string()).collect();
                    out.push(RestrictionViolation {
                        rule: "R2".into(),
                        line: s.line,
                        message: format!("branches define different variables: {}", diff.join(", ")),
                    });
                    break;
                }
            }
            let mut merged = first.clone();
            for f in &finals[1..] {
                merged.scope.randoms.extend(f.scope.randoms.iter().cloned());
                for (k, v) in &f.supports {
                    merged.supports.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
            *st = merged;
        }
    }
}
