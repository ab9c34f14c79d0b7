//! Translation of programs into sum-product expressions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use super::ast::{CmpOp, Expr, Program, Stmt, StmtKind, Target};
use super::eval::{restriction, Scope, Val};
use super::restrictions::check_restrictions;
use super::{desugar_switch, parser};
use crate::distributions::Distribution;
use crate::events::Event;
use crate::inference::{condition0, condition_with};
use crate::outcomes::{Outcome, Outcomes};
use crate::spe::{equality_point, Node, NodeId, QueryOptions, SpeGraph};
use crate::transforms::Transform;
use crate::{Error, Result, Var};

#[derive(Clone, Copy, Debug)]
pub struct TranslateOptions {
    /// Factorization, deduplication and memoization.
    pub optimize: bool,
    pub max_clauses: usize,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions { optimize: true, max_clauses: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct TranslateStats {
    /// Physical node count: distinct nodes when sharing is on, and the
    /// fully expanded tree when it is off.
    pub nodes: f64,
    /// Node count of the equivalent tree with every shared node copied.
    pub tree_nodes: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Translation {
    pub graph: SpeGraph,
    pub root: NodeId,
    pub warnings: Vec<String>,
    pub stats: TranslateStats,
}

/// Parse, check and translate program text.
pub fn translate_source(src: &str, opts: TranslateOptions) -> Result<Translation> {
    let prog = parser::parse_program(src)?;
    translate(&prog, opts)
}

pub fn translate(prog: &Program, opts: TranslateOptions) -> Result<Translation> {
    let start = Instant::now();
    let violations = check_restrictions(prog);
    if !violations.is_empty() {
        return Err(Error::Restriction(violations));
    }
    let graph = if opts.optimize { SpeGraph::new() } else { SpeGraph::without_interning() };
    let mut tr = Translator { g: graph, opts, warnings: Vec::new() };
    let mut st = State::default();
    tr.block(prog, &mut st)?;
    let root = st.root.ok_or_else(|| Error::Translate("program defines no random variables".into()))?;
    let tree_nodes = tr.g.tree_size(root);
    let nodes = if opts.optimize { tr.g.node_count(root) as f64 } else { tree_nodes };
    Ok(Translation {
        graph: tr.g,
        root,
        warnings: tr.warnings,
        stats: TranslateStats { nodes, tree_nodes, seconds: start.elapsed().as_secs_f64() },
    })
}

/// What is known about a random variable without looking at the SPE:
/// its values when there are finitely many of them.
pub(crate) type Supports = HashMap<Var, Option<Vec<Val>>>;

#[derive(Clone, Default)]
struct State {
    root: Option<NodeId>,
    scope: Scope,
    supports: Supports,
}

struct Translator {
    g: SpeGraph,
    opts: TranslateOptions,
    warnings: Vec<String>,
}

pub(crate) fn resolve_target(scope: &Scope, t: &Target) -> Result<Var> {
    match &t.index {
        None => Ok(Var::new(&t.name)),
        Some(i) => {
            let idx = scope.eval(i)?;
            match (scope.consts.get(&t.name), idx) {
                (Some(Val::Array(_, n)), Val::Num(k)) if k >= 0.0 && k.fract() == 0.0 && (k as usize) < *n => {
                    Ok(Var::indexed(&t.name, k as i64))
                }
                (Some(Val::Array(..)), Val::Num(k)) => {
                    Err(Error::Translate(format!("line {}: index {k} out of range for {}", scope.line, t.name)))
                }
                (Some(Val::Array(..)), _) => Err(restriction("R4", scope.line, "array indices must be constants")),
                _ => Err(Error::Translate(format!("line {}: {} is not an array", scope.line, t.name))),
            }
        }
    }
}

/// Values of a distribution when it has finitely many atoms.
pub(crate) fn finite_support(d: &Distribution) -> Option<Vec<Val>> {
    match d {
        Distribution::Str { weights } => Some(weights.iter().map(|(s, _)| Val::Str(s.clone())).collect()),
        Distribution::Int { .. } => {
            let atoms = d.atoms_in(&Outcomes::reals(), 1024)?;
            Some(atoms.into_iter().map(Val::Num).collect())
        }
        Distribution::Real { .. } => None,
    }
}

/// Random variables mentioned in `e` with the subexpression naming each.
pub(crate) fn random_refs(scope: &Scope, e: &Expr) -> Vec<(Expr, Var)> {
    let mut refs = Vec::new();
    e.references(&mut refs);
    let mut out: Vec<(Expr, Var)> = Vec::new();
    for r in refs {
        if let Ok(Val::Rand(Transform::Identity(v))) = scope.eval(&r) {
            if !out.iter().any(|(x, _)| *x == r) {
                out.push((r, v));
            }
        }
    }
    out
}

/// Rewrite `target ~ e`, whose parameters mention random variables with
/// finitely many values, as an if/elif over those values.
pub(crate) fn expand_parameters(
    scope: &Scope,
    supports: &Supports,
    target: &Target,
    e: &Expr,
    line: usize,
) -> Result<Option<Stmt>> {
    let refs = random_refs(scope, e);
    if refs.is_empty() {
        return Ok(None);
    }
    let mut choices: Vec<(Expr, Vec<Expr>)> = Vec::new();
    for (r, v) in &refs {
        let Some(Some(vals)) = supports.get(v) else {
            return Ok(None);
        };
        let exprs: Vec<Expr> = vals.iter().filter_map(Val::to_expr).collect();
        choices.push((r.clone(), exprs));
    }
    let mut branches = Vec::new();
    let mut combos: Vec<Vec<Expr>> = vec![vec![]];
    for (_, vals) in &choices {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                vals.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
        if combos.len() > 4096 {
            return Err(Error::Translate(format!("line {line}: too many parameter combinations")));
        }
    }
    for combo in combos {
        let mut body = e.clone();
        let mut tests = Vec::new();
        for ((r, _), v) in choices.iter().zip(&combo) {
            body = body.replace(r, v);
            tests.push(Expr::Compare(Box::new(r.clone()), vec![(CmpOp::Eq, v.clone())]));
        }
        let test = if tests.len() == 1 { tests.pop().unwrap() } else { Expr::And(tests) };
        branches.push((test, vec![Stmt { kind: StmtKind::Sample(target.clone(), body), line }]));
    }
    Ok(Some(Stmt { kind: StmtKind::If { branches, orelse: None }, line }))
}

fn merge_supports(a: &Supports, b: &Supports) -> Supports {
    let mut out = a.clone();
    for (v, s) in b {
        let merged = match (out.get(v), s) {
            (None, s) => s.clone(),
            (Some(Some(x)), Some(y)) => {
                let mut x = x.clone();
                for val in y {
                    if !x.contains(val) {
                        x.push(val.clone());
                    }
                }
                Some(x)
            }
            _ => None,
        };
        out.insert(v.clone(), merged);
    }
    out
}

impl Translator {
    fn qopts(&self) -> QueryOptions {
        QueryOptions { max_clauses: self.opts.max_clauses, memoize: self.opts.optimize }
    }

    fn cond(&mut self, root: NodeId, e: &Event) -> Result<NodeId> {
        let opts = self.qopts();
        condition_with(&mut self.g, root, e, opts)
    }

    fn block(&mut self, stmts: &[Stmt], st: &mut State) -> Result<()> {
        for s in stmts {
            self.stmt(s, st)?;
        }
        Ok(())
    }

    fn define(&mut self, st: &mut State, var: &Var, leaf: NodeId, support: Option<Vec<Val>>) -> Result<()> {
        st.root = Some(match st.root {
            None => leaf,
            Some(r) => self.g.product(vec![r, leaf])?,
        });
        st.scope.randoms.insert(var.clone());
        st.supports.insert(var.clone(), support);
        Ok(())
    }

    fn fresh(&self, st: &State, var: &Var) -> Result<()> {
        if st.scope.randoms.contains(var) || st.scope.consts.contains_key(var.as_str()) {
            return Err(restriction("R1", st.scope.line, format!("variable {var} is already defined")));
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, st: &mut State) -> Result<()> {
        st.scope.line = s.line;
        match &s.kind {
            StmtKind::Pass => Ok(()),
            StmtKind::Sample(target, e) => {
                let var = resolve_target(&st.scope, target)?;
                self.fresh(st, &var)?;
                let v = match st.scope.eval(e) {
                    Ok(v) => v,
                    Err(Error::Restriction(r)) if r.iter().all(|x| x.rule == "R4") => {
                        match expand_parameters(&st.scope, &st.supports, target, e, s.line)? {
                            Some(stmt) => return self.stmt(&stmt, st),
                            None => return Err(Error::Restriction(r)),
                        }
                    }
                    Err(err) => return Err(err),
                };
                match v {
                    Val::Dist(d) => {
                        let support = finite_support(&d);
                        let leaf = self.g.leaf(var.clone(), d);
                        self.define(st, &var, leaf, support)
                    }
                    Val::Str(x) => {
                        let leaf = self.g.leaf(var.clone(), Distribution::strings(vec![(x.clone(), 1.0)])?);
                        self.define(st, &var, leaf, Some(vec![Val::Str(x)]))
                    }
                    Val::Num(x) => {
                        let leaf = self.g.leaf(var.clone(), Distribution::atomic(x)?);
                        self.define(st, &var, leaf, Some(vec![Val::Num(x)]))
                    }
                    Val::Rand(t) => self.assign_transform(st, var, t),
                    other => Err(Error::Translate(format!("line {}: cannot sample from {other:?}", s.line))),
                }
            }
            StmtKind::Assign(target, e) => {
                if target.index.is_some() {
                    let var = resolve_target(&st.scope, target)?;
                    self.fresh(st, &var)?;
                    return match st.scope.eval(e)? {
                        Val::Rand(t) => self.assign_transform(st, var, t),
                        _ => Err(Error::Translate(format!(
                            "line {}: array elements hold random variables; use '~' for constants",
                            s.line
                        ))),
                    };
                }
                let var = Var::new(&target.name);
                if st.scope.randoms.contains(&var) {
                    return Err(restriction("R1", s.line, format!("variable {var} is already defined")));
                }
                match st.scope.eval(e)? {
                    Val::Rand(t) => self.assign_transform(st, var, t),
                    Val::Array(_, n) => {
                        st.scope.consts.insert(target.name.clone(), Val::Array(target.name.clone(), n));
                        Ok(())
                    }
                    Val::Dist(_) => Err(Error::Translate(format!("line {}: use '~' to sample", s.line))),
                    Val::Event(_) => Err(Error::Translate(format!("line {}: events cannot be assigned", s.line))),
                    v => {
                        st.scope.consts.insert(target.name.clone(), v);
                        Ok(())
                    }
                }
            }
            StmtKind::Condition(e) => match st.scope.truth(st.scope.eval(e)?)? {
                Val::Bool(true) => Ok(()),
                Val::Bool(false) => Err(Error::ZeroProbability),
                Val::Event(ev) => {
                    let root = self.need_root(st)?;
                    let p = self.g.ln_prob_with(root, &ev, self.qopts())?;
                    if p > f64::NEG_INFINITY {
                        st.root = Some(self.cond(root, &ev)?);
                        return Ok(());
                    }
                    match equality_point(&ev) {
                        Ok(_) => {
                            st.root = Some(condition0(&mut self.g, root, &ev)?);
                            Ok(())
                        }
                        Err(_) => Err(Error::ZeroProbability),
                    }
                }
                _ => unreachable!(),
            },
            StmtKind::Constrain(e) => match st.scope.eval(e)? {
                Val::Event(ev) => {
                    let root = self.need_root(st)?;
                    st.root = Some(condition0(&mut self.g, root, &ev)?);
                    Ok(())
                }
                _ => Err(Error::Translate(format!("line {}: constrain needs equalities on random variables", s.line))),
            },
            StmtKind::For { var, iter, body } => {
                let vals = match st.scope.eval(iter)? {
                    Val::List(xs) => xs,
                    Val::Rand(_) => return Err(restriction("R4", s.line, "loop bounds must be constants")),
                    other => return Err(Error::Translate(format!("line {}: cannot iterate over {other:?}", s.line))),
                };
                for v in vals {
                    st.scope.consts.insert(var.clone(), v);
                    self.block(body, st)?;
                }
                Ok(())
            }
            StmtKind::Switch { .. } => {
                let d = desugar_switch(s, &st.scope)?;
                self.stmt(&d, st)
            }
            StmtKind::If { branches, orelse } => self.if_chain(branches, orelse.as_deref(), s.line, st),
        }
    }

    fn need_root(&self, st: &State) -> Result<NodeId> {
        st.root
            .ok_or_else(|| Error::Translate(format!("line {}: no random variables defined yet", st.scope.line)))
    }

    fn assign_transform(&mut self, st: &mut State, var: Var, t: Transform) -> Result<()> {
        let root = self.need_root(st)?;
        let base = t.var();
        let mut memo = HashMap::new();
        st.root = Some(self.add_env(root, &base, &var, &t, &mut memo)?);
        st.scope.randoms.insert(var.clone());
        st.supports.insert(var, None);
        Ok(())
    }

    /// Add `var = t` to the environment of every leaf owning `base`.
    fn add_env(
        &mut self,
        n: NodeId,
        base: &Var,
        var: &Var,
        t: &Transform,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> Result<NodeId> {
        if let Some(r) = memo.get(&n) {
            return Ok(*r);
        }
        let r = match self.g.node(n).clone() {
            Node::Leaf { var: x, dist, env } => {
                if dist.is_nominal() {
                    return Err(Error::Translate(format!("transform of string-valued variable {base}")));
                }
                self.g.leaf_with_env(x, dist, env.with(var.clone(), t.clone()))?
            }
            Node::Sum { children, weights } => {
                let mut parts = Vec::with_capacity(children.len());
                for (c, w) in children.iter().zip(weights) {
                    parts.push((self.add_env(*c, base, var, t, memo)?, w));
                }
                self.g.sum(parts)?
            }
            Node::Product { children } => {
                let mut kids = children.clone();
                for k in kids.iter_mut() {
                    if self.g.scope(*k).contains(base) {
                        *k = self.add_env(*k, base, var, t, memo)?;
                    }
                }
                self.g.product(kids)?
            }
        };
        memo.insert(n, r);
        Ok(r)
    }

    fn if_chain(
        &mut self,
        branches: &[(Expr, Vec<Stmt>)],
        orelse: Option<&[Stmt]>,
        line: usize,
        st: &mut State,
    ) -> Result<()> {
        let Some(((test, body), rest)) = branches.split_first() else {
            return match orelse {
                Some(b) => self.block(b, st),
                None => Ok(()),
            };
        };
        st.scope.line = line;
        let e = match st.scope.truth(st.scope.eval(test)?)? {
            Val::Bool(true) => return self.block(body, st),
            Val::Bool(false) => return self.if_chain(rest, orelse, line, st),
            Val::Event(e) => e,
            _ => unreachable!(),
        };
        let root = self.need_root(st)?;
        let not_e = e.negate();
        let p = self.g.prob(root, &e)?;
        let q = self.g.prob(root, &not_e)?;
        let mut outcomes: Vec<(State, f64)> = Vec::new();
        if p > 0.0 {
            let mut s1 = st.clone();
            s1.root = Some(self.cond(root, &e)?);
            self.block(body, &mut s1)?;
            outcomes.push((s1, p));
        } else {
            self.warnings.push(format!("line {line}: branch with test {e} has probability zero and is dropped"));
        }
        if q > 0.0 {
            let mut s2 = st.clone();
            s2.root = Some(self.cond(root, &not_e)?);
            self.if_chain(rest, orelse, line, &mut s2)?;
            outcomes.push((s2, q));
        } else if !rest.is_empty() || orelse.is_some() {
            self.warnings.push(format!("line {line}: alternative to {e} has probability zero and is dropped"));
        }
        if outcomes.is_empty() {
            return Err(Error::ZeroProbability);
        }
        let first = outcomes[0].0.scope.randoms.clone();
        for (o, _) in &outcomes[1..] {
            if o.scope.randoms != first {
                let diff: BTreeSet<&Var> = first.symmetric_difference(&o.scope.randoms).collect();
                let names: Vec<String> = diff.iter().map(|v| v.to_string()).collect();
                return Err(restriction(
                    "R2",
                    line,
                    format!("branches define different variables: {}", names.join(", ")),
                ));
            }
        }
        let mut supports = outcomes[0].0.supports.clone();
        for (o, _) in &outcomes[1..] {
            supports = merge_supports(&supports, &o.supports);
        }
        let parts: Vec<(NodeId, f64)> = outcomes.iter().map(|(o, w)| (o.root.unwrap(), *w)).collect();
        st.root = Some(if self.opts.optimize { factorize(&mut self.g, parts)? } else { self.g.sum(parts)? });
        st.scope.randoms = first;
        st.supports = supports;
        Ok(())
    }
}

/// Sum of the parts, with children shared by every part hoisted into an
/// enclosing product.
pub(crate) fn factorize(g: &mut SpeGraph, parts: Vec<(NodeId, f64)>) -> Result<NodeId> {
    if parts.len() < 2 {
        return g.sum(parts);
    }
    let factors = |g: &SpeGraph, n: NodeId| -> Vec<NodeId> {
        match g.node(n) {
            Node::Product { children } => children.clone(),
            _ => vec![n],
        }
    };
    let lists: Vec<Vec<NodeId>> = parts.iter().map(|(n, _)| factors(g, *n)).collect();
    let common: Vec<NodeId> =
        lists[0].iter().copied().filter(|c| lists[1..].iter().all(|l| l.contains(c))).collect();
    if common.is_empty() {
        return g.sum(parts);
    }
    let mut rest_parts = Vec::with_capacity(parts.len());
    for (l, (_, w)) in lists.iter().zip(&parts) {
        let rest: Vec<NodeId> = l.iter().copied().filter(|c| !common.contains(c)).collect();
        if rest.is_empty() {
            // every part has the same scope, so all of them are the common product
            return g.product(common);
        }
        rest_parts.push((g.product(rest)?, *w));
    }
    let inner = factorize(g, rest_parts)?;
    let mut kids = common;
    kids.push(inner);
    g.product(kids)
}

/// Equality event `x == v` for every entry of an assignment.
pub fn assignment_event(point: &BTreeMap<Var, Outcome>) -> Event {
    Event::and(
        point
            .iter()
            .map(|(v, o)| {
                let set = match o {
                    Outcome::Real(r) => Outcomes::point(*r),
                    Outcome::Str(s) => Outcomes::strings([s.clone()]),
                };
                Event::contains(Transform::Identity(v.clone()), set)
            })
            .collect(),
    )
}
