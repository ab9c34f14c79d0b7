//! SPEs back to programs, graph optimization, and event text.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use super::eval::{split_indexed, Scope, Val};
use super::parser::parse_expr;
use super::translate::factorize;
use crate::distributions::{Distribution, IntFamily, RealFamily};
use crate::events::Event;
use crate::outcomes::Interval;
use crate::spe::{Node, NodeId, SpeGraph};
use crate::transforms::Transform;
use crate::{Error, Result, Var};

/// Parse event text such as `X > 1 and Y in ['a', 'b']` over `vars`.
pub fn parse_event(text: &str, vars: &BTreeSet<Var>) -> Result<Event> {
    let e = parse_expr(text)?;
    let scope = Scope::for_vars(vars);
    match scope.truth(scope.eval(&e)?)? {
        Val::Event(ev) => Ok(ev),
        _ => Err(Error::Translate(format!("{text:?} does not mention a random variable"))),
    }
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn bool_text(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

/// Source text of a distribution, with truncation arguments when its
/// support is narrower than the family's.
fn dist_text(d: &Distribution) -> Result<String> {
    match d {
        Distribution::Real { family, support } => {
            let (name, args) = match *family {
                RealFamily::Normal { loc, scale } => ("normal", format!("loc={}, scale={}", num(loc), num(scale))),
                RealFamily::Uniform { low, high } => ("uniform", format!("low={}, high={}", num(low), num(high))),
                RealFamily::Gamma { shape, scale } => {
                    ("gamma", format!("shape={}, scale={}", num(shape), num(scale)))
                }
                RealFamily::Beta { a, b } => ("beta", format!("a={}, b={}", num(a), num(b))),
            };
            let mut s = format!("{name}({args}");
            let Distribution::Real { support: natural, .. } = Distribution::real(family.clone())? else {
                unreachable!()
            };
            if support.lo != natural.lo {
                write!(s, ", lo={}", num(support.lo)).unwrap();
            }
            if support.hi != natural.hi {
                write!(s, ", hi={}", num(support.hi)).unwrap();
            }
            s.push(')');
            Ok(s)
        }
        Distribution::Int { family, support } => {
            let mut s = match *family {
                IntFamily::Poisson { mu } => format!("poisson(mu={}", num(mu)),
                IntFamily::Binomial { n, p } => format!("binomial(n={n}, p={}", num(p)),
                IntFamily::Atomic { loc } => format!("atomic(loc={}", num(loc)),
            };
            let full = Interval { lo: f64::NEG_INFINITY, lo_open: true, hi: f64::INFINITY, hi_open: true };
            if support.lo.is_finite() && *support != full {
                write!(s, ", lo={}, lo_open={}", num(support.lo), bool_text(support.lo_open)).unwrap();
            }
            if support.hi.is_finite() && *support != full {
                write!(s, ", hi={}, hi_open={}", num(support.hi), bool_text(support.hi_open)).unwrap();
            }
            s.push(')');
            Ok(s)
        }
        Distribution::Str { weights } => {
            let items: Vec<String> = weights.iter().map(|(k, w)| format!("{}: {}", quote(k), num(*w))).collect();
            Ok(format!("choice({{{}}})", items.join(", ")))
        }
    }
}

fn transform_text(t: &Transform) -> Result<String> {
    fn has_piecewise(t: &Transform) -> bool {
        match t {
            Transform::Piecewise(_) => true,
            Transform::Identity(_) => false,
            Transform::Reciprocal(u) | Transform::Abs(u) => has_piecewise(u),
            Transform::Root(u, _) | Transform::Exp(u, _) | Transform::Log(u, _) | Transform::Poly(u, _) => {
                has_piecewise(u)
            }
        }
    }
    if has_piecewise(t) {
        return Err(Error::Translate(format!("piecewise transform {t} has no source form")));
    }
    Ok(t.to_string())
}

struct Writer<'a> {
    g: &'a SpeGraph,
    taken: BTreeSet<String>,
    next: usize,
}

impl Writer<'_> {
    fn fresh(&mut self) -> String {
        loop {
            let name = format!("_b{}", self.next);
            self.next += 1;
            if !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                return name;
            }
        }
    }

    /// Emit statements for `n` at `indent`; returns the selector variables
    /// introduced.
    fn emit(&mut self, n: NodeId, indent: usize, out: &mut String) -> Result<Vec<String>> {
        let pad = " ".repeat(indent);
        match self.g.node(n) {
            Node::Leaf { var, dist, env } => {
                writeln!(out, "{pad}{var} ~ {}", dist_text(dist)?).unwrap();
                for (v, t) in env.0.iter().skip(1) {
                    writeln!(out, "{pad}{v} = {}", transform_text(t)?).unwrap();
                }
                Ok(vec![])
            }
            Node::Product { children } => {
                let mut sel = Vec::new();
                for c in children.clone() {
                    sel.extend(self.emit(c, indent, out)?);
                }
                Ok(sel)
            }
            Node::Sum { children, weights } => {
                let (children, weights) = (children.clone(), weights.clone());
                let total: f64 = weights.iter().sum();
                let b = self.fresh();
                let items: Vec<String> =
                    weights.iter().enumerate().map(|(i, w)| format!("'{i}': {}", num(w / total))).collect();
                writeln!(out, "{pad}{b} ~ choice({{{}}})", items.join(", ")).unwrap();
                let mut bodies = Vec::new();
                let mut all: Vec<String> = Vec::new();
                for c in &children {
                    let mut body = String::new();
                    let sel = self.emit(*c, indent + 4, &mut body)?;
                    all.extend(sel.iter().cloned());
                    bodies.push((body, sel));
                }
                for (i, (body, sel)) in bodies.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "elif" };
                    writeln!(out, "{pad}{kw} {b} == '{i}':").unwrap();
                    out.push_str(body);
                    for s in &all {
                        if !sel.contains(s) {
                            writeln!(out, "{pad}    {s} ~ atomic('0')").unwrap();
                        }
                    }
                }
                all.insert(0, b);
                Ok(all)
            }
        }
    }
}

/// Program whose translation has the same distribution as the SPE rooted
/// at `root`. Sums become `choice` selectors named `_b0`, `_b1`, ...
pub fn spe_to_program(g: &SpeGraph, root: NodeId) -> Result<String> {
    g.validate(root).map_err(Error::InvalidSpe)?;
    let mut taken = BTreeSet::new();
    let mut arrays: BTreeMap<String, usize> = BTreeMap::new();
    for n in g.reachable(root) {
        if let Node::Leaf { env, .. } = g.node(n) {
            for v in env.vars() {
                taken.insert(v.to_string());
                if let Some((base, idx)) = split_indexed(v.as_str()) {
                    let e = arrays.entry(base.to_string()).or_insert(0);
                    *e = (*e).max(idx + 1);
                }
            }
        }
    }
    let mut out = String::new();
    for (a, n) in &arrays {
        writeln!(out, "{a} = array({n})").unwrap();
    }
    let mut w = Writer { g, taken, next: 0 };
    w.emit(root, 0, &mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeReport {
    /// Distinct nodes reachable from the root.
    pub nodes_before: usize,
    pub nodes_after: usize,
    /// Node counts with shared nodes copied.
    pub tree_before: f64,
    pub tree_after: f64,
}

/// Deduplicate the graph, and factor common children out of sums when that
/// makes it smaller.
pub fn optimize(g: &SpeGraph, root: NodeId) -> Result<(SpeGraph, NodeId, OptimizeReport)> {
    let mut dedup = SpeGraph::new();
    let r1 = g.copy_into(root, &mut dedup)?;
    let mut factored = SpeGraph::new();
    let r2 = factor_into(&dedup, r1, &mut factored)?;
    let (out, r) = if factored.node_count(r2) < dedup.node_count(r1) { (factored, r2) } else { (dedup, r1) };
    let report = OptimizeReport {
        nodes_before: g.node_count(root),
        nodes_after: out.node_count(r),
        tree_before: g.tree_size(root),
        tree_after: out.tree_size(r),
    };
    Ok((out, r, report))
}

fn factor_into(g: &SpeGraph, root: NodeId, target: &mut SpeGraph) -> Result<NodeId> {
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();
    for n in g.reachable(root) {
        let m = match g.node(n) {
            Node::Leaf { var, dist, env } => target.leaf_with_env(var.clone(), dist.clone(), env.clone())?,
            Node::Product { children } => target.product(children.iter().map(|c| map[c]).collect())?,
            Node::Sum { children, weights } => {
                let parts = children.iter().zip(weights).map(|(c, w)| (map[c], *w)).collect();
                factorize(target, parts)?
            }
        };
        map.insert(n, m);
    }
    Ok(map[&root])
}
