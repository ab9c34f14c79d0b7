//! Exact conditioning on positive-probability events and on equality
//! constraints of probability zero.

use std::collections::{BTreeMap, HashMap};

use crate::distributions::Distribution;
use crate::events::{clause_event, Event};
use crate::outcomes::{Outcome, Outcomes};
use crate::spe::{equality_point, Node, NodeId, ProbMemo, QueryOptions, SpeGraph};
use crate::transforms::Transform;
use crate::{Error, Result, Var};

/// Condition the SPE at `root` on `e`, adding the posterior to the same
/// graph and returning its root. Unchanged subgraphs are shared.
pub fn condition(g: &mut SpeGraph, root: NodeId, e: &Event) -> Result<NodeId> {
    condition_with(g, root, e, QueryOptions::default())
}

pub fn condition_with(g: &mut SpeGraph, root: NodeId, e: &Event, opts: QueryOptions) -> Result<NodeId> {
    let mut c = Conditioner::new(g, opts);
    c.run(root, e)
}

/// Condition on a conjunction of equalities `x = value` on untransformed
/// variables, which may have probability zero.
pub fn condition0(g: &mut SpeGraph, root: NodeId, e: &Event) -> Result<NodeId> {
    let mut c = Conditioner::new(g, QueryOptions::default());
    c.run0(root, e)
}

/// Number of node visits made while conditioning on `e`. The graph is
/// left untouched; the work happens on a copy.
pub fn visit_count_probe(g: &SpeGraph, root: NodeId, e: &Event) -> Result<usize> {
    let mut h = g.clone();
    let mut c = Conditioner::new(&mut h, QueryOptions::default());
    c.run(root, e)?;
    Ok(c.visits)
}

/// State for one conditioning query: the probability cache, the result
/// cache and the visit counter.
struct Conditioner<'g> {
    g: &'g mut SpeGraph,
    prob: ProbMemo,
    memo: HashMap<(NodeId, String), NodeId>,
    memo0: HashMap<NodeId, NodeId>,
    memoize: bool,
    visits: usize,
}

impl<'g> Conditioner<'g> {
    fn new(g: &'g mut SpeGraph, opts: QueryOptions) -> Self {
        Conditioner {
            g,
            prob: ProbMemo::new(opts),
            memo: HashMap::new(),
            memo0: HashMap::new(),
            memoize: opts.memoize,
            visits: 0,
        }
    }

    fn run(&mut self, root: NodeId, e: &Event) -> Result<NodeId> {
        for v in e.vars() {
            if !self.g.scope(root).contains(&v) {
                return Err(Error::Scope(format!("variable {v} is not in scope")));
            }
        }
        if self.prob.ln_prob(self.g, root, e)? == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability);
        }
        // A conjunction is rewritten to its solved form, so that every node
        // receives the same restricted event along every path to it.
        let cs = e.disjoint_clauses();
        if cs.len() == 1 {
            return self.cond(root, &clause_event(&cs[0]));
        }
        self.cond(root, e)
    }

    fn ln_prob(&mut self, n: NodeId, e: &Event) -> Result<f64> {
        self.prob.ln_prob(self.g, n, e)
    }

    fn cond(&mut self, n: NodeId, e: &Event) -> Result<NodeId> {
        let key = self.memoize.then(|| (n, format!("{e:?}")));
        if let Some(k) = &key {
            if let Some(r) = self.memo.get(k) {
                return Ok(*r);
            }
        }
        self.visits += 1;
        let r = match self.g.node(n).clone() {
            Node::Leaf { var, dist, env } => {
                let v = e.subsenv(&env).eval_event(&var);
                let pieces = dist.restrict(&v);
                self.leaves(var, pieces, env)?
            }
            Node::Sum { children, weights } => {
                let mut parts = Vec::new();
                for (c, w) in children.iter().zip(&weights) {
                    let lp = self.ln_prob(*c, e)?;
                    if lp > f64::NEG_INFINITY && *w > 0.0 {
                        parts.push((*c, w.ln() + lp));
                    }
                }
                if parts.is_empty() {
                    return Err(Error::ZeroProbability);
                }
                let m = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
                let mut out = Vec::with_capacity(parts.len());
                for (c, lw) in parts {
                    out.push((self.cond(c, e)?, (lw - m).exp()));
                }
                self.g.sum(out)?
            }
            Node::Product { children } => self.cond_product(&children, e)?,
        };
        if let Some(k) = key {
            self.memo.insert(k, r);
        }
        Ok(r)
    }

    fn leaves(
        &mut self,
        var: Var,
        pieces: Vec<(Distribution, f64)>,
        env: crate::events::Environment,
    ) -> Result<NodeId> {
        if pieces.is_empty() {
            return Err(Error::ZeroProbability);
        }
        let mut out = Vec::with_capacity(pieces.len());
        for (d, p) in pieces {
            out.push((self.g.leaf_with_env(var.clone(), d, env.clone())?, p));
        }
        self.g.sum(out)
    }

    fn cond_product(&mut self, children: &[NodeId], e: &Event) -> Result<NodeId> {
        let vars = e.vars();
        // An event about a single child leaves the others alone.
        if let Some(i) = children
            .iter()
            .position(|c| vars.iter().all(|v| self.g.scope(*c).contains(v)))
        {
            let mut kids = children.to_vec();
            kids[i] = self.cond(children[i], e)?;
            return self.g.product(kids);
        }
        let clauses = e.disjoint_clauses();
        if clauses.len() == 1 {
            return self.cond_conj(children, &clause_literals(&clauses[0]));
        }
        let mut parts = Vec::new();
        for c in &clauses {
            let lits = clause_literals(c);
            let lp = self.ln_prob_conj(children, &lits)?;
            if lp > f64::NEG_INFINITY {
                parts.push((lits, lp));
            }
        }
        if parts.is_empty() {
            return Err(Error::ZeroProbability);
        }
        let m = parts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let mut out = Vec::with_capacity(parts.len());
        for (lits, lp) in parts {
            out.push((self.cond_conj(children, &lits)?, (lp - m).exp()));
        }
        self.g.sum(out)
    }

    fn owned(&self, c: NodeId, lits: &[Event]) -> Vec<Event> {
        let scope = self.g.scope(c);
        lits.iter()
            .filter(|l| l.vars().iter().all(|v| scope.contains(v)))
            .cloned()
            .collect()
    }

    fn ln_prob_conj(&mut self, children: &[NodeId], lits: &[Event]) -> Result<f64> {
        let mut total = 0.0;
        for c in children {
            let mine = self.owned(*c, lits);
            if !mine.is_empty() {
                total += self.ln_prob(*c, &Event::and(mine))?;
            }
        }
        Ok(total)
    }

    fn cond_conj(&mut self, children: &[NodeId], lits: &[Event]) -> Result<NodeId> {
        let mut kids = Vec::with_capacity(children.len());
        for c in children {
            let mine = self.owned(*c, lits);
            kids.push(if mine.is_empty() { *c } else { self.cond(*c, &Event::and(mine))? });
        }
        self.g.product(kids)
    }

    fn run0(&mut self, root: NodeId, e: &Event) -> Result<NodeId> {
        let (_, l) = self.g.ln_density(root, e)?;
        if l == f64::NEG_INFINITY {
            return Err(Error::ZeroDensity);
        }
        let point = equality_point(e)?;
        self.cond0(root, &point)
    }

    fn cond0(&mut self, n: NodeId, point: &BTreeMap<Var, Outcome>) -> Result<NodeId> {
        if let Some(r) = self.memo0.get(&n) {
            return Ok(*r);
        }
        self.visits += 1;
        let scope = self.g.scope(n).clone();
        let r = if !point.keys().any(|v| scope.contains(v)) {
            n
        } else {
            match self.g.node(n).clone() {
                Node::Leaf { var, dist, env } => match (&dist, point.get(&var)) {
                    (Distribution::Real { .. }, Some(Outcome::Real(r))) => {
                        self.g.leaf_with_env(var.clone(), Distribution::atomic(*r)?, env)?
                    }
                    (Distribution::Real { .. }, Some(Outcome::Str(s))) => {
                        return Err(Error::Undefined(format!("{var} is real-valued but compared with {s:?}")))
                    }
                    (_, Some(x)) => {
                        let v = match x {
                            Outcome::Real(r) => Outcomes::point(*r),
                            Outcome::Str(s) => Outcomes::strings([s.clone()]),
                        };
                        self.cond(n, &Event::contains(Transform::Identity(var.clone()), v))?
                    }
                    (_, None) => n,
                },
                Node::Sum { children, weights } => {
                    let mut dmemo = HashMap::new();
                    let mut parts = Vec::new();
                    for (c, w) in children.iter().zip(&weights) {
                        let (d, l) = self.g.ln_density_rec(*c, point, &mut dmemo)?;
                        if l > f64::NEG_INFINITY && *w > 0.0 {
                            parts.push((*c, d, w.ln() + l));
                        }
                    }
                    let Some(dstar) = parts.iter().map(|p| p.1).min() else {
                        return Err(Error::ZeroDensity);
                    };
                    parts.retain(|p| p.1 == dstar);
                    let m = parts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
                    let mut out = Vec::with_capacity(parts.len());
                    for (c, _, lw) in parts {
                        out.push((self.cond0(c, point)?, (lw - m).exp()));
                    }
                    self.g.sum(out)?
                }
                Node::Product { children } => {
                    let mut kids = Vec::with_capacity(children.len());
                    for c in children {
                        kids.push(self.cond0(c, point)?);
                    }
                    self.g.product(kids)?
                }
            }
        };
        self.memo0.insert(n, r);
        Ok(r)
    }
}

fn clause_literals(c: &crate::events::Clause) -> Vec<Event> {
    match clause_event(c) {
        Event::And(ls) => ls,
        l => vec![l],
    }
}
