//! Events over program variables and the rewrites used by inference:
//! negation, disjunctive normal form, solved normal form and disjoining.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::outcomes::{fmt_real, Outcome, Outcomes};
use crate::transforms::Transform;
use crate::Var;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum Event {
    /// The transform of a variable takes a value in the set.
    Contains(Transform, Outcomes),
    And(Vec<Event>),
    Or(Vec<Event>),
}

/// A conjunction in solved form: one set per variable, none a union.
pub type Clause = BTreeMap<Var, Outcomes>;

/// Ordered map from variable to its defining transform. The first entry is
/// the leaf variable itself; later entries may refer only to earlier ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment(pub Vec<(Var, Transform)>);

impl Environment {
    pub fn new(x: &Var) -> Environment {
        Environment(vec![(x.clone(), Transform::Identity(x.clone()))])
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.iter().map(|(v, _)| v)
    }

    pub fn get(&self, v: &Var) -> Option<&Transform> {
        self.0.iter().find(|(w, _)| w == v).map(|(_, t)| t)
    }

    pub fn contains(&self, v: &Var) -> bool {
        self.get(v).is_some()
    }

    pub fn with(&self, v: Var, t: Transform) -> Environment {
        let mut e = self.clone();
        e.0.push((v, t));
        e
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Event {
    pub fn contains(t: Transform, v: Outcomes) -> Event {
        Event::Contains(t, v)
    }

    /// Conjunction; nested conjunctions are flattened and a single operand
    /// is returned as is.
    pub fn and(es: Vec<Event>) -> Event {
        let mut out = Vec::new();
        for e in es {
            match e {
                Event::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        assert!(!out.is_empty(), "empty conjunction");
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Event::And(out)
        }
    }

    /// Disjunction, flattened like [`Event::and`].
    pub fn or(es: Vec<Event>) -> Event {
        let mut out = Vec::new();
        for e in es {
            match e {
                Event::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        assert!(!out.is_empty(), "empty disjunction");
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Event::Or(out)
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Event::Contains(t, _) => t.collect_vars(out),
            Event::And(es) | Event::Or(es) => es.iter().for_each(|e| e.collect_vars(out)),
        }
    }

    pub fn subs(&self, y: &Var, t: &Transform) -> Event {
        match self {
            Event::Contains(a, v) => Event::Contains(a.subs(y, t), v.clone()),
            Event::And(es) => Event::And(es.iter().map(|e| e.subs(y, t)).collect()),
            Event::Or(es) => Event::Or(es.iter().map(|e| e.subs(y, t)).collect()),
        }
    }

    /// Values of `x` satisfying the event; literals on other variables
    /// contribute the empty set.
    pub fn eval_event(&self, x: &Var) -> Outcomes {
        match self {
            Event::Contains(t, v) => {
                let vs = t.vars();
                if vs.len() == 1 && vs.contains(x) {
                    t.preimg(v)
                } else {
                    Outcomes::Empty
                }
            }
            Event::And(es) => {
                let mut acc = es[0].eval_event(x);
                for e in &es[1..] {
                    if acc.is_empty() {
                        break;
                    }
                    acc = acc.intersection(&e.eval_event(x));
                }
                acc
            }
            Event::Or(es) => es
                .iter()
                .fold(Outcomes::Empty, |acc, e| acc.union(&e.eval_event(x))),
        }
    }

    /// Whether the event holds under an assignment. Evaluates transforms
    /// forward and never computes a preimage.
    pub fn holds(&self, lookup: &dyn Fn(&Var) -> Option<Outcome>) -> bool {
        match self {
            Event::Contains(Transform::Identity(x), v) => match lookup(x) {
                Some(o) => v.contains(&o),
                None => false,
            },
            Event::Contains(t, v) => match t.evaluate_with(lookup) {
                Some(r) => v.contains_real(r),
                None => false,
            },
            Event::And(es) => es.iter().all(|e| e.holds(lookup)),
            Event::Or(es) => es.iter().any(|e| e.holds(lookup)),
        }
    }

    /// Logical negation by De Morgan's laws. A literal `t in v` becomes
    /// `t in complement(v)`, split into one literal per union member; when
    /// `t` is not defined everywhere the undefined inputs are added too.
    pub fn negate(&self) -> Event {
        match self {
            Event::Contains(t, v) => {
                let mut lits: Vec<Event> = v
                    .complement()
                    .members()
                    .into_iter()
                    .map(|m| Event::Contains(t.clone(), m))
                    .collect();
                if !t.is_identity() {
                    let undefined = t.domainof().real_complement();
                    lits.extend(
                        undefined
                            .members()
                            .into_iter()
                            .map(|m| Event::Contains(Transform::Identity(t.var()), m)),
                    );
                }
                if lits.is_empty() {
                    Event::Contains(t.clone(), Outcomes::Empty)
                } else {
                    Event::or(lits)
                }
            }
            Event::And(es) => Event::or(es.iter().map(Event::negate).collect()),
            Event::Or(es) => Event::and(es.iter().map(Event::negate).collect()),
        }
    }

    /// Clauses of the disjunctive normal form, each a list of literals.
    pub fn dnf_clauses(&self) -> Vec<Vec<Event>> {
        match self {
            Event::Contains(..) => vec![vec![self.clone()]],
            Event::Or(es) => es.iter().flat_map(|e| e.dnf_clauses()).collect(),
            Event::And(es) => {
                let mut acc: Vec<Vec<Event>> = vec![vec![]];
                for e in es {
                    let cs = e.dnf_clauses();
                    let mut next = Vec::with_capacity(acc.len() * cs.len());
                    for a in &acc {
                        for c in &cs {
                            let mut clause = a.clone();
                            clause.extend(c.iter().cloned());
                            next.push(clause);
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }

    /// Disjunctive normal form: a literal, a conjunction of literals, or a
    /// disjunction of those.
    pub fn dnf(&self) -> Event {
        let clauses: Vec<Event> = self.dnf_clauses().into_iter().map(Event::and).collect();
        Event::or(clauses)
    }

    /// Solved normal form as clauses: every literal is on a bare variable,
    /// each clause mentions a variable at most once and no set is a union.
    /// Empty literals are kept so that the clause is visibly empty.
    pub fn normalized_clauses(&self) -> Vec<Clause> {
        let mut out = Vec::new();
        for clause in self.dnf_clauses() {
            // Solve each literal, then split unions into alternatives.
            let mut partial: Vec<Clause> = vec![Clause::new()];
            for lit in clause {
                let (x, w) = match &lit {
                    Event::Contains(t, v) => (t.var(), t.preimg(v)),
                    _ => unreachable!("dnf clause holds only literals"),
                };
                let mut next = Vec::new();
                for c in partial {
                    let merged = match c.get(&x) {
                        Some(prev) => prev.intersection(&w),
                        None => w.clone(),
                    };
                    let members = merged.members();
                    if members.is_empty() {
                        let mut c2 = c.clone();
                        c2.insert(x.clone(), Outcomes::Empty);
                        next.push(c2);
                    } else {
                        for m in members {
                            let mut c2 = c.clone();
                            c2.insert(x.clone(), m);
                            next.push(c2);
                        }
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        out
    }

    pub fn normalize(&self) -> Event {
        let cs = self.normalized_clauses();
        Event::or(cs.iter().map(clause_event).collect())
    }

    /// Rewrite the event as an event on the leaf variable alone by
    /// substituting environment entries from last to first.
    pub fn subsenv(&self, env: &Environment) -> Event {
        let mut e = self.clone();
        for (v, t) in env.0.iter().skip(1).rev() {
            e = e.subs(v, t);
        }
        e
    }

    /// Rewrite into a disjunction of pairwise disjoint solved conjunctions
    /// with the same meaning.
    pub fn disjoin(&self) -> Event {
        let cs = self.disjoint_clauses();
        if cs.is_empty() {
            let x = self.vars().into_iter().next().expect("event without variables");
            return Event::Contains(Transform::Identity(x), Outcomes::Empty);
        }
        Event::or(cs.iter().map(clause_event).collect())
    }

    /// The clauses of [`Event::disjoin`]; empty when the event is empty.
    pub fn disjoint_clauses(&self) -> Vec<Clause> {
        disjoin_clauses(self.normalized_clauses())
    }

    /// Number of top-level clauses.
    pub fn num_clauses(&self) -> usize {
        match self {
            Event::Or(es) => es.len(),
            _ => 1,
        }
    }
}

/// An event from a solved clause.
pub fn clause_event(c: &Clause) -> Event {
    Event::and(
        c.iter()
            .map(|(x, v)| Event::Contains(Transform::Identity(x.clone()), v.clone()))
            .collect(),
    )
}

pub fn clause_is_empty(c: &Clause) -> bool {
    c.values().any(Outcomes::is_empty)
}

/// Sufficient test for two solved clauses to denote disjoint sets: one is
/// visibly empty or they disagree on a shared variable.
pub fn clauses_disjoint(a: &Clause, b: &Clause) -> bool {
    if clause_is_empty(a) || clause_is_empty(b) {
        return true;
    }
    a.iter().any(|(x, v)| match b.get(x) {
        Some(w) => v.intersection(w).is_empty(),
        None => false,
    })
}

/// [`clauses_disjoint`] on events that are single solved conjunctions.
pub fn disjoint_p(a: &Event, b: &Event) -> bool {
    let ca = a.normalized_clauses();
    let cb = b.normalized_clauses();
    assert!(ca.len() == 1 && cb.len() == 1, "disjoint_p expects single conjunctions");
    clauses_disjoint(&ca[0], &cb[0])
}

/// `c` minus `d` as pairwise disjoint solved clauses: for each variable of
/// `d` in turn, the part of `c` outside `d` on that variable and inside
/// `d` on the ones before it. This is the negation of `d` expanded into
/// disjoint pieces, so no further disjoining is needed.
fn subtract(c: &Clause, d: &Clause) -> Vec<Clause> {
    let mut out = Vec::new();
    let mut cur = c.clone();
    for (v, dv) in d {
        let (outside, inside) = match cur.get(v) {
            Some(cv) => (cv.intersection(&dv.complement()), cv.intersection(dv)),
            None => (dv.complement(), dv.clone()),
        };
        for m in outside.members() {
            let mut piece = cur.clone();
            piece.insert(v.clone(), m);
            out.push(piece);
        }
        if inside.is_empty() {
            return out;
        }
        cur.insert(v.clone(), inside);
    }
    out
}

fn disjoin_clauses(cs: Vec<Clause>) -> Vec<Clause> {
    let cs: Vec<Clause> = cs.into_iter().filter(|c| !clause_is_empty(c)).collect();
    let mut out = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        let mut pieces = vec![c.clone()];
        for d in cs[..i].iter().filter(|d| !clauses_disjoint(d, c)) {
            pieces = pieces
                .into_iter()
                .flat_map(|p| if clauses_disjoint(&p, d) { vec![p] } else { subtract(&p, d) })
                .collect();
            if pieces.is_empty() {
                break;
            }
        }
        out.extend(pieces);
    }
    out
}

fn fmt_literal(t: &Transform, v: &Outcomes, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Outcomes::Empty => write!(f, "{t} in []"),
        Outcomes::FiniteStr { strings, complemented } => {
            let body: Vec<String> = strings.iter().map(|s| format!("{s:?}")).collect();
            match (strings.len(), complemented) {
                (1, false) => write!(f, "{t} == {}", body[0]),
                (_, false) => write!(f, "{t} in [{}]", body.join(", ")),
                (_, true) => write!(f, "not ({t} in [{}])", body.join(", ")),
            }
        }
        Outcomes::FiniteReal { points } => {
            let body: Vec<String> = points.iter().map(|r| fmt_real(*r)).collect();
            if points.len() == 1 {
                write!(f, "{t} == {}", body[0])
            } else {
                write!(f, "{t} in [{}]", body.join(", "))
            }
        }
        Outcomes::Interval(i) => {
            let lo_op = if i.lo_open { "<" } else { "<=" };
            let hi_op = if i.hi_open { "<" } else { "<=" };
            match (i.lo.is_finite(), i.hi.is_finite()) {
                (true, true) => write!(f, "{} {lo_op} {t} {hi_op} {}", fmt_real(i.lo), fmt_real(i.hi)),
                (true, false) => write!(f, "{t} {} {}", if i.lo_open { ">" } else { ">=" }, fmt_real(i.lo)),
                (false, true) => write!(f, "{t} {hi_op} {}", fmt_real(i.hi)),
                (false, false) => write!(f, "-inf < {t} < inf"),
            }
        }
        Outcomes::Union { members } => {
            let body: Vec<String> = members
                .iter()
                .map(|m| format!("({})", Event::Contains(t.clone(), m.clone())))
                .collect();
            write!(f, "{}", body.join(" or "))
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Contains(t, v) => fmt_literal(t, v, f),
            Event::And(es) => {
                let body: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", body.join(" and "))
            }
            Event::Or(es) => {
                let body: Vec<String> = es.iter().map(|e| format!("({e})")).collect();
                write!(f, "{}", body.join(" or "))
            }
        }
    }
}
