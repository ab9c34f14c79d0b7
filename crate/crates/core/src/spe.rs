//! Sum-product expressions stored as a hash-consed DAG, with the
//! well-formedness checker and the probability, density and sampling
//! queries.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::events::{Environment, Event};
use crate::outcomes::{Outcome, Outcomes};
use crate::transforms::Transform;
use crate::{Error, Result, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf { var: Var, dist: Distribution, env: Environment },
    /// Children with nonnegative weights; the weights need not sum to one.
    Sum { children: Vec<NodeId>, weights: Vec<f64> },
    Product { children: Vec<NodeId> },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Sum { children, .. } | Node::Product { children } => children,
        }
    }
}

/// Which well-formedness condition a node breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// The leaf environment must map the leaf variable to itself first.
    C1,
    /// Environment entries may only refer to earlier entries.
    C2,
    /// Product children have pairwise disjoint scopes.
    C3,
    /// Sum children have identical scopes.
    C4,
    /// Sum weights are nonnegative with a positive total.
    C5,
    Cycle,
    /// A child reference that does not name a node, or an empty node.
    Malformed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: NodeId,
    pub condition: Condition,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated at node {}: {}", self.condition, self.node, self.detail)
    }
}

/// Limits for queries.
#[derive(Clone, Copy, Debug)]
pub struct QueryOptions {
    /// Largest disjunction handled by inclusion-exclusion at a product.
    pub max_clauses: usize,
    pub memoize: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { max_clauses: 20, memoize: true }
    }
}

pub type Assignment = BTreeMap<Var, Outcome>;

/// Arena of immutable nodes. Children always precede their parents, so the
/// graph is acyclic by construction. With interning on, structurally equal
/// nodes are stored once.
#[derive(Clone, Debug)]
pub struct SpeGraph {
    nodes: Vec<Node>,
    scopes: Vec<Arc<BTreeSet<Var>>>,
    index: HashMap<String, NodeId>,
    interning: bool,
}

impl Default for SpeGraph {
    fn default() -> Self {
        SpeGraph::new()
    }
}

fn round_key(x: f64) -> String {
    format!("{x:.12e}")
}

impl SpeGraph {
    pub fn new() -> SpeGraph {
        SpeGraph { nodes: Vec::new(), scopes: Vec::new(), index: HashMap::new(), interning: true }
    }

    /// A graph that never shares nodes; every constructor call adds one.
    pub fn without_interning() -> SpeGraph {
        SpeGraph { interning: false, ..SpeGraph::new() }
    }

    pub fn interning(&self) -> bool {
        self.interning
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn scope(&self, id: NodeId) -> &BTreeSet<Var> {
        &self.scopes[id.0 as usize]
    }

    /// Number of nodes in the arena, reachable or not.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    fn key(&self, node: &Node) -> String {
        match node {
            Node::Leaf { var, dist, env } => format!("L|{var}|{}|{:?}", dist.key(), env.0),
            Node::Sum { children, weights } => {
                let z: f64 = weights.iter().sum();
                let body: Vec<String> = children
                    .iter()
                    .zip(weights)
                    .map(|(c, w)| format!("{}:{}", c.0, round_key(w / z)))
                    .collect();
                format!("S|{}", body.join(","))
            }
            Node::Product { children } => {
                let body: Vec<String> = children.iter().map(|c| c.0.to_string()).collect();
                format!("P|{}", body.join(","))
            }
        }
    }

    fn insert(&mut self, node: Node, scope: Arc<BTreeSet<Var>>) -> NodeId {
        let key = self.interning.then(|| self.key(&node));
        if let Some(k) = &key {
            if let Some(id) = self.index.get(k) {
                return *id;
            }
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.scopes.push(scope);
        if let Some(k) = key {
            self.index.insert(k, id);
        }
        id
    }

    /// Leaf whose environment holds only the variable itself.
    pub fn leaf(&mut self, var: Var, dist: Distribution) -> NodeId {
        let env = Environment::new(&var);
        self.leaf_with_env(var, dist, env).expect("trivial environment is well formed")
    }

    pub fn leaf_with_env(&mut self, var: Var, dist: Distribution, env: Environment) -> Result<NodeId> {
        check_env(&var, &env).map_err(|(c, d)| {
            Error::InvalidSpe(Violation { node: NodeId(self.nodes.len() as u32), condition: c, detail: d })
        })?;
        let scope = Arc::new(env.vars().cloned().collect());
        Ok(self.insert(Node::Leaf { var, dist, env }, scope))
    }

    /// Weighted sum. Zero-weight children are dropped, nested sums are
    /// flattened, repeated children merged, and a single survivor is
    /// returned directly.
    pub fn sum(&mut self, parts: Vec<(NodeId, f64)>) -> Result<NodeId> {
        let next = NodeId(self.nodes.len() as u32);
        let bad = |c: Condition, d: String| Error::InvalidSpe(Violation { node: next, condition: c, detail: d });
        let mut flat: BTreeMap<NodeId, f64> = BTreeMap::new();
        for (c, w) in parts {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(bad(Condition::C5, format!("weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            match self.node(c) {
                Node::Sum { children, weights } => {
                    let z: f64 = weights.iter().sum();
                    for (cc, ww) in children.iter().zip(weights) {
                        *flat.entry(*cc).or_insert(0.0) += w * ww / z;
                    }
                }
                _ => *flat.entry(c).or_insert(0.0) += w,
            }
        }
        if flat.is_empty() {
            return Err(bad(Condition::C5, "no child has positive weight".into()));
        }
        let children: Vec<NodeId> = flat.keys().copied().collect();
        let weights: Vec<f64> = flat.values().copied().collect();
        let scope = self.scopes[children[0].0 as usize].clone();
        for c in &children[1..] {
            if *self.scope(*c) != *scope {
                return Err(bad(Condition::C4, "children have different scopes".into()));
            }
        }
        if children.len() == 1 {
            return Ok(children[0]);
        }
        Ok(self.insert(Node::Sum { children, weights }, scope))
    }

    /// Product of children with disjoint scopes; nested products are
    /// flattened and a single child is returned directly.
    pub fn product(&mut self, parts: Vec<NodeId>) -> Result<NodeId> {
        let mut flat: Vec<NodeId> = Vec::new();
        for c in parts {
            match self.node(c) {
                Node::Product { children } => flat.extend(children.iter().copied()),
                _ => flat.push(c),
            }
        }
        flat.sort();
        flat.dedup();
        let mut scope = BTreeSet::new();
        for c in &flat {
            for v in self.scope(*c).iter() {
                if !scope.insert(v.clone()) {
                    return Err(Error::InvalidSpe(Violation {
                        node: NodeId(self.nodes.len() as u32),
                        condition: Condition::C3,
                        detail: format!("variable {v} appears in two children"),
                    }));
                }
            }
        }
        match flat.len() {
            0 => Err(Error::InvalidSpe(Violation {
                node: NodeId(self.nodes.len() as u32),
                condition: Condition::Malformed,
                detail: "empty product".into(),
            })),
            1 => Ok(flat[0]),
            _ => Ok(self.insert(Node::Product { children: flat }, Arc::new(scope))),
        }
    }

    /// Nodes reachable from `root`, children before parents.
    pub fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((n, done)) = stack.pop() {
            if done {
                order.push(n);
                continue;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.push((n, true));
            for c in self.node(n).children().iter().rev() {
                if !seen.contains(c) {
                    stack.push((*c, false));
                }
            }
        }
        order
    }

    /// Number of distinct nodes reachable from `root`.
    pub fn node_count(&self, root: NodeId) -> usize {
        self.reachable(root).len()
    }

    /// Number of nodes when shared subgraphs are counted once per use.
    pub fn tree_size(&self, root: NodeId) -> f64 {
        let mut size: HashMap<NodeId, f64> = HashMap::new();
        for n in self.reachable(root) {
            let s = 1.0 + self.node(n).children().iter().map(|c| size[c]).sum::<f64>();
            size.insert(n, s);
        }
        size[&root]
    }

    pub fn validate(&self, root: NodeId) -> std::result::Result<(), Violation> {
        validate_nodes(&self.nodes, root)
    }

    /// Copy the subgraph under `root` into `target`, returning the new root.
    pub fn copy_into(&self, root: NodeId, target: &mut SpeGraph) -> Result<NodeId> {
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        for n in self.reachable(root) {
            let id = match self.node(n) {
                Node::Leaf { var, dist, env } => target.leaf_with_env(var.clone(), dist.clone(), env.clone())?,
                Node::Sum { children, weights } => {
                    target.sum(children.iter().map(|c| map[c]).zip(weights.iter().copied()).collect())?
                }
                Node::Product { children } => target.product(children.iter().map(|c| map[c]).collect())?,
            };
            map.insert(n, id);
        }
        Ok(map[&root])
    }

    /// Build a graph from a raw node table after checking it.
    pub fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<(SpeGraph, NodeId)> {
        validate_nodes(&nodes, root).map_err(Error::InvalidSpe)?;
        let raw = SpeGraph {
            scopes: vec![Arc::new(BTreeSet::new()); nodes.len()],
            nodes,
            index: HashMap::new(),
            interning: false,
        };
        let mut g = SpeGraph::new();
        let r = raw.copy_into(root, &mut g)?;
        Ok((g, r))
    }

    /// Probability of an event.
    pub fn prob(&self, root: NodeId, e: &Event) -> Result<f64> {
        Ok(self.ln_prob(root, e)?.exp())
    }

    pub fn ln_prob(&self, root: NodeId, e: &Event) -> Result<f64> {
        self.ln_prob_with(root, e, QueryOptions::default())
    }

    pub fn ln_prob_with(&self, root: NodeId, e: &Event, opts: QueryOptions) -> Result<f64> {
        check_scope(self, root, e)?;
        let mut memo = ProbMemo::new(opts);
        memo.ln_prob(self, root, e)
    }

    /// Density of a conjunction of equality literals as `(degree, value)`.
    pub fn density(&self, root: NodeId, e: &Event) -> Result<(u32, f64)> {
        let (d, l) = self.ln_density(root, e)?;
        Ok((d, l.exp()))
    }

    pub fn ln_density(&self, root: NodeId, e: &Event) -> Result<(u32, f64)> {
        check_scope(self, root, e)?;
        let point = equality_point(e)?;
        let mut memo = HashMap::new();
        self.ln_density_rec(root, &point, &mut memo)
    }

    pub(crate) fn ln_density_rec(
        &self,
        n: NodeId,
        point: &BTreeMap<Var, Outcome>,
        memo: &mut HashMap<NodeId, (u32, f64)>,
    ) -> Result<(u32, f64)> {
        if let Some(r) = memo.get(&n) {
            return Ok(*r);
        }
        let scope = self.scope(n);
        let r = if !point.keys().any(|v| scope.contains(v)) {
            (0, 0.0)
        } else {
            match self.node(n) {
                Node::Leaf { var, dist, .. } => {
                    if let Some(v) = point.keys().find(|v| *v != var && scope.contains(*v)) {
                        return Err(Error::UnsupportedEvent(format!(
                            "equality on transformed variable {v} has measure zero"
                        )));
                    }
                    match point.get(var) {
                        Some(x) => dist.ln_density(x),
                        None => (0, 0.0),
                    }
                }
                Node::Sum { children, weights } => {
                    let mut parts: Vec<(u32, f64, f64)> = Vec::with_capacity(children.len());
                    for (c, w) in children.iter().zip(weights) {
                        let (d, l) = self.ln_density_rec(*c, point, memo)?;
                        parts.push((d, l, w.ln()));
                    }
                    let z = ln_sum_exp(&weights.iter().map(|w| w.ln()).collect::<Vec<_>>());
                    let positive: Vec<&(u32, f64, f64)> =
                        parts.iter().filter(|p| p.1 > f64::NEG_INFINITY && p.2 > f64::NEG_INFINITY).collect();
                    match positive.iter().map(|p| p.0).min() {
                        None => (parts.iter().map(|p| p.0).min().unwrap_or(0), f64::NEG_INFINITY),
                        Some(dstar) => {
                            let terms: Vec<f64> =
                                positive.iter().filter(|p| p.0 == dstar).map(|p| p.1 + p.2).collect();
                            (dstar, ln_sum_exp(&terms) - z)
                        }
                    }
                }
                Node::Product { children } => {
                    let mut deg = 0;
                    let mut val = 0.0;
                    for c in children {
                        let (d, l) = self.ln_density_rec(*c, point, memo)?;
                        deg += d;
                        val += l;
                    }
                    (deg, val)
                }
            }
        };
        memo.insert(n, r);
        Ok(r)
    }

    /// Draw one joint sample of every variable in scope. Transformed
    /// variables that are undefined at the drawn value are set to NaN.
    pub fn simulate<R: Rng + ?Sized>(&self, root: NodeId, rng: &mut R) -> Assignment {
        let mut out = Assignment::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            match self.node(n) {
                Node::Leaf { var, dist, env } => {
                    let x = dist.sample(rng.random::<f64>());
                    out.insert(var.clone(), x);
                    for (v, t) in env.0.iter().skip(1) {
                        let val = t
                            .evaluate_with(&|y: &Var| out.get(y).cloned())
                            .unwrap_or(f64::NAN);
                        out.insert(v.clone(), Outcome::Real(val));
                    }
                }
                Node::Sum { children, weights } => {
                    let z: f64 = weights.iter().sum();
                    let target = rng.random::<f64>() * z;
                    let mut acc = 0.0;
                    let mut pick = *children.last().unwrap();
                    for (c, w) in children.iter().zip(weights) {
                        acc += w;
                        if target < acc {
                            pick = *c;
                            break;
                        }
                    }
                    stack.push(pick);
                }
                Node::Product { children } => stack.extend(children.iter().rev().copied()),
            }
        }
        out
    }

    /// Samples restricted to the requested variables.
    pub fn simulate_vars<R: Rng + ?Sized>(
        &self,
        root: NodeId,
        vars: &[Var],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<Outcome>>> {
        for v in vars {
            if !self.scope(root).contains(v) {
                return Err(Error::Scope(format!("variable {v} is not in scope")));
            }
        }
        Ok((0..n)
            .map(|_| {
                let a = self.simulate(root, rng);
                vars.iter().map(|v| a[v].clone()).collect()
            })
            .collect())
    }
}

fn check_env(var: &Var, env: &Environment) -> std::result::Result<(), (Condition, String)> {
    match env.0.first() {
        Some((v, Transform::Identity(w))) if v == var && w == var => {}
        _ => return Err((Condition::C1, format!("environment must start with {var} -> {var}"))),
    }
    let mut seen: BTreeSet<Var> = BTreeSet::new();
    seen.insert(var.clone());
    for (v, t) in env.0.iter().skip(1) {
        let vs = t.vars();
        if vs.len() != 1 || !vs.iter().all(|x| seen.contains(x)) {
            return Err((Condition::C2, format!("{v} refers to an undefined or later variable")));
        }
        if !seen.insert(v.clone()) {
            return Err((Condition::C2, format!("{v} defined twice")));
        }
    }
    Ok(())
}

/// Check the well-formedness conditions on a raw node table.
pub fn validate_nodes(nodes: &[Node], root: NodeId) -> std::result::Result<(), Violation> {
    let get = |id: NodeId, from: NodeId| -> std::result::Result<&Node, Violation> {
        nodes.get(id.0 as usize).ok_or(Violation {
            node: from,
            condition: Condition::Malformed,
            detail: format!("reference to missing node {id}"),
        })
    };
    get(root, root)?;
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color = vec![0u8; nodes.len()];
    let mut scopes: HashMap<NodeId, BTreeSet<Var>> = HashMap::new();
    let mut stack = vec![(root, false)];
    while let Some((n, done)) = stack.pop() {
        let node = get(n, n)?;
        if done {
            color[n.0 as usize] = 2;
            let v = |c: Condition, d: String| Violation { node: n, condition: c, detail: d };
            let scope = match node {
                Node::Leaf { var, env, .. } => {
                    check_env(var, env).map_err(|(c, d)| v(c, d))?;
                    env.vars().cloned().collect()
                }
                Node::Sum { children, weights } => {
                    if children.is_empty() || children.len() != weights.len() {
                        return Err(v(Condition::Malformed, "sum arity mismatch".into()));
                    }
                    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                        return Err(v(Condition::C5, "negative or non-finite weight".into()));
                    }
                    if weights.iter().sum::<f64>() <= 0.0 {
                        return Err(v(Condition::C5, "weights sum to zero".into()));
                    }
                    let first = &scopes[&children[0]];
                    if children.iter().any(|c| scopes[c] != *first) {
                        return Err(v(Condition::C4, "children have different scopes".into()));
                    }
                    first.clone()
                }
                Node::Product { children } => {
                    if children.is_empty() {
                        return Err(v(Condition::Malformed, "empty product".into()));
                    }
                    let mut s = BTreeSet::new();
                    for c in children {
                        for x in &scopes[c] {
                            if !s.insert(x.clone()) {
                                return Err(v(Condition::C3, format!("variable {x} appears in two children")));
                            }
                        }
                    }
                    s
                }
            };
            scopes.insert(n, scope);
            continue;
        }
        match color[n.0 as usize] {
            2 => continue,
            1 => {
                return Err(Violation { node: n, condition: Condition::Cycle, detail: "node reaches itself".into() })
            }
            _ => {}
        }
        color[n.0 as usize] = 1;
        stack.push((n, true));
        for c in node.children() {
            get(*c, n)?;
            match color[c.0 as usize] {
                1 => {
                    return Err(Violation { node: n, condition: Condition::Cycle, detail: format!("edge to ancestor {c}") })
                }
                0 => stack.push((*c, false)),
                _ => {}
            }
        }
    }
    Ok(())
}

fn check_scope(g: &SpeGraph, root: NodeId, e: &Event) -> Result<()> {
    let scope = g.scope(root);
    for v in e.vars() {
        if !scope.contains(&v) {
            return Err(Error::Scope(format!("variable {v} is not in scope")));
        }
    }
    Ok(())
}

/// The assignment described by a conjunction of single-outcome equality
/// literals on distinct bare variables.
pub fn equality_point(e: &Event) -> Result<BTreeMap<Var, Outcome>> {
    let lits = match e {
        Event::And(es) => es.clone(),
        other => vec![other.clone()],
    };
    let mut out = BTreeMap::new();
    for l in lits {
        let bad = || Error::UnsupportedEvent(format!("{l} is not an equality on a variable"));
        let Event::Contains(Transform::Identity(x), v) = &l else {
            return Err(bad());
        };
        let o = if let Some(r) = v.as_single_real() {
            Outcome::Real(r)
        } else if let Some(s) = v.as_single_str() {
            Outcome::Str(s.to_string())
        } else {
            return Err(bad());
        };
        if out.insert(x.clone(), o).is_some() {
            return Err(Error::UnsupportedEvent(format!("variable {x} constrained twice")));
        }
    }
    Ok(out)
}

pub(crate) fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Largest clause count handled by inclusion-exclusion at a product;
/// longer disjunctions are summed over their disjoint form instead.
const INCLUSION_EXCLUSION_LIMIT: usize = 12;
const DISJOINT_CLAUSES_PER_LIMIT: usize = 50;

/// Per-query cache of log probabilities keyed by node and event text.
pub struct ProbMemo {
    opts: QueryOptions,
    cache: HashMap<(NodeId, String), f64>,
    /// Nodes touched by the probability recursion, when tracking is on.
    pub(crate) touched: Option<HashSet<NodeId>>,
}

impl ProbMemo {
    pub fn new(opts: QueryOptions) -> ProbMemo {
        ProbMemo { opts, cache: HashMap::new(), touched: None }
    }

    pub fn ln_prob(&mut self, g: &SpeGraph, n: NodeId, e: &Event) -> Result<f64> {
        if let Some(t) = self.touched.as_mut() {
            t.insert(n);
        }
        let key = self.opts.memoize.then(|| (n, format!("{e:?}")));
        if let Some(k) = &key {
            if let Some(v) = self.cache.get(k) {
                return Ok(*v);
            }
        }
        let r = match g.node(n) {
            Node::Leaf { var, dist, env } => {
                let v: Outcomes = e.subsenv(env).eval_event(var);
                dist.ln_prob(&v)
            }
            Node::Sum { children, weights } => {
                let mut terms = Vec::with_capacity(children.len());
                for (c, w) in children.iter().zip(weights) {
                    if *w > 0.0 {
                        terms.push(w.ln() + self.ln_prob(g, *c, e)?);
                    }
                }
                let z = ln_sum_exp(&weights.iter().map(|w| w.ln()).collect::<Vec<_>>());
                ln_sum_exp(&terms) - z
            }
            Node::Product { children } => self.ln_prob_product(g, children, e)?,
        };
        if let Some(k) = key {
            self.cache.insert(k, r);
        }
        Ok(r)
    }

    /// Log probability at a product of a conjunction given as one event
    /// per child; children without an event integrate to one.
    fn ln_prob_parts(&mut self, g: &SpeGraph, children: &[NodeId], parts: &BTreeMap<usize, Vec<Event>>) -> Result<f64> {
        let mut total = 0.0;
        for (i, es) in parts {
            let e = if es.len() == 1 { es[0].clone() } else { Event::and(es.clone()) };
            total += self.ln_prob(g, children[*i], &e)?;
            if total == f64::NEG_INFINITY {
                break;
            }
        }
        Ok(total)
    }

    /// Sum over the pairwise disjoint clauses of the event.
    fn ln_prob_disjoint(&mut self, g: &SpeGraph, children: &[NodeId], e: &Event) -> Result<f64> {
        let cs = e.disjoint_clauses();
        let limit = self.opts.max_clauses * DISJOINT_CLAUSES_PER_LIMIT;
        if cs.len() > limit {
            return Err(Error::TooManyClauses { clauses: cs.len(), limit });
        }
        let mut terms = Vec::with_capacity(cs.len());
        for c in &cs {
            let mut parts: BTreeMap<usize, Vec<Event>> = BTreeMap::new();
            for (v, set) in c {
                let i = children
                    .iter()
                    .position(|k| g.scope(*k).contains(v))
                    .ok_or_else(|| Error::Scope(format!("variable {v} is not in scope")))?;
                parts.entry(i).or_default().push(Event::Contains(Transform::Identity(v.clone()), set.clone()));
            }
            terms.push(self.ln_prob_parts(g, children, &parts)?);
        }
        Ok(ln_sum_exp(&terms))
    }

    fn ln_prob_product(&mut self, g: &SpeGraph, children: &[NodeId], e: &Event) -> Result<f64> {
        let vars = e.vars();
        let owner = |v: &Var| children.iter().position(|c| g.scope(*c).contains(v));
        if let Some(i) = children.iter().position(|c| vars.iter().all(|v| g.scope(*c).contains(v))) {
            return self.ln_prob(g, children[i], e);
        }
        // Split each DNF clause by child. Clauses confined to the same
        // single child are merged into one disjunction on that child.
        let mut clauses: Vec<BTreeMap<usize, Vec<Event>>> = Vec::new();
        let mut single: BTreeMap<usize, Vec<Event>> = BTreeMap::new();
        for c in e.dnf_clauses() {
            let mut parts: BTreeMap<usize, Vec<Event>> = BTreeMap::new();
            for lit in c {
                let v = lit.vars().into_iter().next().expect("literal without a variable");
                let i = owner(&v).ok_or_else(|| Error::Scope(format!("variable {v} is not in scope")))?;
                parts.entry(i).or_default().push(lit);
            }
            if parts.len() == 1 {
                let (i, lits) = parts.into_iter().next().unwrap();
                let conj = if lits.len() == 1 { lits.into_iter().next().unwrap() } else { Event::and(lits) };
                single.entry(i).or_default().push(conj);
            } else {
                clauses.push(parts);
            }
        }
        for (i, es) in single {
            let d = if es.len() == 1 { es.into_iter().next().unwrap() } else { Event::or(es) };
            clauses.push(BTreeMap::from([(i, vec![d])]));
        }
        if clauses.len() == 1 {
            return self.ln_prob_parts(g, children, &clauses[0]);
        }
        let l = clauses.len();
        if l > self.opts.max_clauses.min(INCLUSION_EXCLUSION_LIMIT) {
            return self.ln_prob_disjoint(g, children, e);
        }
        // Inclusion-exclusion over nonempty clause subsets.
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for mask in 1u64..(1u64 << l) {
            let mut parts: BTreeMap<usize, Vec<Event>> = BTreeMap::new();
            for (i, c) in clauses.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for (k, es) in c {
                        parts.entry(*k).or_default().extend(es.iter().cloned());
                    }
                }
            }
            let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
            let t = self.ln_prob_parts(g, children, &parts)?;
            if t > f64::NEG_INFINITY {
                terms.push((sign, t));
            }
        }
        let m = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return Ok(m);
        }
        let s: f64 = terms.iter().map(|(sg, t)| sg * (t - m).exp()).sum();
        Ok(if s <= 0.0 { f64::NEG_INFINITY } else { m + s.ln() })
    }
}
