//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use rand_distr::Distribution as _;

use spe_core::distributions::{Distribution, IntFamily, RealFamily};
use spe_core::events::{Environment, Event};
use spe_core::outcomes::{Interval, Outcome, Outcomes};
use spe_core::spe::{Node, NodeId, SpeGraph};
use spe_core::transforms::Transform;
use spe_core::translator::ast::{BinOp, CmpOp, Expr, Stmt, StmtKind, Target};
use spe_core::translator::{parse_expr, parse_program, translate_source, TranslateOptions, Translation};
use spe_core::Var;

pub const GPA: &str = include_str!("../../../../programs/indian_gpa.sppl");
pub const POLY: &str = include_str!("../../../../programs/poly_invert.sppl");
pub const HMM: &str = include_str!("../../../../programs/hmm.sppl");

pub fn hmm_source(n: usize) -> String {
    HMM.replace("n_step = 100", &format!("n_step = {n}"))
}

pub fn translate(src: &str, optimize: bool) -> Translation {
    translate_source(src, TranslateOptions { optimize, ..Default::default() }).unwrap()
}

// ---------------------------------------------------------------------------
// random SPEs

#[derive(Clone, Debug)]
pub enum Kind {
    Real,
    Nominal,
}

#[derive(Clone, Debug)]
pub struct VarSpec {
    pub var: Var,
    pub kind: Kind,
    pub derived: Option<(Var, Transform)>,
}

pub const LETTERS: [&str; 4] = ["a", "b", "c", "d"];

fn grid(rng: &mut dyn RngCore, lo: i32, hi: i32) -> f64 {
    rng.random_range(lo..=hi) as f64 * 0.5
}

fn real_dist(rng: &mut dyn RngCore) -> Distribution {
    loop {
        let family = match rng.random_range(0..4) {
            0 => RealFamily::Normal { loc: rng.random_range(-2.0..2.0), scale: rng.random_range(0.5..2.0) },
            1 => {
                let low = grid(rng, -4, 2);
                RealFamily::Uniform { low, high: low + rng.random_range(0.5..3.0) }
            }
            2 => RealFamily::Gamma { shape: rng.random_range(1.0..3.0), scale: rng.random_range(0.5..1.5) },
            _ => RealFamily::Beta { a: rng.random_range(0.5..3.0), b: rng.random_range(0.5..3.0) },
        };
        let d = if rng.random_bool(0.25) {
            let lo = grid(rng, -4, 2);
            Distribution::real_truncated(family, lo, lo + rng.random_range(0.5..4.0))
        } else {
            Distribution::real(family)
        };
        if let Ok(d) = d {
            return d;
        }
    }
}

fn int_dist(rng: &mut dyn RngCore) -> Distribution {
    loop {
        let family = match rng.random_range(0..3) {
            0 => IntFamily::Poisson { mu: rng.random_range(0.5..4.0) },
            1 => IntFamily::Binomial { n: rng.random_range(1..7), p: rng.random_range(0.1..0.9) },
            _ => IntFamily::Atomic { loc: grid(rng, -4, 8) },
        };
        let d = if rng.random_bool(0.25) && !matches!(family, IntFamily::Atomic { .. }) {
            let lo = rng.random_range(0..3) as f64;
            Distribution::int_truncated(
                family,
                Interval { lo, lo_open: rng.random_bool(0.5), hi: lo + rng.random_range(1..5) as f64, hi_open: rng.random_bool(0.5) },
            )
        } else {
            Distribution::int(family)
        };
        if let Ok(d) = d {
            return d;
        }
    }
}

fn nominal_dist(rng: &mut dyn RngCore) -> Distribution {
    let k = rng.random_range(1..=LETTERS.len());
    let mut ls = LETTERS.to_vec();
    ls.shuffle(rng);
    Distribution::strings(ls[..k].iter().map(|s| (s.to_string(), rng.random_range(0.1..1.0))).collect()).unwrap()
}

fn random_transform(rng: &mut dyn RngCore, x: &Var) -> Transform {
    wrap_transform(rng, Transform::Identity(x.clone()))
}

/// A total transform applied on top of `id`.
pub fn wrap_transform(rng: &mut dyn RngCore, id: Transform) -> Transform {
    match rng.random_range(0..5) {
        0 => Transform::poly(id, &[grid(rng, -2, 2), grid(rng, 1, 4) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }]).unwrap(),
        1 => Transform::poly(id, &[0.0, 0.0, 1.0]).unwrap(),
        2 => Transform::poly(id, &[0.0, -2.0, 0.0, 1.0]).unwrap(),
        3 => Transform::exp(id, std::f64::consts::E).unwrap(),
        _ => Transform::abs(id),
    }
}

/// Variables `X0..` with random kinds, some with a derived variable `D_i`.
pub fn random_specs(rng: &mut dyn RngCore, n: usize) -> Vec<VarSpec> {
    (0..n)
        .map(|i| {
            let var = Var::new(&format!("X{i}"));
            let kind = if rng.random_bool(0.25) { Kind::Nominal } else { Kind::Real };
            let derived = match kind {
                Kind::Real if rng.random_bool(0.35) => {
                    Some((Var::new(&format!("D{i}")), random_transform(rng, &var)))
                }
                _ => None,
            };
            VarSpec { var, kind, derived }
        })
        .collect()
}

fn random_leaf(rng: &mut dyn RngCore, g: &mut SpeGraph, s: &VarSpec) -> NodeId {
    let dist = match s.kind {
        Kind::Nominal => nominal_dist(rng),
        Kind::Real if rng.random_bool(0.6) => real_dist(rng),
        Kind::Real => int_dist(rng),
    };
    let mut env = Environment::new(&s.var);
    if let Some((d, t)) = &s.derived {
        env = env.with(d.clone(), t.clone());
    }
    g.leaf_with_env(s.var.clone(), dist, env).unwrap()
}

fn random_node(rng: &mut dyn RngCore, g: &mut SpeGraph, specs: &[VarSpec], depth: usize) -> NodeId {
    if specs.len() == 1 && (depth == 0 || rng.random_bool(0.4)) {
        return random_leaf(rng, g, &specs[0]);
    }
    if specs.len() > 1 && (depth == 0 || rng.random_bool(0.5)) {
        let mut shuffled = specs.to_vec();
        shuffled.shuffle(rng);
        let k = rng.random_range(2..=shuffled.len());
        let mut cuts: Vec<usize> = (1..shuffled.len()).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<usize> = cuts[..k - 1].to_vec();
        cuts.sort();
        let mut groups = Vec::new();
        let mut start = 0;
        for c in cuts.into_iter().chain([shuffled.len()]) {
            groups.push(shuffled[start..c].to_vec());
            start = c;
        }
        let kids = groups.iter().map(|gr| random_node(rng, g, gr, depth.saturating_sub(1))).collect();
        return g.product(kids).unwrap();
    }
    let n = rng.random_range(2..=3);
    let parts = (0..n)
        .map(|_| (random_node(rng, g, specs, depth.saturating_sub(1)), rng.random_range(0.1..1.0)))
        .collect();
    g.sum(parts).unwrap()
}

/// A random well-formed SPE over at most `max_vars` variables with depth
/// at most `max_depth` above the leaves.
pub fn random_spe(rng: &mut dyn RngCore, max_vars: usize, max_depth: usize) -> (SpeGraph, NodeId, Vec<VarSpec>) {
    let n = rng.random_range(1..=max_vars);
    let specs = random_specs(rng, n);
    let mut g = SpeGraph::new();
    let depth = rng.random_range(1..=max_depth);
    let root = random_node(rng, &mut g, &specs, depth);
    (g, root, specs)
}

// ---------------------------------------------------------------------------
// random events

pub fn real_set(rng: &mut dyn RngCore) -> Outcomes {
    let a = grid(rng, -6, 10);
    match rng.random_range(0..6) {
        0 => Outcomes::interval(f64::NEG_INFINITY, true, a, rng.random_bool(0.5)),
        1 => Outcomes::interval(a, rng.random_bool(0.5), f64::INFINITY, true),
        2 | 3 => {
            let b = a + grid(rng, 1, 6);
            Outcomes::interval(a, rng.random_bool(0.5), b, rng.random_bool(0.5))
        }
        4 => Outcomes::points((0..rng.random_range(1..=3)).map(|_| rng.random_range(-2..6) as f64)),
        _ => Outcomes::interval(a, false, a + 1.0, true).union(&Outcomes::point(rng.random_range(-2..6) as f64)),
    }
}

pub fn string_set(rng: &mut dyn RngCore) -> Outcomes {
    let k = rng.random_range(1..=3);
    let ls: Vec<&str> = LETTERS.choose_multiple(rng, k).copied().collect();
    if rng.random_bool(0.3) {
        Outcomes::strings_except(ls)
    } else {
        Outcomes::strings(ls)
    }
}

/// A literal on one of the variables (base or derived), occasionally on a
/// transform of a real variable.
pub fn random_literal(rng: &mut dyn RngCore, specs: &[VarSpec]) -> Event {
    let s = specs.choose(rng).unwrap();
    match s.kind {
        Kind::Nominal => Event::contains(Transform::Identity(s.var.clone()), string_set(rng)),
        Kind::Real => {
            let v = match &s.derived {
                Some((d, _)) if rng.random_bool(0.4) => d.clone(),
                _ => s.var.clone(),
            };
            let t = if rng.random_bool(0.2) {
                random_transform(rng, &v)
            } else {
                Transform::Identity(v)
            };
            Event::contains(t, real_set(rng))
        }
    }
}

pub fn random_event(rng: &mut dyn RngCore, specs: &[VarSpec], depth: usize) -> Event {
    if depth == 0 || rng.random_bool(0.3) {
        return random_literal(rng, specs);
    }
    match rng.random_range(0..5) {
        0 | 1 => Event::and(vec![random_event(rng, specs, depth - 1), random_event(rng, specs, depth - 1)]),
        2 | 3 => Event::or(vec![random_event(rng, specs, depth - 1), random_event(rng, specs, depth - 1)]),
        _ => random_event(rng, specs, depth - 1).negate(),
    }
}

/// A conjunction with one interval or string-set literal per base variable.
pub fn random_conjunction(rng: &mut dyn RngCore, vars: &[(Var, Kind)]) -> Event {
    Event::and(
        vars.iter()
            .map(|(v, k)| {
                let set = match k {
                    Kind::Nominal => string_set(rng),
                    Kind::Real => {
                        let a = grid(rng, -8, 4);
                        Outcomes::interval(a, rng.random_bool(0.5), a + grid(rng, 2, 12), rng.random_bool(0.5))
                    }
                };
                Event::contains(Transform::Identity(v.clone()), set)
            })
            .collect(),
    )
}

/// A union of `m` random boxes over the variables `vars`.
pub fn random_boxes(rng: &mut dyn RngCore, vars: &[Var], m: usize) -> Event {
    Event::or(
        (0..m)
            .map(|_| {
                Event::and(
                    vars.iter()
                        .filter(|_| rng.random_bool(0.8))
                        .cloned()
                        .collect::<Vec<_>>()
                        .into_iter()
                        .map(|v| {
                            let a = grid(rng, -4, 4);
                            let b = a + grid(rng, 1, 6);
                            Event::contains(
                                Transform::Identity(v),
                                Outcomes::interval(a, rng.random_bool(0.5), b, rng.random_bool(0.5)),
                            )
                        })
                        .chain(std::iter::once(Event::contains(
                            Transform::Identity(vars[0].clone()),
                            Outcomes::interval(-100.0, false, 100.0, false),
                        )))
                        .collect(),
                )
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Monte Carlo

pub fn holds(e: &Event, a: &BTreeMap<Var, Outcome>) -> bool {
    e.holds(&|v: &Var| a.get(v).cloned())
}

pub fn samples(g: &SpeGraph, root: NodeId, n: usize, rng: &mut dyn RngCore) -> Vec<BTreeMap<Var, Outcome>> {
    (0..n).map(|_| g.simulate(root, rng)).collect()
}

/// Whether `p` is within `k` standard errors of the frequency `hits / n`.
pub fn within_se(p: f64, hits: usize, n: usize, k: f64, slack: f64) -> bool {
    let phat = hits as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).max(0.0).sqrt();
    (phat - p).abs() <= k * se + slack
}

// ---------------------------------------------------------------------------
// forward-sampling interpreter for source programs

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Str(String),
    Bool(bool),
    List(Vec<Value>),
    Dict(Vec<(Value, Value)>),
    Array(String),
    Dist(String, Vec<Value>, Vec<(String, Value)>),
}

impl Value {
    fn num(&self) -> f64 {
        match self {
            Value::Num(x) => *x,
            Value::Bool(b) => *b as u8 as f64,
            other => panic!("not a number: {other:?}"),
        }
    }

    fn truthy(&self) -> bool {
        match self {
            Value::Num(x) => *x != 0.0 && !x.is_nan(),
            Value::Bool(b) => *b,
            Value::Str(s) => !s.is_empty(),
            other => panic!("not a condition: {other:?}"),
        }
    }
}

pub struct Interp<'r> {
    pub env: HashMap<String, Value>,
    rng: &'r mut dyn RngCore,
}

/// Run the program once; `None` when a `condition` fails.
pub fn run_program(prog: &[Stmt], rng: &mut dyn RngCore) -> Option<HashMap<String, Value>> {
    let mut it = Interp { env: HashMap::new(), rng };
    it.block(prog).then_some(it.env)
}

/// Evaluate event text in a sampled environment.
pub fn event_holds(env: &HashMap<String, Value>, e: &Expr) -> bool {
    eval_in(env, e).truthy()
}

fn cmp(op: CmpOp, a: &Value, b: &Value) -> bool {
    use CmpOp::*;
    match op {
        In => matches!(b, Value::List(xs) if xs.iter().any(|x| eq(a, x))),
        NotIn => match b {
            Value::List(xs) => {
                if let Value::Num(x) = a {
                    if x.is_nan() {
                        return false;
                    }
                }
                !xs.iter().any(|x| eq(a, x))
            }
            _ => panic!("'in' needs a list"),
        },
        Eq => eq(a, b),
        Ne => match (a, b) {
            (Value::Num(x), _) | (_, Value::Num(x)) if x.is_nan() => false,
            _ => !eq(a, b),
        },
        _ => {
            let (x, y) = match (a, b) {
                (Value::Str(_), _) | (_, Value::Str(_)) => return false,
                _ => (a.num(), b.num()),
            };
            match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                _ => x >= y,
            }
        }
    }
}

fn eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Num(_) | Value::Bool(_), Value::Num(_) | Value::Bool(_)) => a.num() == b.num(),
        _ => a == b,
    }
}

impl Interp<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> bool {
        stmts.iter().all(|s| self.stmt(s))
    }

    fn target(&self, t: &Target) -> String {
        match &t.index {
            None => t.name.clone(),
            Some(i) => format!("{}[{}]", t.name, self.eval(i).num() as i64),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> bool {
        match &s.kind {
            StmtKind::Pass => true,
            StmtKind::Sample(t, e) | StmtKind::Assign(t, e) => {
                let name = self.target(t);
                let v = match self.eval(e) {
                    Value::Dist(f, args, kw) => self.draw(&f, &args, &kw),
                    Value::Array(_) => Value::Array(t.name.clone()),
                    v => v,
                };
                self.env.insert(name, v);
                true
            }
            StmtKind::Condition(e) => self.eval(e).truthy(),
            StmtKind::Constrain(_) => panic!("constrain cannot be simulated"),
            StmtKind::If { branches, orelse } => {
                for (test, body) in branches {
                    if self.eval(test).truthy() {
                        return self.block(body);
                    }
                }
                match orelse {
                    Some(b) => self.block(b),
                    None => true,
                }
            }
            StmtKind::For { var, iter, body } => {
                let Value::List(xs) = self.eval(iter) else { panic!("for over non-list") };
                for x in xs {
                    self.env.insert(var.clone(), x);
                    if !self.block(body) {
                        return false;
                    }
                }
                true
            }
            StmtKind::Switch { subject, binder, values, body } => {
                let subj = self.eval(subject);
                let Value::List(vals) = self.eval(values) else { panic!("switch over non-list") };
                for v in vals {
                    let hit = match &v {
                        Value::List(_) => cmp(CmpOp::In, &subj, &v),
                        _ => eq(&subj, &v),
                    };
                    if hit {
                        let saved = self.env.insert(binder.clone(), v);
                        let ok = self.block(body);
                        match saved {
                            Some(old) => self.env.insert(binder.clone(), old),
                            None => self.env.remove(binder),
                        };
                        return ok;
                    }
                }
                true
            }
        }
    }

    fn draw(&mut self, f: &str, args: &[Value], kw: &[(String, Value)]) -> Value {
        let names: &[&str] = match f {
            "normal" => &["loc", "scale"],
            "uniform" => &["low", "high"],
            "gamma" => &["shape", "scale"],
            "beta" => &["a", "b"],
            "poisson" => &["mu"],
            "binomial" => &["n", "p"],
            "bernoulli" => &["p"],
            "atom" | "atomic" => &["loc"],
            "choice" => &["weights"],
            _ => panic!("unknown distribution {f}"),
        };
        let mut p: HashMap<String, Value> = names.iter().zip(args).map(|(n, a)| (n.to_string(), a.clone())).collect();
        for (k, v) in kw {
            p.insert(k.clone(), v.clone());
        }
        if f == "uniform" && (p.contains_key("loc") || p.contains_key("scale")) {
            let loc = p.get("loc").map(Value::num).unwrap_or(0.0);
            let scale = p.get("scale").map(Value::num).unwrap_or(1.0);
            p.insert("low".into(), Value::Num(loc));
            p.insert("high".into(), Value::Num(loc + scale));
        }
        let g = |k: &str, d: f64| p.get(k).map(Value::num).unwrap_or(d);
        let lo = p.get("lo").map(Value::num);
        let hi = p.get("hi").map(Value::num);
        let lo_open = p.get("lo_open").map(Value::truthy).unwrap_or(false);
        let hi_open = p.get("hi_open").map(Value::truthy).unwrap_or(false);
        let ok = |x: f64| {
            let above = match lo {
                None => true,
                Some(l) => x > l || (!lo_open && x == l),
            };
            let below = match hi {
                None => true,
                Some(h) => x < h || (!hi_open && x == h),
            };
            above && below
        };
        for _ in 0..1_000_000 {
            let x = match f {
                "normal" => rand_distr::Normal::new(g("loc", 0.0), g("scale", 1.0)).unwrap().sample(self.rng),
                "uniform" => {
                    let (a, b) = (g("low", 0.0), g("high", 1.0));
                    a + (b - a) * self.rng.random::<f64>()
                }
                "gamma" => rand_distr::Gamma::new(g("shape", 1.0), g("scale", 1.0)).unwrap().sample(self.rng),
                "beta" => rand_distr::Beta::new(g("a", 1.0), g("b", 1.0)).unwrap().sample(self.rng),
                "poisson" => rand_distr::Poisson::new(g("mu", 1.0)).unwrap().sample(self.rng),
                "binomial" => {
                    rand_distr::Binomial::new(g("n", 1.0) as u64, g("p", 0.5)).unwrap().sample(self.rng) as f64
                }
                "bernoulli" => (self.rng.random::<f64>() < g("p", 0.5)) as u8 as f64,
                "atom" | "atomic" => match &p["loc"] {
                    Value::Str(s) => return Value::Str(s.clone()),
                    v => v.num(),
                },
                "choice" => {
                    let Value::Dict(kv) = &p["weights"] else { panic!("choice needs a dict") };
                    let total: f64 = kv.iter().map(|(_, w)| w.num()).sum();
                    let mut u = self.rng.random::<f64>() * total;
                    for (k, w) in kv {
                        u -= w.num();
                        if u < 0.0 {
                            return k.clone();
                        }
                    }
                    return kv.last().unwrap().0.clone();
                }
                _ => unreachable!(),
            };
            if ok(x) {
                return Value::Num(x);
            }
        }
        panic!("truncation rejected every draw");
    }

    pub fn eval(&self, e: &Expr) -> Value {
        eval_in(&self.env, e)
    }
}

fn eval_in(env: &HashMap<String, Value>, e: &Expr) -> Value {
    let ev = |x: &Expr| eval_in(env, x);
    {
        match e {
            Expr::Num(x) => Value::Num(*x),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Name(n) => match env.get(n) {
                Some(v) => v.clone(),
                None if n == "inf" => Value::Num(f64::INFINITY),
                None if n == "pi" => Value::Num(std::f64::consts::PI),
                None => panic!("undefined {n}"),
            },
            Expr::Index(a, i) => {
                let i = ev(i);
                match ev(a) {
                    Value::List(xs) => xs[i.num() as usize].clone(),
                    Value::Dict(kv) => kv.into_iter().find(|(k, _)| eq(k, &i)).unwrap().1,
                    Value::Array(name) => env[&format!("{name}[{}]", i.num() as i64)].clone(),
                    other => panic!("cannot index {other:?}"),
                }
            }
            Expr::List(xs) => Value::List(xs.iter().map(|x| ev(x)).collect()),
            Expr::Dict(kv) => Value::Dict(kv.iter().map(|(k, v)| (ev(k), ev(v))).collect()),
            Expr::Call { func, args, kwargs } => {
                let args: Vec<Value> = args.iter().map(|a| ev(a)).collect();
                let x = || args[0].num();
                match func.as_str() {
                    "sqrt" => Value::Num(x().sqrt()),
                    "exp" => Value::Num(x().exp()),
                    "abs" => Value::Num(x().abs()),
                    "log" if args.len() == 2 => Value::Num(x().ln() / args[1].num().ln()),
                    "log" => Value::Num(x().ln()),
                    "root" => Value::Num(if x() < 0.0 { f64::NAN } else { x().powf(1.0 / args[1].num()) }),
                    "range" => {
                        let ns: Vec<f64> = args.iter().map(Value::num).collect();
                        let (a, b) = if ns.len() == 1 { (0.0, ns[0]) } else { (ns[0], ns[1]) };
                        Value::List((a as i64..b as i64).map(|k| Value::Num(k as f64)).collect())
                    }
                    "array" => Value::Array(String::new()),
                    f => Value::Dist(
                        f.to_string(),
                        args,
                        kwargs.iter().map(|(k, v)| (k.clone(), ev(v))).collect(),
                    ),
                }
            }
            Expr::Neg(a) => Value::Num(-ev(a).num()),
            Expr::Binary(op, a, b) => {
                let (a, b) = (ev(a), ev(b));
                if let (BinOp::Add, Value::Str(x), Value::Str(y)) = (op, &a, &b) {
                    return Value::Str(format!("{x}{y}"));
                }
                let (x, y) = (a.num(), b.num());
                Value::Num(match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => {
                        if y.fract() != 0.0 && x < 0.0 {
                            f64::NAN
                        } else {
                            x.powf(y)
                        }
                    }
                })
            }
            Expr::Compare(first, rest) => {
                let mut prev = ev(first);
                for (op, e) in rest {
                    let cur = ev(e);
                    if !cmp(*op, &prev, &cur) {
                        return Value::Bool(false);
                    }
                    prev = cur;
                }
                Value::Bool(true)
            }
            Expr::Not(a) => Value::Bool(!ev(a).truthy()),
            Expr::And(xs) => Value::Bool(xs.iter().all(|x| ev(x).truthy())),
            Expr::Or(xs) => Value::Bool(xs.iter().any(|x| ev(x).truthy())),
        }
    }
}

// ---------------------------------------------------------------------------
// random programs

fn pick<'a>(rng: &mut dyn RngCore, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).unwrap()
}

fn real_dist_text(rng: &mut dyn RngCore) -> String {
    match rng.random_range(0..6) {
        0 => format!("normal({}, {})", grid(rng, -4, 4), grid(rng, 1, 4)),
        1 => {
            let a = grid(rng, -4, 2);
            format!("uniform({a}, {})", a + grid(rng, 1, 6))
        }
        2 => format!("gamma(shape={}, scale={})", grid(rng, 2, 6), grid(rng, 1, 3)),
        3 => format!("poisson(mu={})", grid(rng, 1, 8)),
        4 => format!("binomial(n={}, p=0.{})", rng.random_range(1..6), rng.random_range(1..9)),
        _ => format!("normal({}, 1, lo={})", grid(rng, -2, 2), grid(rng, -4, 0)),
    }
}

fn test_on(rng: &mut dyn RngCore, real: &str, nominal: &str) -> String {
    match rng.random_range(0..4) {
        0 => format!("{real} < {}", grid(rng, -2, 4)),
        1 => format!("{nominal} in ['a', 'b']"),
        2 => format!("({real} > {}) and ({nominal} != 'c')", grid(rng, -2, 2)),
        _ => format!("({nominal} == 'a') or ({real}**2 < {})", grid(rng, 1, 8)),
    }
}

/// A random program exercising sampling, transforms, branching, switch,
/// loops and conditioning, with the names of its scalar variables.
pub fn random_program(rng: &mut dyn RngCore) -> (String, Vec<(String, bool)>) {
    let mut src = String::new();
    let mut vars: Vec<(String, bool)> = Vec::new();
    src += &format!("A ~ {}\n", real_dist_text(rng));
    src += &format!("B ~ bernoulli(p=0.{})\n", rng.random_range(1..9));
    src += &format!(
        "C ~ choice({{'a': {}, 'b': {}, 'c': {}}})\n",
        rng.random_range(1..5),
        rng.random_range(1..5),
        rng.random_range(1..5)
    );
    vars.extend([("A".into(), true), ("B".into(), true), ("C".into(), false)]);
    if rng.random_bool(0.7) {
        let t = pick(rng, &["2*A - 1", "A**2 + 1", "-A**3 + A**2 + 6*A", "abs(A)", "exp(A/4)", "1/(A**2 + 1)"]);
        src += &format!("D = {t}\n");
        vars.push(("D".into(), true));
    }
    let test = test_on(rng, "A", "C");
    src += &format!("if {test}:\n    E ~ {}\n", real_dist_text(rng));
    if rng.random_bool(0.5) {
        src += &format!("elif C == 'b':\n    E ~ {}\n", real_dist_text(rng));
    }
    src += &format!("else:\n    E ~ {}\n", real_dist_text(rng));
    vars.push(("E".into(), true));
    src += &format!(
        "switch B cases (b in [0, 1]):\n    F ~ normal({}*b, {})\n",
        grid(rng, 1, 8),
        grid(rng, 1, 3)
    );
    vars.push(("F".into(), true));
    if rng.random_bool(0.5) {
        src += "M = array(2)\nfor i in range(2):\n";
        src += &format!("    M[i] ~ poisson(mu={} + i)\n", grid(rng, 1, 4));
        vars.extend([("M[0]".into(), true), ("M[1]".into(), true)]);
    }
    if rng.random_bool(0.4) {
        src += &format!("G ~ normal(B*{}, 1)\n", grid(rng, 2, 8));
        vars.push(("G".into(), true));
    }
    if rng.random_bool(0.5) {
        src += &format!("condition(({}) or (E > {}))\n", test_on(rng, "A", "C"), grid(rng, -4, 2));
    }
    (src, vars)
}

/// Random event text over program variables.
pub fn random_event_text(rng: &mut dyn RngCore, vars: &[(String, bool)], depth: usize) -> String {
    random_event_text_with(rng, vars, &["a", "b", "c"], depth)
}

/// Random event text whose nominal literals use the given strings.
pub fn random_event_text_with(rng: &mut dyn RngCore, vars: &[(String, bool)], strings: &[&str], depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.35) {
        let (v, real) = vars.choose(rng).unwrap();
        if !real {
            let a = pick(rng, strings);
            let b = pick(rng, strings);
            return match rng.random_range(0..3) {
                0 => format!("{v} == '{a}'"),
                1 => format!("{v} in ['{a}', '{b}']"),
                _ => format!("{v} != '{a}'"),
            };
        }
        let a = grid(rng, -4, 8);
        return match rng.random_range(0..7) {
            0 => format!("{v} < {a}"),
            1 => format!("{v} >= {a}"),
            2 => format!("{a} < {v} <= {}", a + grid(rng, 1, 6)),
            3 => format!("{v} in [0, 1, 3]"),
            4 => format!("{v}**2 <= {}", grid(rng, 1, 10)),
            5 => format!("2*{v} + 1 > {a}"),
            _ => format!("{v} == {}", rng.random_range(0..4)),
        };
    }
    let a = random_event_text_with(rng, vars, strings, depth - 1);
    let b = random_event_text_with(rng, vars, strings, depth - 1);
    match rng.random_range(0..3) {
        0 => format!("({a}) and ({b})"),
        1 => format!("({a}) or ({b})"),
        _ => format!("not ({a})"),
    }
}

pub fn parse(text: &str) -> Expr {
    parse_expr(text).unwrap()
}

pub fn program(text: &str) -> Vec<Stmt> {
    parse_program(text).unwrap()
}

/// Normalized weights of a sum node.
pub fn sum_weights(g: &SpeGraph, n: NodeId) -> Option<(Vec<NodeId>, Vec<f64>)> {
    match g.node(n) {
        Node::Sum { children, weights } => {
            let z: f64 = weights.iter().sum();
            Some((children.clone(), weights.iter().map(|w| w / z).collect()))
        }
        _ => None,
    }
}

pub fn scope_vars(g: &SpeGraph, n: NodeId) -> BTreeSet<Var> {
    g.scope(n).clone()
}
