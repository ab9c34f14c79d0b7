//! Evaluation of source expressions to constants, transforms of random
//! variables, events and distributions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{BinOp, CmpOp, Expr};
use super::RestrictionViolation;
use crate::distributions::{Distribution, IntFamily, RealFamily};
use crate::events::Event;
use crate::outcomes::{Interval, Outcomes};
use crate::transforms::Transform;
use crate::{Error, Result, Var};

#[derive(Clone, Debug, PartialEq)]
pub enum Val {
    Num(f64),
    Str(String),
    Bool(bool),
    List(Vec<Val>),
    Dict(Vec<(Val, Val)>),
    /// Declared array of random variables with its length.
    Array(String, usize),
    Rand(Transform),
    Event(Event),
    Dist(Distribution),
}

impl Val {
    fn kind(&self) -> &'static str {
        match self {
            Val::Num(_) => "number",
            Val::Str(_) => "string",
            Val::Bool(_) => "boolean",
            Val::List(_) => "list",
            Val::Dict(_) => "dict",
            Val::Array(..) => "array",
            Val::Rand(_) => "random variable",
            Val::Event(_) => "event",
            Val::Dist(_) => "distribution",
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Val::Num(_) | Val::Str(_) | Val::Bool(_) => true,
            Val::List(xs) => xs.iter().all(Val::is_constant),
            Val::Dict(kv) => kv.iter().all(|(k, v)| k.is_constant() && v.is_constant()),
            _ => false,
        }
    }

    /// Source text of a constant, used when substituting into code.
    pub fn to_expr(&self) -> Option<Expr> {
        Some(match self {
            Val::Num(x) => Expr::Num(*x),
            Val::Str(s) => Expr::Str(s.clone()),
            Val::Bool(b) => Expr::Bool(*b),
            Val::List(xs) => Expr::List(xs.iter().map(Val::to_expr).collect::<Option<_>>()?),
            Val::Dict(kv) => Expr::Dict(
                kv.iter()
                    .map(|(k, v)| Some((k.to_expr()?, v.to_expr()?)))
                    .collect::<Option<_>>()?,
            ),
            _ => return None,
        })
    }
}

fn translate_err(msg: impl Into<String>) -> Error {
    Error::Translate(msg.into())
}

pub(crate) fn restriction(rule: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Restriction(vec![RestrictionViolation { rule: rule.into(), line, message: msg.into() }])
}

/// Names visible while evaluating: constants (including loop variables and
/// switch binders) shadow random variables.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub consts: HashMap<String, Val>,
    pub randoms: BTreeSet<Var>,
    pub line: usize,
}

impl Scope {
    /// A scope whose random variables are `vars`; names of the form
    /// `A[i]` make `A` an array.
    pub fn for_vars<'a>(vars: impl IntoIterator<Item = &'a Var>) -> Scope {
        let mut s = Scope::default();
        let mut arrays: BTreeMap<String, usize> = BTreeMap::new();
        for v in vars {
            s.randoms.insert(v.clone());
            if let Some((base, idx)) = split_indexed(v.as_str()) {
                let e = arrays.entry(base.to_string()).or_insert(0);
                *e = (*e).max(idx + 1);
            }
        }
        for (a, n) in arrays {
            s.consts.insert(a.clone(), Val::Array(a, n));
        }
        s
    }

    pub fn eval(&self, e: &Expr) -> Result<Val> {
        match e {
            Expr::Num(x) => Ok(Val::Num(*x)),
            Expr::Str(s) => Ok(Val::Str(s.clone())),
            Expr::Bool(b) => Ok(Val::Bool(*b)),
            Expr::Name(n) => self.lookup(n),
            Expr::Index(a, i) => {
                let base = self.eval(a)?;
                let idx = self.eval(i)?;
                self.index(base, idx)
            }
            Expr::List(xs) => Ok(Val::List(xs.iter().map(|x| self.eval(x)).collect::<Result<_>>()?)),
            Expr::Dict(kv) => Ok(Val::Dict(
                kv.iter()
                    .map(|(k, v)| Ok((self.eval(k)?, self.eval(v)?)))
                    .collect::<Result<_>>()?,
            )),
            Expr::Call { func, args, kwargs } => {
                let args: Vec<Val> = args.iter().map(|a| self.eval(a)).collect::<Result<_>>()?;
                let kwargs: Vec<(String, Val)> =
                    kwargs.iter().map(|(k, v)| Ok((k.clone(), self.eval(v)?))).collect::<Result<_>>()?;
                self.call(func, args, kwargs)
            }
            Expr::Neg(a) => self.mul(Val::Num(-1.0), self.eval(a)?),
            Expr::Binary(op, a, b) => {
                let (a, b) = (self.eval(a)?, self.eval(b)?);
                match op {
                    BinOp::Add => self.add(a, b),
                    BinOp::Sub => {
                        let nb = self.mul(Val::Num(-1.0), b)?;
                        self.add(a, nb)
                    }
                    BinOp::Mul => self.mul(a, b),
                    BinOp::Div => self.div(a, b),
                    BinOp::Pow => self.pow(a, b),
                }
            }
            Expr::Compare(first, rest) => {
                let mut prev = self.eval(first)?;
                let mut parts = Vec::new();
                for (op, e) in rest {
                    let cur = self.eval(e)?;
                    parts.push(self.compare(*op, &prev, &cur)?);
                    prev = cur;
                }
                self.conj(parts)
            }
            Expr::Not(a) => match self.truth(self.eval(a)?)? {
                Val::Bool(b) => Ok(Val::Bool(!b)),
                Val::Event(e) => Ok(Val::Event(e.negate())),
                _ => unreachable!(),
            },
            Expr::And(xs) => {
                let vs = xs.iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
                self.conj(vs)
            }
            Expr::Or(xs) => {
                let mut events = Vec::new();
                for x in xs {
                    match self.truth(self.eval(x)?)? {
                        Val::Bool(true) => return Ok(Val::Bool(true)),
                        Val::Bool(false) => {}
                        Val::Event(e) => events.push(e),
                        _ => unreachable!(),
                    }
                }
                Ok(if events.is_empty() { Val::Bool(false) } else { Val::Event(Event::or(events)) })
            }
        }
    }

    fn lookup(&self, n: &str) -> Result<Val> {
        if let Some(v) = self.consts.get(n) {
            return Ok(v.clone());
        }
        let var = Var::new(n);
        if self.randoms.contains(&var) {
            return Ok(Val::Rand(Transform::Identity(var)));
        }
        match n {
            "inf" => Ok(Val::Num(f64::INFINITY)),
            "pi" => Ok(Val::Num(std::f64::consts::PI)),
            _ => Err(translate_err(format!("line {}: undefined name {n:?}", self.line))),
        }
    }

    fn index(&self, base: Val, idx: Val) -> Result<Val> {
        match (base, idx) {
            (Val::List(xs), Val::Num(i)) => {
                let k = as_index(i, xs.len()).ok_or_else(|| {
                    translate_err(format!("line {}: index {i} out of range for list of {}", self.line, xs.len()))
                })?;
                Ok(xs[k].clone())
            }
            (Val::Dict(kv), k) => kv
                .into_iter()
                .find(|(key, _)| *key == k)
                .map(|(_, v)| v)
                .ok_or_else(|| translate_err(format!("line {}: missing key", self.line))),
            (Val::Array(name, n), Val::Num(i)) => {
                let k = as_index(i, n).ok_or_else(|| {
                    translate_err(format!("line {}: index {i} out of range for array {name} of {n}", self.line))
                })?;
                let var = Var::indexed(&name, k as i64);
                if self.randoms.contains(&var) {
                    Ok(Val::Rand(Transform::Identity(var)))
                } else {
                    Err(translate_err(format!("line {}: {var} is used before it is defined", self.line)))
                }
            }
            (Val::Rand(_), _) | (_, Val::Rand(_)) => Err(restriction(
                "R4",
                self.line,
                "indices must be constants; switch over a finite-support variable instead",
            )),
            (b, i) => Err(translate_err(format!("line {}: cannot index {} with {}", self.line, b.kind(), i.kind()))),
        }
    }

    fn num(&self, v: &Val, what: &str) -> Result<f64> {
        match v {
            Val::Num(x) => Ok(*x),
            Val::Bool(b) => Ok(*b as u8 as f64),
            Val::Rand(_) => Err(restriction(
                "R4",
                self.line,
                format!("parameter {what} depends on a random variable without finite support"),
            )),
            other => Err(translate_err(format!("line {}: {what} must be a number, not a {}", self.line, other.kind()))),
        }
    }

    fn univariate(&self, a: &Transform, b: &Transform) -> Result<()> {
        if a.vars() != b.vars() {
            return Err(restriction(
                "R3",
                self.line,
                format!("transform combines variables {} and {}", a.var(), b.var()),
            ));
        }
        Ok(())
    }

    fn from_poly(&self, inner: Transform, c: Vec<f64>) -> Result<Val> {
        let c = crate::poly::strip(&c);
        match c.len() {
            0 => Ok(Val::Num(0.0)),
            1 => Ok(Val::Num(c[0])),
            _ => Ok(Val::Rand(Transform::poly(inner, &c)?)),
        }
    }

    fn add(&self, a: Val, b: Val) -> Result<Val> {
        match (a, b) {
            (Val::Num(x), Val::Num(y)) => Ok(Val::Num(x + y)),
            (Val::Str(x), Val::Str(y)) => Ok(Val::Str(x + &y)),
            (Val::Rand(t), Val::Num(k)) | (Val::Num(k), Val::Rand(t)) => {
                let (inner, mut c) = as_poly(t);
                c[0] += k;
                self.from_poly(inner, c)
            }
            (Val::Rand(t), Val::Rand(u)) => {
                self.univariate(&t, &u)?;
                let (i1, c1) = as_poly(t);
                let (i2, c2) = as_poly(u);
                if i1 != i2 {
                    return Err(translate_err(format!("line {}: cannot add {i1} and {i2}", self.line)));
                }
                let n = c1.len().max(c2.len());
                let c: Vec<f64> =
                    (0..n).map(|k| c1.get(k).unwrap_or(&0.0) + c2.get(k).unwrap_or(&0.0)).collect();
                self.from_poly(i1, c)
            }
            (a, b) => Err(translate_err(format!("line {}: cannot add {} and {}", self.line, a.kind(), b.kind()))),
        }
    }

    fn mul(&self, a: Val, b: Val) -> Result<Val> {
        match (a, b) {
            (Val::Num(x), Val::Num(y)) => Ok(Val::Num(x * y)),
            (Val::Rand(t), Val::Num(k)) | (Val::Num(k), Val::Rand(t)) => {
                if k == 0.0 {
                    return Ok(Val::Num(0.0));
                }
                let (inner, c) = as_poly(t);
                self.from_poly(inner, c.iter().map(|x| x * k).collect())
            }
            (Val::Rand(t), Val::Rand(u)) => {
                self.univariate(&t, &u)?;
                let (i1, c1) = as_poly(t);
                let (i2, c2) = as_poly(u);
                if i1 != i2 {
                    return Err(translate_err(format!("line {}: cannot multiply {i1} and {i2}", self.line)));
                }
                self.from_poly(i1, conv(&c1, &c2))
            }
            (a, b) => {
                Err(translate_err(format!("line {}: cannot multiply {} and {}", self.line, a.kind(), b.kind())))
            }
        }
    }

    fn div(&self, a: Val, b: Val) -> Result<Val> {
        match (a, b) {
            (a, Val::Num(y)) => {
                if y == 0.0 {
                    return Err(translate_err(format!("line {}: division by zero", self.line)));
                }
                self.mul(a, Val::Num(1.0 / y))
            }
            (Val::Num(x), Val::Rand(t)) => self.mul(Val::Num(x), Val::Rand(Transform::reciprocal(t))),
            (Val::Rand(t), Val::Rand(u)) => {
                self.univariate(&t, &u)?;
                Err(translate_err(format!("line {}: cannot divide {t} by {u}", self.line)))
            }
            (a, b) => Err(translate_err(format!("line {}: cannot divide {} by {}", self.line, a.kind(), b.kind()))),
        }
    }

    fn pow(&self, a: Val, b: Val) -> Result<Val> {
        match (a, b) {
            (Val::Num(x), Val::Num(y)) => Ok(Val::Num(x.powf(y))),
            (Val::Rand(t), Val::Num(n)) => {
                if n == 0.0 {
                    return Ok(Val::Num(1.0));
                }
                if n.fract() == 0.0 && n.abs() <= 64.0 {
                    let (inner, c) = as_poly(t);
                    let mut acc = vec![1.0];
                    for _ in 0..(n.abs() as u32) {
                        acc = conv(&acc, &c);
                    }
                    let p = self.from_poly(inner, acc)?;
                    return match p {
                        Val::Rand(p) if n < 0.0 => Ok(Val::Rand(Transform::reciprocal(p))),
                        other => Ok(other),
                    };
                }
                let inv = 1.0 / n;
                if inv > 0.0 && (inv - inv.round()).abs() < 1e-9 {
                    return Ok(Val::Rand(Transform::root(t, inv.round() as u32)?));
                }
                Err(translate_err(format!("line {}: unsupported exponent {n}", self.line)))
            }
            (Val::Num(b), Val::Rand(t)) => Ok(Val::Rand(Transform::exp(t, b)?)),
            (Val::Rand(t), Val::Rand(u)) => {
                self.univariate(&t, &u)?;
                Err(translate_err(format!("line {}: cannot raise {t} to {u}", self.line)))
            }
            (a, b) => Err(translate_err(format!("line {}: cannot raise {} to {}", self.line, a.kind(), b.kind()))),
        }
    }

    /// Booleans stay booleans; anything random becomes an event.
    pub fn truth(&self, v: Val) -> Result<Val> {
        match v {
            Val::Bool(_) | Val::Event(_) => Ok(v),
            Val::Num(x) => Ok(Val::Bool(x != 0.0)),
            Val::Str(s) => Ok(Val::Bool(!s.is_empty())),
            Val::Rand(t) => Ok(Val::Event(Event::contains(t, Outcomes::point(0.0).complement()))),
            other => Err(translate_err(format!("line {}: a {} is not a condition", self.line, other.kind()))),
        }
    }

    fn conj(&self, vs: Vec<Val>) -> Result<Val> {
        let mut events = Vec::new();
        for v in vs {
            match self.truth(v)? {
                Val::Bool(false) => return Ok(Val::Bool(false)),
                Val::Bool(true) => {}
                Val::Event(e) => events.push(e),
                _ => unreachable!(),
            }
        }
        Ok(if events.is_empty() { Val::Bool(true) } else { Val::Event(Event::and(events)) })
    }

    fn compare(&self, op: CmpOp, a: &Val, b: &Val) -> Result<Val> {
        use CmpOp::*;
        if let (Val::Rand(t), Val::Rand(u)) = (a, b) {
            return Err(restriction("R3", self.line, format!("comparison between {t} and {u}")));
        }
        if let (Some(_), Val::Rand(_)) = (a.is_constant().then_some(()), b) {
            let flipped = match op {
                Lt => Gt,
                Le => Ge,
                Gt => Lt,
                Ge => Le,
                Eq | Ne => op,
                In | NotIn => {
                    return Err(translate_err(format!("line {}: 'in' needs a list on the right", self.line)))
                }
            };
            return self.compare(flipped, b, a);
        }
        match (a, b) {
            (Val::Rand(t), c) => {
                let set = match (op, c) {
                    (Lt, Val::Num(x)) => Outcomes::interval(f64::NEG_INFINITY, true, *x, true),
                    (Le, Val::Num(x)) => Outcomes::interval(f64::NEG_INFINITY, true, *x, false),
                    (Gt, Val::Num(x)) => Outcomes::interval(*x, true, f64::INFINITY, true),
                    (Ge, Val::Num(x)) => Outcomes::interval(*x, false, f64::INFINITY, true),
                    (Eq | Ne, c) => {
                        let s = self.member_set(std::slice::from_ref(c))?;
                        if op == Ne {
                            s.complement()
                        } else {
                            s
                        }
                    }
                    (In | NotIn, Val::List(xs)) => {
                        let s = self.member_set(xs)?;
                        if op == NotIn {
                            s.complement()
                        } else {
                            s
                        }
                    }
                    (_, c) => {
                        return Err(translate_err(format!(
                            "line {}: cannot compare a random variable with a {}",
                            self.line,
                            c.kind()
                        )))
                    }
                };
                Ok(Val::Event(Event::contains(t.clone(), set)))
            }
            (Val::Num(x), Val::Num(y)) => Ok(Val::Bool(match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                Ge => x >= y,
                Eq => x == y,
                Ne => x != y,
                In | NotIn => {
                    return Err(translate_err(format!("line {}: 'in' needs a list on the right", self.line)))
                }
            })),
            (x, Val::List(xs)) if matches!(op, In | NotIn) => Ok(Val::Bool(xs.contains(x) == (op == In))),
            (x, y) if matches!(op, Eq | Ne) && x.is_constant() && y.is_constant() => {
                Ok(Val::Bool((x == y) == (op == Eq)))
            }
            (x, y) => Err(translate_err(format!("line {}: cannot compare {} with {}", self.line, x.kind(), y.kind()))),
        }
    }

    fn member_set(&self, xs: &[Val]) -> Result<Outcomes> {
        let mut reals = Vec::new();
        let mut strs = Vec::new();
        for x in xs {
            match x {
                Val::Num(r) => reals.push(*r),
                Val::Bool(b) => reals.push(*b as u8 as f64),
                Val::Str(s) => strs.push(s.clone()),
                other => {
                    return Err(translate_err(format!("line {}: a {} cannot be an outcome", self.line, other.kind())))
                }
            }
        }
        let mut s = Outcomes::points(reals);
        if !strs.is_empty() {
            s = s.union(&Outcomes::strings(strs));
        }
        Ok(s)
    }

    fn call(&self, func: &str, args: Vec<Val>, kwargs: Vec<(String, Val)>) -> Result<Val> {
        let unary = |args: &[Val]| -> Result<Val> {
            if args.len() != 1 || !kwargs.is_empty() {
                return Err(translate_err(format!("line {}: {func} takes one argument", self.line)));
            }
            Ok(args[0].clone())
        };
        match func {
            "sqrt" | "exp" | "log" | "abs" | "root" if matches!(args.first(), Some(Val::Rand(_))) => {
                let Some(Val::Rand(t)) = args.first().cloned() else { unreachable!() };
                let extra = match args.get(1) {
                    Some(v) => Some(self.num(v, "second argument")?),
                    None => None,
                };
                let t = match (func, extra) {
                    ("sqrt", None) => Transform::root(t, 2)?,
                    ("exp", None) => Transform::exp(t, std::f64::consts::E)?,
                    ("log", None) => Transform::log(t, std::f64::consts::E)?,
                    ("log", Some(b)) => Transform::log(t, b)?,
                    ("abs", None) => Transform::abs(t),
                    ("root", Some(n)) if n >= 1.0 && n.fract() == 0.0 => Transform::root(t, n as u32)?,
                    _ => return Err(translate_err(format!("line {}: bad arguments to {func}", self.line))),
                };
                if args.len() > 2 {
                    return Err(translate_err(format!("line {}: too many arguments to {func}", self.line)));
                }
                Ok(Val::Rand(t))
            }
            "sqrt" => Ok(Val::Num(self.num(&unary(&args)?, "argument")?.sqrt())),
            "exp" => Ok(Val::Num(self.num(&unary(&args)?, "argument")?.exp())),
            "abs" => Ok(Val::Num(self.num(&unary(&args)?, "argument")?.abs())),
            "log" => {
                let x = self.num(args.first().unwrap_or(&Val::Num(f64::NAN)), "argument")?;
                match args.get(1) {
                    Some(b) => Ok(Val::Num(x.ln() / self.num(b, "base")?.ln())),
                    None => Ok(Val::Num(x.ln())),
                }
            }
            "range" => {
                let ns: Vec<f64> = args.iter().map(|a| self.num(a, "range bound")).collect::<Result<_>>()?;
                let (start, stop, step) = match ns.as_slice() {
                    [b] => (0.0, *b, 1.0),
                    [a, b] => (*a, *b, 1.0),
                    [a, b, s] if *s != 0.0 => (*a, *b, *s),
                    _ => return Err(translate_err(format!("line {}: bad range", self.line))),
                };
                let mut out = Vec::new();
                let mut k = start;
                while (step > 0.0 && k < stop) || (step < 0.0 && k > stop) {
                    out.push(Val::Num(k));
                    k += step;
                    if out.len() > 10_000_000 {
                        return Err(translate_err(format!("line {}: range too long", self.line)));
                    }
                }
                Ok(Val::List(out))
            }
            "array" => {
                let n = self.num(&unary(&args)?, "array length")?;
                match as_index(n, usize::MAX) {
                    Some(k) => Ok(Val::Array(String::new(), k)),
                    None => Err(translate_err(format!("line {}: bad array length {n}", self.line))),
                }
            }
            _ => self.distribution(func, args, kwargs).map(Val::Dist),
        }
    }

    fn distribution(&self, func: &str, args: Vec<Val>, kwargs: Vec<(String, Val)>) -> Result<Distribution> {
        let names: &[&str] = match func {
            "normal" => &["loc", "scale"],
            "uniform" => &["low", "high"],
            "gamma" => &["shape", "scale"],
            "beta" => &["a", "b"],
            "poisson" => &["mu"],
            "binomial" => &["n", "p"],
            "bernoulli" => &["p"],
            "atom" | "atomic" => &["loc"],
            "choice" => &["weights"],
            _ => return Err(translate_err(format!("line {}: unknown function {func:?}", self.line))),
        };
        let trunc = ["lo", "hi", "lo_open", "hi_open"];
        let mut params: HashMap<&str, Val> = HashMap::new();
        if args.len() > names.len() {
            return Err(translate_err(format!("line {}: too many arguments to {func}", self.line)));
        }
        for (n, a) in names.iter().zip(args) {
            params.insert(n, a);
        }
        let mut kw: Vec<(String, Val)> = kwargs;
        if func == "uniform" && kw.iter().any(|(k, _)| k == "loc" || k == "scale") {
            let get = |k: &str| kw.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
            let loc = get("loc").map(|v| self.num(&v, "loc")).transpose()?.unwrap_or(0.0);
            let scale = get("scale").map(|v| self.num(&v, "scale")).transpose()?.unwrap_or(1.0);
            kw.retain(|(k, _)| k != "loc" && k != "scale");
            kw.push(("low".into(), Val::Num(loc)));
            kw.push(("high".into(), Val::Num(loc + scale)));
        }
        let mut tr: HashMap<&str, Val> = HashMap::new();
        for (k, v) in kw {
            if let Some(n) = names.iter().find(|n| **n == k) {
                if params.insert(n, v).is_some() {
                    return Err(translate_err(format!("line {}: {k} given twice", self.line)));
                }
            } else if let Some(n) = trunc.iter().find(|n| **n == k) {
                tr.insert(n, v);
            } else {
                return Err(translate_err(format!("line {}: unexpected argument {k:?} to {func}", self.line)));
            }
        }
        let p = |k: &str, default: Option<f64>| -> Result<f64> {
            match params.get(k) {
                Some(v) => self.num(v, k),
                None => default.ok_or_else(|| translate_err(format!("line {}: {func} needs {k}", self.line))),
            }
        };
        let lo = tr.get("lo").map(|v| self.num(v, "lo")).transpose()?;
        let hi = tr.get("hi").map(|v| self.num(v, "hi")).transpose()?;
        let flag = |k: &str| -> Result<Option<bool>> {
            match tr.get(k) {
                None => Ok(None),
                Some(Val::Bool(b)) => Ok(Some(*b)),
                Some(Val::Num(x)) => Ok(Some(*x != 0.0)),
                Some(_) => Err(translate_err(format!("line {}: {k} must be a boolean", self.line))),
            }
        };
        let (lo_open, hi_open) = (flag("lo_open")?, flag("hi_open")?);
        let real = |f: RealFamily| -> Result<Distribution> {
            if lo_open.is_some() || hi_open.is_some() {
                return Err(translate_err(format!("line {}: open truncation applies to integer families", self.line)));
            }
            match (lo, hi) {
                (None, None) => Distribution::real(f),
                _ => Distribution::real_truncated(
                    f,
                    lo.unwrap_or(f64::NEG_INFINITY),
                    hi.unwrap_or(f64::INFINITY),
                ),
            }
        };
        let int = |f: IntFamily| -> Result<Distribution> {
            let support = Interval {
                lo: lo.unwrap_or(f64::NEG_INFINITY),
                lo_open: lo_open.unwrap_or(lo.is_none()),
                hi: hi.unwrap_or(f64::INFINITY),
                hi_open: hi_open.unwrap_or(hi.is_none()),
            };
            Distribution::int_truncated(f, support)
        };
        let d = match func {
            "normal" => real(RealFamily::Normal { loc: p("loc", Some(0.0))?, scale: p("scale", Some(1.0))? }),
            "uniform" => real(RealFamily::Uniform { low: p("low", Some(0.0))?, high: p("high", Some(1.0))? }),
            "gamma" => real(RealFamily::Gamma { shape: p("shape", None)?, scale: p("scale", Some(1.0))? }),
            "beta" => real(RealFamily::Beta { a: p("a", None)?, b: p("b", None)? }),
            "poisson" => int(IntFamily::Poisson { mu: p("mu", None)? }),
            "binomial" => {
                let n = p("n", None)?;
                if !(n >= 0.0 && n.fract() == 0.0) {
                    return Err(translate_err(format!("line {}: binomial n must be a whole number", self.line)));
                }
                int(IntFamily::Binomial { n: n as u64, p: p("p", None)? })
            }
            "bernoulli" => int(IntFamily::Binomial { n: 1, p: p("p", None)? }),
            "atom" | "atomic" => match params.get("loc") {
                Some(Val::Str(s)) => Distribution::strings(vec![(s.clone(), 1.0)]),
                _ => Distribution::atomic(p("loc", None)?),
            },
            "choice" => {
                if !tr.is_empty() {
                    return Err(translate_err(format!("line {}: choice cannot be truncated", self.line)));
                }
                match params.get("weights") {
                    Some(Val::Dict(kv)) => {
                        let mut ws = Vec::new();
                        let mut nums = Vec::new();
                        for (k, v) in kv {
                            let w = self.num(v, "weight")?;
                            match k {
                                Val::Str(s) => ws.push((s.clone(), w)),
                                Val::Num(x) => nums.push((*x, w)),
                                other => {
                                    return Err(translate_err(format!(
                                        "line {}: choice key must be a string or number, not a {}",
                                        self.line,
                                        other.kind()
                                    )))
                                }
                            }
                        }
                        if !nums.is_empty() {
                            return Err(translate_err(format!(
                                "line {}: choice over numbers is written as an if/elif over atoms",
                                self.line
                            )));
                        }
                        Distribution::strings(ws)
                    }
                    _ => Err(translate_err(format!("line {}: choice takes a dict of weights", self.line))),
                }
            }
            _ => unreachable!(),
        };
        d.map_err(|e| translate_err(format!("line {}: {e}", self.line)))
    }
}

fn as_index(i: f64, n: usize) -> Option<usize> {
    (i >= 0.0 && i.fract() == 0.0 && (i as usize) < n).then_some(i as usize)
}

pub(crate) fn split_indexed(name: &str) -> Option<(&str, usize)> {
    let open = name.find('[')?;
    let inner = name[open + 1..].strip_suffix(']')?;
    Some((&name[..open], inner.parse().ok()?))
}

fn as_poly(t: Transform) -> (Transform, Vec<f64>) {
    match t {
        Transform::Poly(inner, c) => (*inner, c),
        other => (other, vec![0.0, 1.0]),
    }
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
