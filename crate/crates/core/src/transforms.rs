//! Univariate numeric transforms of a random variable and their preimages.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::events::Event;
use crate::outcomes::{fmt_real, Outcome, Outcomes};
use crate::poly;
use crate::{Error, Result, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum Transform {
    Identity(Var),
    Reciprocal(Box<Transform>),
    Abs(Box<Transform>),
    /// Principal `n`-th root, defined on `[0, inf)`.
    Root(Box<Transform>, u32),
    /// `base ** t`.
    Exp(Box<Transform>, #[serde(with = "crate::serde_ext")] f64),
    /// Logarithm of `t` in the given base.
    Log(Box<Transform>, #[serde(with = "crate::serde_ext")] f64),
    /// Polynomial in `t` with ascending coefficients, degree at least one.
    Poly(Box<Transform>, #[serde(with = "crate::serde_ext::vec")] Vec<f64>),
    /// Guarded pieces; the guards are disjoint events on the same variable.
    Piecewise(Vec<(Transform, Event)>),
}

impl Transform {
    pub fn id(x: impl Into<Var>) -> Transform {
        Transform::Identity(x.into())
    }

    pub fn reciprocal(t: Transform) -> Transform {
        Transform::Reciprocal(Box::new(t))
    }

    pub fn abs(t: Transform) -> Transform {
        Transform::Abs(Box::new(t))
    }

    pub fn root(t: Transform, n: u32) -> Result<Transform> {
        if n < 2 {
            return Err(Error::InvalidTransform(format!("root of order {n}")));
        }
        Ok(Transform::Root(Box::new(t), n))
    }

    pub fn exp(t: Transform, base: f64) -> Result<Transform> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidTransform(format!("exponential with base {base}")));
        }
        Ok(Transform::Exp(Box::new(t), base))
    }

    pub fn log(t: Transform, base: f64) -> Result<Transform> {
        if !(base > 0.0 && base.is_finite() && base != 1.0) {
            return Err(Error::InvalidTransform(format!("logarithm with base {base}")));
        }
        Ok(Transform::Log(Box::new(t), base))
    }

    /// Polynomial in `t`. Trailing zeros are dropped and the identity
    /// polynomial `[0, 1]` collapses to `t`.
    pub fn poly(t: Transform, coeffs: &[f64]) -> Result<Transform> {
        let c = poly::strip(coeffs);
        if c.len() < 2 {
            return Err(Error::InvalidTransform("polynomial of degree below one".into()));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidTransform("non-finite polynomial coefficient".into()));
        }
        if c == [0.0, 1.0] {
            return Ok(t);
        }
        Ok(Transform::Poly(Box::new(t), c))
    }

    /// Piecewise transform; rejects mixed variables and overlapping guards.
    pub fn piecewise(pieces: Vec<(Transform, Event)>) -> Result<Transform> {
        if pieces.is_empty() {
            return Err(Error::InvalidTransform("piecewise with no pieces".into()));
        }
        let t = Transform::Piecewise(pieces);
        let vs = t.vars();
        if vs.len() != 1 {
            return Err(Error::InvalidTransform(format!(
                "piecewise over {} variables",
                vs.len()
            )));
        }
        let x = vs.into_iter().next().unwrap();
        if let Transform::Piecewise(ps) = &t {
            let guards: Vec<Outcomes> = ps.iter().map(|(_, e)| e.eval_event(&x)).collect();
            for i in 0..guards.len() {
                for j in 0..i {
                    if !guards[i].intersection(&guards[j]).is_empty() {
                        return Err(Error::InvalidTransform("overlapping piecewise guards".into()));
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Transform::Identity(_))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Transform::Identity(x) => {
                out.insert(x.clone());
            }
            Transform::Reciprocal(t)
            | Transform::Abs(t)
            | Transform::Root(t, _)
            | Transform::Exp(t, _)
            | Transform::Log(t, _)
            | Transform::Poly(t, _) => t.collect_vars(out),
            Transform::Piecewise(ps) => {
                for (t, e) in ps {
                    t.collect_vars(out);
                    e.collect_vars(out);
                }
            }
        }
    }

    /// The single variable of a well-formed transform.
    pub fn var(&self) -> Var {
        self.vars()
            .into_iter()
            .next()
            .expect("transform without variables")
    }

    /// Replace every occurrence of variable `y` with the transform `t`.
    pub fn subs(&self, y: &Var, t: &Transform) -> Transform {
        let sub = |a: &Transform| Box::new(a.subs(y, t));
        match self {
            Transform::Identity(x) if x == y => t.clone(),
            Transform::Identity(_) => self.clone(),
            Transform::Reciprocal(a) => Transform::Reciprocal(sub(a)),
            Transform::Abs(a) => Transform::Abs(sub(a)),
            Transform::Root(a, n) => Transform::Root(sub(a), *n),
            Transform::Exp(a, b) => Transform::Exp(sub(a), *b),
            Transform::Log(a, b) => Transform::Log(sub(a), *b),
            Transform::Poly(a, c) => Transform::Poly(sub(a), c.clone()),
            Transform::Piecewise(ps) => Transform::Piecewise(
                ps.iter().map(|(a, e)| (a.subs(y, t), e.subs(y, t))).collect(),
            ),
        }
    }

    /// Value of the transform with every variable bound to `r`; `None` when
    /// `r` lies outside the domain.
    pub fn evaluate(&self, r: f64) -> Option<f64> {
        self.evaluate_with(&|_| Some(Outcome::Real(r)))
    }

    /// Value of the transform under an assignment of variables.
    pub fn evaluate_with(&self, lookup: &dyn Fn(&Var) -> Option<Outcome>) -> Option<f64> {
        let arg = |a: &Transform| a.evaluate_with(lookup);
        match self {
            Transform::Identity(x) => match lookup(x)? {
                Outcome::Real(r) => Some(r),
                Outcome::Str(_) => None,
            },
            Transform::Reciprocal(a) => {
                let r = arg(a)?;
                (r != 0.0).then(|| 1.0 / r)
            }
            Transform::Abs(a) => Some(arg(a)?.abs()),
            Transform::Root(a, n) => {
                let r = arg(a)?;
                (r >= 0.0).then(|| nth_root(r, *n))
            }
            Transform::Exp(a, b) => Some(pow_base(*b, arg(a)?)),
            Transform::Log(a, b) => {
                let r = arg(a)?;
                (r > 0.0).then(|| log_base(*b, r))
            }
            Transform::Poly(a, c) => Some(poly::eval(c, arg(a)?)),
            Transform::Piecewise(ps) => {
                for (t, e) in ps {
                    if e.holds(lookup) {
                        return t.evaluate_with(lookup);
                    }
                }
                None
            }
        }
    }

    /// Inputs on which the transform is defined.
    pub fn domainof(&self) -> Outcomes {
        self.preimg(&Outcomes::reals())
    }

    /// Solutions `u` of `op(u) = r` for the outermost operation, as a sorted
    /// list of extended reals. Identity and piecewise transforms return `r`.
    pub fn finv(&self, r: f64) -> Vec<f64> {
        let out = match self {
            Transform::Identity(_) | Transform::Piecewise(_) => vec![r],
            Transform::Reciprocal(_) => {
                if r == 0.0 {
                    vec![]
                } else if r.is_infinite() {
                    vec![0.0]
                } else {
                    vec![1.0 / r]
                }
            }
            Transform::Abs(_) => {
                if r > 0.0 {
                    vec![-r, r]
                } else if r == 0.0 {
                    vec![0.0]
                } else {
                    vec![]
                }
            }
            Transform::Root(_, n) => {
                if r >= 0.0 {
                    vec![r.powi(*n as i32)]
                } else {
                    vec![]
                }
            }
            Transform::Exp(_, b) => {
                if r > 0.0 && *b != 1.0 {
                    vec![log_base(*b, r)]
                } else if r == 0.0 && *b != 1.0 {
                    vec![if *b > 1.0 { f64::NEG_INFINITY } else { f64::INFINITY }]
                } else {
                    vec![]
                }
            }
            Transform::Log(_, b) => vec![pow_base(*b, r)],
            Transform::Poly(_, c) => poly::poly_solve(r, c).unwrap_or_default(),
        };
        let mut out = out;
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// The set of variable values whose image under the transform lies in `v`.
    pub fn preimg(&self, v: &Outcomes) -> Outcomes {
        match self {
            Transform::Identity(_) => v.clone(),
            Transform::Piecewise(ps) => {
                let x = self.var();
                let mut acc = Outcomes::Empty;
                for (t, e) in ps {
                    let piece = t.preimg(v).intersection(&e.eval_event(&x));
                    acc = acc.union(&piece);
                }
                acc
            }
            Transform::Reciprocal(a)
            | Transform::Abs(a)
            | Transform::Root(a, _)
            | Transform::Exp(a, _)
            | Transform::Log(a, _)
            | Transform::Poly(a, _) => {
                let inner = self.outer_preimage(&v.real_part());
                if inner.is_empty() {
                    Outcomes::Empty
                } else {
                    a.preimg(&inner)
                }
            }
        }
    }

    /// Preimage of a set of reals under the outermost operation alone.
    fn outer_preimage(&self, v: &Outcomes) -> Outcomes {
        let mut segs: Vec<(f64, bool, f64, bool)> = Vec::new();
        let mut extra = Outcomes::Empty;
        for (lo, lo_open, hi, hi_open) in v.real_segments() {
            match self {
                Transform::Reciprocal(_) => {
                    // Positive and negative branches are both decreasing.
                    if let Some((a, ao, b, bo)) = clip(lo, lo_open, hi, hi_open, 0.0, true, f64::INFINITY, true) {
                        segs.push((recip(b, true), bo, recip(a, true), ao));
                    }
                    if let Some((a, ao, b, bo)) =
                        clip(lo, lo_open, hi, hi_open, f64::NEG_INFINITY, true, 0.0, true)
                    {
                        segs.push((recip(b, false), bo, recip(a, false), ao));
                    }
                }
                Transform::Abs(_) => {
                    if let Some((a, ao, b, bo)) = clip(lo, lo_open, hi, hi_open, 0.0, false, f64::INFINITY, true) {
                        segs.push((a, ao, b, bo));
                        segs.push((-b, bo, -a, ao));
                    }
                }
                Transform::Root(_, n) => {
                    if let Some((a, ao, b, bo)) = clip(lo, lo_open, hi, hi_open, 0.0, false, f64::INFINITY, true) {
                        segs.push((pow_n(a, *n), ao, pow_n(b, *n), bo));
                    }
                }
                Transform::Exp(_, base) => {
                    if *base == 1.0 {
                        if v.contains_real(1.0) {
                            return Outcomes::reals();
                        }
                        return Outcomes::Empty;
                    }
                    if let Some((a, ao, b, bo)) = clip(lo, lo_open, hi, hi_open, 0.0, true, f64::INFINITY, true) {
                        let (la, lb) = (log_base(*base, a), log_base(*base, b));
                        if *base > 1.0 {
                            segs.push((la, ao, lb, bo));
                        } else {
                            segs.push((lb, bo, la, ao));
                        }
                    }
                }
                Transform::Log(_, base) => {
                    let (pa, pb) = (pow_base(*base, lo), pow_base(*base, hi));
                    if *base > 1.0 {
                        segs.push((pa, lo_open, pb, hi_open));
                    } else {
                        segs.push((pb, hi_open, pa, lo_open));
                    }
                }
                Transform::Poly(_, c) => {
                    let piece = poly_preimage(c, lo, lo_open, hi, hi_open);
                    extra = extra.union(&piece);
                }
                Transform::Identity(_) | Transform::Piecewise(_) => {
                    segs.push((lo, lo_open, hi, hi_open));
                }
            }
        }
        Outcomes::from_segments(segs).union(&extra)
    }
}

/// Intersect a segment with `[c_lo, c_hi]` (with the given openness).
#[allow(clippy::too_many_arguments)]
fn clip(
    lo: f64,
    lo_open: bool,
    hi: f64,
    hi_open: bool,
    c_lo: f64,
    c_lo_open: bool,
    c_hi: f64,
    c_hi_open: bool,
) -> Option<(f64, bool, f64, bool)> {
    let v = Outcomes::from_segments([(lo, lo_open, hi, hi_open)])
        .intersection(&Outcomes::from_segments([(c_lo, c_lo_open, c_hi, c_hi_open)]));
    v.real_segments().into_iter().next()
}

/// `1/r` where a zero endpoint maps to the infinity on the side of the branch.
fn recip(r: f64, positive_branch: bool) -> f64 {
    if r == 0.0 {
        if positive_branch {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else if r.is_infinite() {
        0.0
    } else {
        1.0 / r
    }
}

fn pow_n(r: f64, n: u32) -> f64 {
    if r.is_infinite() {
        r
    } else {
        r.powi(n as i32)
    }
}

fn nth_root(r: f64, n: u32) -> f64 {
    match n {
        2 => r.sqrt(),
        3 => r.cbrt(),
        _ => r.powf(1.0 / n as f64),
    }
}

pub(crate) fn pow_base(b: f64, r: f64) -> f64 {
    if b == std::f64::consts::E {
        r.exp()
    } else if b == 2.0 {
        r.exp2()
    } else {
        b.powf(r)
    }
}

pub(crate) fn log_base(b: f64, r: f64) -> f64 {
    if b == std::f64::consts::E {
        r.ln()
    } else if b == 2.0 {
        r.log2()
    } else if b == 10.0 {
        r.log10()
    } else {
        r.ln() / b.ln()
    }
}

/// `{u : p(u) in <lo, hi>}` for one real segment (a point when `lo == hi`).
fn poly_preimage(c: &[f64], lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Outcomes {
    if lo == hi {
        return Outcomes::points(poly::poly_solve(lo, c).unwrap_or_default());
    }
    let below_lo = poly::poly_lte(!lo_open, lo, c).unwrap_or(Outcomes::Empty);
    let upto_hi = poly::poly_lte(hi_open, hi, c).unwrap_or(Outcomes::Empty);
    upto_hi.intersection(&below_lo.real_complement())
}

fn fmt_coeff_term(c: f64, i: usize, base: &str) -> String {
    match i {
        0 => fmt_real(c),
        1 => format!("{}*{}", fmt_real(c), base),
        _ => format!("{}*{}**{}", fmt_real(c), base, i),
    }
}

fn wrap(t: &Transform) -> String {
    match t {
        Transform::Identity(x) => x.to_string(),
        other => format!("({other})"),
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Transform::Identity(x) => write!(f, "{x}"),
            Transform::Reciprocal(t) => write!(f, "1/{}", wrap(t)),
            Transform::Abs(t) => write!(f, "abs({t})"),
            Transform::Root(t, 2) => write!(f, "sqrt({t})"),
            Transform::Root(t, n) => write!(f, "root({t}, {n})"),
            Transform::Exp(t, b) if *b == std::f64::consts::E => write!(f, "exp({t})"),
            Transform::Exp(t, b) => write!(f, "{}**{}", fmt_real(*b), wrap(t)),
            Transform::Log(t, b) if *b == std::f64::consts::E => write!(f, "log({t})"),
            Transform::Log(t, b) => write!(f, "log({t}, {})", fmt_real(*b)),
            Transform::Poly(t, c) => {
                let base = wrap(t);
                let terms: Vec<String> = c
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(i, c)| fmt_coeff_term(*c, i, &base))
                    .collect();
                write!(f, "({})", terms.join(" + "))
            }
            Transform::Piecewise(ps) => {
                let body: Vec<String> = ps.iter().map(|(t, e)| format!("({t}) if ({e})")).collect();
                write!(f, "piecewise[{}]", body.join("; "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Transform {
        Transform::id("X")
    }

    fn fig_poly() -> Transform {
        Transform::poly(x(), &[0.0, 6.0, 1.0, -1.0]).unwrap()
    }

    fn close(a: &Outcomes, segs: &[(f64, f64)]) -> bool {
        let got = a.real_segments();
        got.len() == segs.len()
            && got
                .iter()
                .zip(segs)
                .all(|(g, w)| (g.0 - w.0).abs() < 1e-3 && (g.2 - w.1).abs() < 1e-3)
    }

    #[test]
    fn evaluate_polynomial() {
        assert_eq!(fig_poly().evaluate(2.0), Some(8.0));
        assert_eq!(Transform::reciprocal(x()).evaluate(0.0), None);
        assert_eq!(Transform::log(x(), 2.0).unwrap().evaluate(8.0), Some(3.0));
    }

    #[test]
    fn finv_cases() {
        assert_eq!(Transform::abs(x()).finv(3.0), vec![-3.0, 3.0]);
        let r = fig_poly().finv(0.0);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 2.0).abs() < 1e-12 && r[1].abs() < 1e-12 && (r[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn preimage_of_cubic() {
        let v = fig_poly().preimg(&Outcomes::closed(0.0, 2.0));
        // Restricted to X < 1 this leaves the two left-hand pieces.
        let left = v.intersection(&Outcomes::open(f64::NEG_INFINITY, 1.0));
        // Real roots of -x^3 + x^2 + 6x - 2, computed independently with a
        // companion-matrix eigensolver.
        let segs = left.real_segments();
        assert_eq!(segs.len(), 2, "{left}");
        assert!((segs[0].0 + 2.1774096808992836).abs() < 1e-12);
        assert!((segs[0].2 + 2.0).abs() < 1e-12);
        assert!(segs[1].0.abs() < 1e-12);
        assert!((segs[1].2 - 0.32163717426329597).abs() < 1e-12);
    }

    #[test]
    fn preimage_of_exp() {
        let t = Transform::exp(x(), 2.0).unwrap();
        assert_eq!(t.preimg(&Outcomes::closed(1.0, 4.0)), Outcomes::closed(0.0, 2.0));
        assert!(t.preimg(&Outcomes::open(-3.0, 0.0)).is_empty());
    }

    #[test]
    fn preimage_of_reciprocal() {
        let t = Transform::reciprocal(x());
        assert_eq!(t.preimg(&Outcomes::closed(1.0, 2.0)), Outcomes::closed(0.5, 1.0));
        assert_eq!(
            t.preimg(&Outcomes::interval(6.0, true, f64::INFINITY, true)),
            Outcomes::open(0.0, 1.0 / 6.0)
        );
        let neg = t.preimg(&Outcomes::interval(f64::NEG_INFINITY, true, -2.0, false));
        assert_eq!(neg, Outcomes::interval(-0.5, false, 0.0, true));
    }

    #[test]
    fn domains() {
        assert_eq!(
            Transform::reciprocal(x()).domainof(),
            Outcomes::reals().intersection(&Outcomes::point(0.0).complement())
        );
        assert_eq!(
            Transform::log(x(), std::f64::consts::E).unwrap().domainof(),
            Outcomes::open(0.0, f64::INFINITY)
        );
        assert_eq!(
            Transform::root(x(), 2).unwrap().domainof(),
            Outcomes::interval(0.0, false, f64::INFINITY, true)
        );
    }

    #[test]
    fn preimage_of_abs_and_root() {
        let t = Transform::abs(x());
        assert_eq!(
            t.preimg(&Outcomes::interval(1.0, true, 2.0, false)),
            Outcomes::interval(-2.0, false, -1.0, true).union(&Outcomes::interval(1.0, true, 2.0, false))
        );
        let s = Transform::root(x(), 2).unwrap();
        assert_eq!(s.preimg(&Outcomes::closed(-1.0, 3.0)), Outcomes::closed(0.0, 9.0));
    }

    #[test]
    fn nested_preimage_is_composed() {
        // 5*sqrt(X) - 9 in [0, 2]  <=>  X in [81/25, 121/25]
        let t = Transform::poly(Transform::root(x(), 2).unwrap(), &[-9.0, 5.0]).unwrap();
        let v = t.preimg(&Outcomes::closed(0.0, 2.0));
        assert!(close(&v, &[(81.0 / 25.0, 121.0 / 25.0)]));
    }

    #[test]
    fn piecewise_rejects_overlap() {
        let g1 = Event::contains(x(), Outcomes::closed(0.0, 2.0));
        let g2 = Event::contains(x(), Outcomes::closed(1.0, 3.0));
        assert!(Transform::piecewise(vec![(x(), g1), (Transform::abs(x()), g2)]).is_err());
    }

    #[test]
    fn piecewise_preimage_and_evaluate() {
        let neg = Event::contains(x(), Outcomes::open(f64::NEG_INFINITY, 0.0));
        let pos = Event::contains(x(), Outcomes::interval(0.0, false, f64::INFINITY, true));
        let t = Transform::piecewise(vec![
            (Transform::poly(x(), &[0.0, -1.0]).unwrap(), neg),
            (Transform::poly(x(), &[0.0, 2.0]).unwrap(), pos),
        ])
        .unwrap();
        assert_eq!(t.evaluate(-3.0), Some(3.0));
        assert_eq!(t.evaluate(3.0), Some(6.0));
        let v = t.preimg(&Outcomes::closed(1.0, 2.0));
        assert_eq!(
            v,
            Outcomes::closed(-2.0, -1.0).union(&Outcomes::closed(0.5, 1.0))
        );
    }

    #[test]
    fn substitution_composes() {
        let z = Transform::poly(Transform::id("Z"), &[0.0, 0.0, 1.0]).unwrap();
        let s = z.subs(&Var::new("Z"), &Transform::root(x(), 2).unwrap());
        assert_eq!(s.evaluate(9.0), Some(9.0));
        assert_eq!(s.vars().len(), 1);
    }
}
