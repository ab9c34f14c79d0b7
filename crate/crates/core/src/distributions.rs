//! Primitive distributions at the leaves of an SPE: truncated continuous
//! distributions on the reals, truncated integer-valued distributions, and
//! weighted finite sets of strings.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{
    Beta, Binomial, Continuous, ContinuousCDF, Discrete, DiscreteCDF, Gamma, Normal, Poisson,
};

use crate::outcomes::{fmt_real, Interval, Outcome, Outcomes};
use crate::{Error, Result};

/// Continuous families, each with a CDF on the reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RealFamily {
    Normal { loc: f64, scale: f64 },
    Uniform { low: f64, high: f64 },
    Gamma { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
}

/// Families whose atoms are integers, plus a single atom at any real.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum IntFamily {
    Poisson { mu: f64 },
    Binomial { n: u64, p: f64 },
    Atomic { loc: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    /// Continuous family truncated to `support`.
    Real { family: RealFamily, support: Interval },
    /// Integer-valued family truncated to `support`; open endpoints exclude
    /// the atom at the endpoint.
    Int { family: IntFamily, support: Interval },
    /// Strings with positive, not necessarily normalized weights.
    Str { weights: Vec<(String, f64)> },
}

fn full_line() -> Interval {
    Interval { lo: f64::NEG_INFINITY, lo_open: true, hi: f64::INFINITY, hi_open: true }
}

impl RealFamily {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            RealFamily::Normal { loc, scale } => loc.is_finite() && scale > 0.0 && scale.is_finite(),
            RealFamily::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            RealFamily::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            RealFamily::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!("bad parameters for {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            RealFamily::Normal { loc, scale } => 0.5 * libm::erfc((loc - x) / (scale * std::f64::consts::SQRT_2)),
            RealFamily::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            RealFamily::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    Gamma::new(shape, 1.0 / scale).unwrap().cdf(x)
                }
            }
            RealFamily::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    Beta::new(a, b).unwrap().cdf(x)
                }
            }
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            RealFamily::Normal { loc, scale } => 0.5 * libm::erfc((x - loc) / (scale * std::f64::consts::SQRT_2)),
            RealFamily::Uniform { low, high } => ((high - x) / (high - low)).clamp(0.0, 1.0),
            RealFamily::Gamma { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    Gamma::new(shape, 1.0 / scale).unwrap().sf(x)
                }
            }
            RealFamily::Beta { a, b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    Beta::new(a, b).unwrap().sf(x)
                }
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            RealFamily::Normal { loc, scale } => Normal::new(loc, scale).unwrap().ln_pdf(x),
            RealFamily::Uniform { low, high } => {
                if (low..=high).contains(&x) {
                    -(high - low).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            RealFamily::Gamma { shape, scale } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    Gamma::new(shape, 1.0 / scale).unwrap().ln_pdf(x)
                }
            }
            RealFamily::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    f64::NEG_INFINITY
                } else {
                    Beta::new(a, b).unwrap().ln_pdf(x)
                }
            }
        }
    }

    fn median_guess(&self) -> f64 {
        match *self {
            RealFamily::Normal { loc, .. } => loc,
            RealFamily::Uniform { low, high } => 0.5 * (low + high),
            RealFamily::Gamma { shape, scale } => shape * scale,
            RealFamily::Beta { a, b } => a / (a + b),
        }
    }

    fn natural_support(&self) -> (f64, f64) {
        match *self {
            RealFamily::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            RealFamily::Uniform { low, high } => (low, high),
            RealFamily::Gamma { .. } => (0.0, f64::INFINITY),
            RealFamily::Beta { .. } => (0.0, 1.0),
        }
    }

    /// Probability of the interval `[lo, hi]`, using the survival function
    /// in the upper tail to avoid cancellation.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        if lo > self.median_guess() {
            (self.sf(lo) - self.sf(hi)).max(0.0)
        } else {
            (self.cdf(hi) - self.cdf(lo)).max(0.0)
        }
    }

    /// Smallest `x` with `cdf(x) >= p` (or `sf(x) <= s` in the upper tail),
    /// searched inside `[lo, hi]`.
    fn quantile_in(&self, lo: f64, hi: f64, u: f64) -> f64 {
        let (nlo, nhi) = self.natural_support();
        let (lo, hi) = (lo.max(nlo), hi.min(nhi));
        if let RealFamily::Uniform { .. } = self {
            return lo + u * (hi - lo);
        }
        let upper = lo > self.median_guess();
        let (target, f): (f64, Box<dyn Fn(f64) -> f64>) = if upper {
            let (slo, shi) = (self.sf(lo), self.sf(hi));
            (slo - u * (slo - shi), Box::new(move |x| -self.sf(x)))
        } else {
            let (clo, chi) = (self.cdf(lo), self.cdf(hi));
            (clo + u * (chi - clo), Box::new(move |x| self.cdf(x)))
        };
        let target = if upper { -target } else { target };
        if let (RealFamily::Normal { loc, scale }, false) = (self, upper) {
            if target > 0.0 && target < 1.0 {
                let x = Normal::new(*loc, *scale).unwrap().inverse_cdf(target);
                return x.clamp(lo, hi);
            }
        }
        // Bracket, then bisect on the monotone function f.
        let (mut a, mut b) = (lo, hi);
        let c = self.median_guess();
        let mut step = 1.0f64.max(c.abs());
        if a == f64::NEG_INFINITY {
            a = b.min(c) - step;
            while f(a) > target {
                step *= 2.0;
                a -= step;
            }
        }
        step = 1.0f64.max(c.abs());
        if b == f64::INFINITY {
            b = a.max(c) + step;
            while f(b) < target {
                step *= 2.0;
                b += step;
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if f(m) < target {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

impl IntFamily {
    fn check(&self) -> Result<()> {
        let ok = match *self {
            IntFamily::Poisson { mu } => mu > 0.0 && mu.is_finite(),
            IntFamily::Binomial { p, .. } => (0.0..=1.0).contains(&p),
            IntFamily::Atomic { loc } => loc.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!("bad parameters for {self:?}")))
        }
    }

    /// Smallest and largest atoms with positive probability.
    fn atom_range(&self) -> (f64, f64) {
        match *self {
            IntFamily::Poisson { .. } => (0.0, f64::INFINITY),
            IntFamily::Binomial { n, p } => {
                if p == 0.0 {
                    (0.0, 0.0)
                } else if p == 1.0 {
                    (n as f64, n as f64)
                } else {
                    (0.0, n as f64)
                }
            }
            IntFamily::Atomic { loc } => (loc, loc),
        }
    }

    /// `P(X <= k)` for an integer (or infinite) `k`.
    fn cdf_at(&self, k: f64) -> f64 {
        if k == f64::INFINITY {
            return 1.0;
        }
        match *self {
            IntFamily::Atomic { loc } => (k >= loc) as u8 as f64,
            _ if k < 0.0 => 0.0,
            IntFamily::Poisson { mu } => Poisson::new(mu).unwrap().cdf(k as u64),
            IntFamily::Binomial { n, p } => {
                if k >= n as f64 {
                    1.0
                } else {
                    Binomial::new(p, n).unwrap().cdf(k as u64)
                }
            }
        }
    }

    /// `P(X > k)` for an integer (or infinite) `k`.
    fn sf_at(&self, k: f64) -> f64 {
        if k == f64::NEG_INFINITY {
            return 1.0;
        }
        match *self {
            IntFamily::Atomic { loc } => (loc > k) as u8 as f64,
            _ if k < 0.0 => 1.0,
            _ if k == f64::INFINITY => 0.0,
            IntFamily::Poisson { mu } => Poisson::new(mu).unwrap().sf(k as u64),
            IntFamily::Binomial { n, p } => {
                if k >= n as f64 {
                    0.0
                } else {
                    Binomial::new(p, n).unwrap().sf(k as u64)
                }
            }
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            IntFamily::Poisson { mu } => mu,
            IntFamily::Binomial { n, p } => n as f64 * p,
            IntFamily::Atomic { loc } => loc,
        }
    }

    /// Atoms inside the interval, as an inclusive range of lattice points.
    /// For the atomic family the only lattice point is its location.
    fn lattice_range(&self, lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Option<(f64, f64)> {
        let (amin, amax) = self.atom_range();
        if let IntFamily::Atomic { loc } = *self {
            let inside = Interval { lo, lo_open, hi, hi_open }.contains(loc)
                || (lo == hi && lo == loc && !lo_open && !hi_open);
            return inside.then_some((loc, loc));
        }
        let kmin = if lo_open { lo.floor() + 1.0 } else { lo.ceil() };
        let kmax = if hi_open { hi.ceil() - 1.0 } else { hi.floor() };
        let (kmin, kmax) = (kmin.max(amin), kmax.min(amax));
        (kmin <= kmax).then_some((kmin, kmax))
    }

    /// Probability of the atoms in a segment.
    fn mass(&self, lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> f64 {
        match self.lattice_range(lo, lo_open, hi, hi_open) {
            None => 0.0,
            Some((kmin, kmax)) => {
                if let IntFamily::Atomic { .. } = self {
                    return 1.0;
                }
                if kmax - kmin < 64.0 {
                    // Summing a few masses beats differencing two CDFs.
                    let mut acc = 0.0;
                    let mut k = kmin;
                    while k <= kmax {
                        acc += self.ln_pmf(k).exp();
                        k += 1.0;
                    }
                    return acc;
                }
                if kmin > self.mean() {
                    (self.sf_at(kmin - 1.0) - self.sf_at(kmax)).max(0.0)
                } else {
                    (self.cdf_at(kmax) - self.cdf_at(kmin - 1.0)).max(0.0)
                }
            }
        }
    }

    fn ln_pmf(&self, k: f64) -> f64 {
        match *self {
            IntFamily::Atomic { loc } => {
                if k == loc {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ if k < 0.0 || k.fract() != 0.0 => f64::NEG_INFINITY,
            IntFamily::Poisson { mu } => Poisson::new(mu).unwrap().ln_pmf(k as u64),
            IntFamily::Binomial { n, p } => {
                if k > n as f64 {
                    f64::NEG_INFINITY
                } else {
                    Binomial::new(p, n).unwrap().ln_pmf(k as u64)
                }
            }
        }
    }

    /// Smallest atom `k` in `[kmin, kmax]` whose cumulative mass from
    /// `kmin` reaches the fraction `u` of the range's mass.
    fn quantile_in(&self, kmin: f64, kmax: f64, u: f64) -> f64 {
        if kmin == kmax {
            return kmin;
        }
        let upper = kmin > self.mean();
        let target = if upper {
            let (slo, shi) = (self.sf_at(kmin - 1.0), self.sf_at(kmax));
            slo - u * (slo - shi)
        } else {
            let (clo, chi) = (self.cdf_at(kmin - 1.0), self.cdf_at(kmax));
            clo + u * (chi - clo)
        };
        // true when the target lies beyond atom k
        let below = |k: f64| -> bool {
            if upper {
                self.sf_at(k) > target
            } else {
                self.cdf_at(k) < target
            }
        };
        let mut lo = kmin;
        let mut hi = if kmax.is_finite() {
            kmax
        } else {
            let mut step = 1.0f64.max(self.mean().ceil());
            let mut h = kmin + step;
            while below(h) {
                step *= 2.0;
                h = kmin + step;
            }
            h
        };
        if !below(lo) {
            return lo;
        }
        // invariant: below(lo) and !below(hi)
        while hi - lo > 1.0 {
            let m = (0.5 * (lo + hi)).floor().max(lo + 1.0);
            if below(m) {
                lo = m;
            } else {
                hi = m;
            }
        }
        hi
    }
}

impl Distribution {
    /// Continuous family truncated to its natural support.
    pub fn real(family: RealFamily) -> Result<Distribution> {
        family.check()?;
        let (lo, hi) = family.natural_support();
        Distribution::real_truncated(family, lo, hi)
    }

    pub fn real_truncated(family: RealFamily, lo: f64, hi: f64) -> Result<Distribution> {
        family.check()?;
        let support = Interval {
            lo,
            lo_open: lo.is_infinite(),
            hi,
            hi_open: hi.is_infinite(),
        };
        let d = Distribution::Real { family, support };
        if !(lo < hi) || d.support_mass() <= 0.0 {
            return Err(Error::InvalidDistribution("truncation to a set of probability zero".into()));
        }
        Ok(d)
    }

    pub fn int(family: IntFamily) -> Result<Distribution> {
        Distribution::int_truncated(family, full_line())
    }

    pub fn int_truncated(family: IntFamily, support: Interval) -> Result<Distribution> {
        family.check()?;
        if !(support.lo < support.hi) {
            return Err(Error::InvalidDistribution("empty truncation interval".into()));
        }
        let d = Distribution::Int { family, support };
        if d.support_mass() <= 0.0 {
            return Err(Error::InvalidDistribution("truncation to a set of probability zero".into()));
        }
        Ok(d.canonical())
    }

    pub fn atomic(loc: f64) -> Result<Distribution> {
        Distribution::int(IntFamily::Atomic { loc })
    }

    /// Weighted strings; zero weights are dropped and duplicates merged.
    pub fn strings(weights: Vec<(String, f64)>) -> Result<Distribution> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (s, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidDistribution(format!("weight {w} for {s:?}")));
            }
            if w == 0.0 {
                continue;
            }
            match out.iter_mut().find(|(t, _)| *t == s) {
                Some(e) => e.1 += w,
                None => out.push((s, w)),
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidDistribution("no string has positive weight".into()));
        }
        Ok(Distribution::Str { weights: out })
    }

    /// An integer distribution with a single atom in its support becomes
    /// an atomic distribution; everything else is unchanged.
    pub fn canonical(self) -> Distribution {
        if let Distribution::Int { family, support } = &self {
            if let IntFamily::Atomic { loc } = family {
                if support.lo != f64::NEG_INFINITY || support.hi != f64::INFINITY {
                    return Distribution::Int {
                        family: IntFamily::Atomic { loc: *loc },
                        support: full_line(),
                    };
                }
                return self;
            }
            if let Some((a, b)) = family.lattice_range(support.lo, support.lo_open, support.hi, support.hi_open) {
                if a == b {
                    return Distribution::Int { family: IntFamily::Atomic { loc: a }, support: full_line() };
                }
            }
        }
        self
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Distribution::Real { .. })
    }

    pub fn is_nominal(&self) -> bool {
        matches!(self, Distribution::Str { .. })
    }

    fn support_mass(&self) -> f64 {
        match self {
            Distribution::Real { family, support } => family.mass(support.lo, support.hi),
            Distribution::Int { family, support } => {
                family.mass(support.lo, support.lo_open, support.hi, support.hi_open)
            }
            Distribution::Str { weights } => weights.iter().map(|(_, w)| w).sum(),
        }
    }

    /// Support as a set of outcomes (the truncation interval for numeric
    /// distributions).
    pub fn support(&self) -> Outcomes {
        match self {
            Distribution::Real { support, .. } | Distribution::Int { support, .. } => {
                Outcomes::interval(support.lo, support.lo_open, support.hi, support.hi_open)
            }
            Distribution::Str { weights } => Outcomes::strings(weights.iter().map(|(s, _)| s.clone())),
        }
    }

    /// Probability of a set of outcomes.
    pub fn prob(&self, v: &Outcomes) -> f64 {
        match self {
            Distribution::Str { weights } => {
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                let hit: f64 = weights
                    .iter()
                    .filter(|(s, _)| v.contains_str(s))
                    .map(|(_, w)| w)
                    .sum();
                hit / total
            }
            Distribution::Real { family, .. } => {
                let w = v.intersection(&self.support());
                let hit: f64 = w
                    .real_segments()
                    .iter()
                    .map(|(lo, _, hi, _)| family.mass(*lo, *hi))
                    .sum();
                (hit / self.support_mass()).min(1.0)
            }
            Distribution::Int { family, .. } => {
                let w = v.intersection(&self.support());
                let hit: f64 = w
                    .real_segments()
                    .iter()
                    .map(|(lo, lo_open, hi, hi_open)| family.mass(*lo, *lo_open, *hi, *hi_open))
                    .sum();
                (hit / self.support_mass()).min(1.0)
            }
        }
    }

    /// Natural log of [`Distribution::prob`].
    pub fn ln_prob(&self, v: &Outcomes) -> f64 {
        self.prob(v).ln()
    }

    /// Density at an outcome as `(degree, value)`: degree one for a
    /// continuous density, degree zero for a probability mass.
    pub fn density(&self, x: &Outcome) -> (u32, f64) {
        let (d, l) = self.ln_density(x);
        (d, l.exp())
    }

    /// [`Distribution::density`] with the value on the log scale.
    pub fn ln_density(&self, x: &Outcome) -> (u32, f64) {
        match (self, x) {
            (Distribution::Real { family, support }, Outcome::Real(r)) => {
                let inside = *r >= support.lo && *r <= support.hi;
                if inside {
                    (1, family.ln_pdf(*r) - self.support_mass().ln())
                } else {
                    (1, f64::NEG_INFINITY)
                }
            }
            (Distribution::Real { .. }, Outcome::Str(_)) => (1, f64::NEG_INFINITY),
            _ => {
                let v = match x {
                    Outcome::Real(r) => Outcomes::point(*r),
                    Outcome::Str(s) => Outcomes::strings([s.clone()]),
                };
                let w = match (self, x) {
                    (Distribution::Int { family, support }, Outcome::Real(r)) => {
                        if support.contains(*r) {
                            family.ln_pmf(*r) - self.support_mass().ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    }
                    _ => self.ln_prob(&v),
                };
                ((w == f64::NEG_INFINITY) as u32, w)
            }
        }
    }

    /// Inverse-CDF sample for `u` in `[0, 1)`: the quantile at
    /// `F(lo) + u * (F(hi) - F(lo))`.
    pub fn sample(&self, u: f64) -> Outcome {
        match self {
            Distribution::Str { weights } => {
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                let target = u * total;
                let mut acc = 0.0;
                for (s, w) in weights {
                    acc += w;
                    if target < acc {
                        return Outcome::Str(s.clone());
                    }
                }
                Outcome::Str(weights.last().unwrap().0.clone())
            }
            Distribution::Real { family, support } => {
                Outcome::Real(family.quantile_in(support.lo, support.hi, u))
            }
            Distribution::Int { family, support } => {
                let (kmin, kmax) = family
                    .lattice_range(support.lo, support.lo_open, support.hi, support.hi_open)
                    .expect("integer distribution with empty support");
                Outcome::Real(family.quantile_in(kmin, kmax, u))
            }
        }
    }

    /// The distribution restricted to `v`, split into pieces with disjoint
    /// supports, each paired with its probability. Pieces of probability
    /// zero are left out.
    pub fn restrict(&self, v: &Outcomes) -> Vec<(Distribution, f64)> {
        match self {
            Distribution::Str { weights } => {
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                let hit: Vec<(String, f64)> = weights.iter().filter(|(s, _)| v.contains_str(s)).cloned().collect();
                let p: f64 = hit.iter().map(|(_, w)| w).sum::<f64>() / total;
                match Distribution::strings(hit) {
                    Ok(d) => vec![(d, p)],
                    Err(_) => vec![],
                }
            }
            Distribution::Real { family, .. } => {
                let z = self.support_mass();
                v.intersection(&self.support())
                    .real_segments()
                    .into_iter()
                    .filter(|(lo, _, hi, _)| lo < hi)
                    .filter_map(|(lo, _, hi, _)| {
                        let p = family.mass(lo, hi) / z;
                        let d = Distribution::real_truncated(family.clone(), lo, hi).ok()?;
                        (p > 0.0).then_some((d, p))
                    })
                    .collect()
            }
            Distribution::Int { family, .. } => {
                let z = self.support_mass();
                v.intersection(&self.support())
                    .real_segments()
                    .into_iter()
                    .filter_map(|(lo, lo_open, hi, hi_open)| {
                        let p = family.mass(lo, lo_open, hi, hi_open) / z;
                        if !(p > 0.0) {
                            return None;
                        }
                        let d = if lo == hi {
                            Distribution::atomic(lo).ok()?
                        } else {
                            Distribution::int_truncated(family.clone(), Interval { lo, lo_open, hi, hi_open }).ok()?
                        };
                        Some((d, p))
                    })
                    .collect()
            }
        }
    }

    /// Integer atoms of the support inside `v` with positive probability,
    /// or `None` if there are more than `limit` of them.
    pub fn atoms_in(&self, v: &Outcomes, limit: usize) -> Option<Vec<f64>> {
        let Distribution::Int { family, support } = self else {
            return Some(vec![]);
        };
        let w = v.intersection(&self.support());
        let mut out = Vec::new();
        for (lo, lo_open, hi, hi_open) in w.real_segments() {
            if let Some((a, b)) = family.lattice_range(lo, lo_open, hi, hi_open) {
                if b - a >= limit as f64 {
                    return None;
                }
                let mut k = a;
                while k <= b {
                    if family.ln_pmf(k) > f64::NEG_INFINITY && support.contains(k) {
                        out.push(k);
                        if out.len() > limit {
                            return None;
                        }
                    }
                    k += 1.0;
                }
            }
        }
        Some(out)
    }

    /// Text used as an interning key: parameters rounded to 13 significant
    /// digits so that values equal to within 1e-12 share a node.
    pub fn key(&self) -> String {
        let r = |x: f64| format!("{x:.12e}");
        let iv = |i: &Interval| format!("{}{},{}{}", i.lo_open as u8, r(i.lo), r(i.hi), i.hi_open as u8);
        match self {
            Distribution::Real { family, support } => {
                let f = match *family {
                    RealFamily::Normal { loc, scale } => format!("N{},{}", r(loc), r(scale)),
                    RealFamily::Uniform { low, high } => format!("U{},{}", r(low), r(high)),
                    RealFamily::Gamma { shape, scale } => format!("G{},{}", r(shape), r(scale)),
                    RealFamily::Beta { a, b } => format!("B{},{}", r(a), r(b)),
                };
                format!("R{f}|{}", iv(support))
            }
            Distribution::Int { family, support } => {
                let f = match *family {
                    IntFamily::Poisson { mu } => format!("P{}", r(mu)),
                    IntFamily::Binomial { n, p } => format!("Bi{n},{}", r(p)),
                    IntFamily::Atomic { loc } => format!("A{}", r(loc)),
                };
                format!("I{f}|{}", iv(support))
            }
            Distribution::Str { weights } => {
                let total: f64 = weights.iter().map(|(_, w)| w).sum();
                let mut ws: Vec<String> = weights.iter().map(|(s, w)| format!("{s:?}:{}", r(w / total))).collect();
                ws.sort();
                format!("S{}", ws.join(","))
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let iv = |i: &Interval| {
            format!(
                "{}{}, {}{}",
                if i.lo_open { "(" } else { "[" },
                fmt_real(i.lo),
                fmt_real(i.hi),
                if i.hi_open { ")" } else { "]" }
            )
        };
        match self {
            Distribution::Real { family, support } => write!(f, "{family:?} on {}", iv(support)),
            Distribution::Int { family: IntFamily::Atomic { loc }, .. } => write!(f, "atom({})", fmt_real(*loc)),
            Distribution::Int { family, support } => write!(f, "{family:?} on {}", iv(support)),
            Distribution::Str { weights } => {
                let body: Vec<String> = weights.iter().map(|(s, w)| format!("{s:?}: {w}")).collect();
                write!(f, "choice({{{}}})", body.join(", "))
            }
        }
    }
}
