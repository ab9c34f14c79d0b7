//! Sets of outcomes over the disjoint union of the reals and the strings.
//!
//! Every constructor returns a canonical value: intervals are non-degenerate,
//! adjacent pieces are merged, and a [`Outcomes::Union`] lists at most one
//! string member first, then one [`Outcomes::FiniteReal`] of isolated points,
//! then intervals in ascending order. Canonical values compare with `==`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single outcome: a real number or a string.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Real(f64),
    Str(String),
}

impl From<f64> for Outcome {
    fn from(r: f64) -> Self {
        Outcome::Real(r)
    }
}

impl From<&str> for Outcome {
    fn from(s: &str) -> Self {
        Outcome::Str(s.to_string())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Real(r) => write!(f, "{}", fmt_real(*r)),
            Outcome::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// A real interval. `lo < hi` always holds; infinite endpoints are open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::serde_ext")]
    pub lo: f64,
    pub lo_open: bool,
    #[serde(with = "crate::serde_ext")]
    pub hi: f64,
    pub hi_open: bool,
}

impl Interval {
    pub fn contains(&self, r: f64) -> bool {
        let above = if self.lo_open { r > self.lo } else { r >= self.lo };
        let below = if self.hi_open { r < self.hi } else { r <= self.hi };
        above && below
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcomes {
    Empty,
    /// The listed strings, or every string except them when `complemented`.
    FiniteStr {
        strings: Vec<String>,
        complemented: bool,
    },
    FiniteReal {
        #[serde(with = "crate::serde_ext::vec")]
        points: Vec<f64>,
    },
    Interval(Interval),
    Union {
        members: Vec<Outcomes>,
    },
}

/// A closed-or-open real segment; `lo == hi` encodes a point.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Seg {
    lo: f64,
    lo_open: bool,
    hi: f64,
    hi_open: bool,
}

impl Seg {
    fn point(r: f64) -> Seg {
        Seg { lo: r, lo_open: false, hi: r, hi_open: false }
    }

    fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Canonical segment or `None` when empty.
    fn make(lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Option<Seg> {
        let lo_open = lo_open || lo == f64::NEG_INFINITY || lo == f64::INFINITY;
        let hi_open = hi_open || hi == f64::INFINITY || hi == f64::NEG_INFINITY;
        if lo < hi || (lo == hi && !lo_open && !hi_open) {
            Some(Seg { lo, lo_open, hi, hi_open })
        } else {
            None
        }
    }

    fn intersect(&self, o: &Seg) -> Option<Seg> {
        let (lo, lo_open) = if self.lo > o.lo {
            (self.lo, self.lo_open)
        } else if o.lo > self.lo {
            (o.lo, o.lo_open)
        } else {
            (self.lo, self.lo_open || o.lo_open)
        };
        let (hi, hi_open) = if self.hi < o.hi {
            (self.hi, self.hi_open)
        } else if o.hi < self.hi {
            (o.hi, o.hi_open)
        } else {
            (self.hi, self.hi_open || o.hi_open)
        };
        Seg::make(lo, lo_open, hi, hi_open)
    }
}

/// Sort and merge segments into a disjoint, non-adjacent ascending list.
fn merge_segs(mut segs: Vec<Seg>) -> Vec<Seg> {
    segs.sort_by(|a, b| {
        a.lo.partial_cmp(&b.lo)
            .unwrap()
            .then(a.lo_open.cmp(&b.lo_open))
    });
    let mut out: Vec<Seg> = Vec::with_capacity(segs.len());
    for s in segs {
        if let Some(cur) = out.last_mut() {
            let touches = s.lo < cur.hi || (s.lo == cur.hi && !(s.lo_open && cur.hi_open));
            if touches {
                if s.hi > cur.hi {
                    cur.hi = s.hi;
                    cur.hi_open = s.hi_open;
                } else if s.hi == cur.hi {
                    cur.hi_open = cur.hi_open && s.hi_open;
                }
                if s.lo == cur.lo {
                    cur.lo_open = cur.lo_open && s.lo_open;
                }
                continue;
            }
        }
        out.push(s);
    }
    out
}

fn intersect_segs(a: &[Seg], b: &[Seg]) -> Vec<Seg> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if let Some(s) = x.intersect(y) {
                out.push(s);
            }
        }
    }
    merge_segs(out)
}

/// Complement of a merged segment list within the reals.
fn complement_segs(segs: &[Seg]) -> Vec<Seg> {
    let mut out = Vec::new();
    let mut start = f64::NEG_INFINITY;
    let mut start_open = true;
    for s in segs {
        if let Some(g) = Seg::make(start, start_open, s.lo, !s.lo_open) {
            out.push(g);
        }
        start = s.hi;
        start_open = !s.hi_open;
    }
    if let Some(g) = Seg::make(start, start_open, f64::INFINITY, true) {
        out.push(g);
    }
    out
}

/// String part of a set: `(listed, complemented)`; `(∅, false)` is none.
#[derive(Clone, Debug, PartialEq, Default)]
struct StrPart {
    set: BTreeSet<String>,
    complemented: bool,
}

impl StrPart {
    fn is_empty(&self) -> bool {
        self.set.is_empty() && !self.complemented
    }

    fn union(&self, o: &StrPart) -> StrPart {
        match (self.complemented, o.complemented) {
            (false, false) => StrPart { set: &self.set | &o.set, complemented: false },
            (false, true) => StrPart { set: &o.set - &self.set, complemented: true },
            (true, false) => StrPart { set: &self.set - &o.set, complemented: true },
            (true, true) => StrPart { set: &self.set & &o.set, complemented: true },
        }
    }

    fn intersect(&self, o: &StrPart) -> StrPart {
        match (self.complemented, o.complemented) {
            (false, false) => StrPart { set: &self.set & &o.set, complemented: false },
            (false, true) => StrPart { set: &self.set - &o.set, complemented: false },
            (true, false) => StrPart { set: &o.set - &self.set, complemented: false },
            (true, true) => StrPart { set: &self.set | &o.set, complemented: true },
        }
    }

    fn contains(&self, s: &str) -> bool {
        self.set.contains(s) != self.complemented
    }
}

#[derive(Clone, Debug, Default)]
struct Parts {
    strs: StrPart,
    reals: Vec<Seg>,
}

impl Outcomes {
    pub fn empty() -> Outcomes {
        Outcomes::Empty
    }

    /// All reals, `(-inf, inf)`.
    pub fn reals() -> Outcomes {
        Outcomes::interval(f64::NEG_INFINITY, true, f64::INFINITY, true)
    }

    /// All strings.
    pub fn all_strings() -> Outcomes {
        Outcomes::FiniteStr { strings: Vec::new(), complemented: true }
    }

    /// Every real and every string.
    pub fn universe() -> Outcomes {
        Outcomes::all_strings().union(&Outcomes::reals())
    }

    /// Canonical interval; degenerate inputs give a point or `Empty`.
    pub fn interval(lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Outcomes {
        assert!(!lo.is_nan() && !hi.is_nan(), "NaN interval endpoint");
        match Seg::make(lo, lo_open, hi, hi_open) {
            Some(s) => Outcomes::from_parts(Parts { strs: StrPart::default(), reals: vec![s] }),
            None => Outcomes::Empty,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Outcomes {
        Outcomes::interval(lo, false, hi, false)
    }

    pub fn open(lo: f64, hi: f64) -> Outcomes {
        Outcomes::interval(lo, true, hi, true)
    }

    /// Finite set of reals; infinite values are dropped.
    pub fn points<I: IntoIterator<Item = f64>>(pts: I) -> Outcomes {
        let reals = pts
            .into_iter()
            .filter(|r| r.is_finite())
            .map(Seg::point)
            .collect();
        Outcomes::from_parts(Parts { strs: StrPart::default(), reals: merge_segs(reals) })
    }

    pub fn point(r: f64) -> Outcomes {
        Outcomes::points([r])
    }

    pub fn strings<I, S>(strs: I) -> Outcomes
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set = strs.into_iter().map(Into::into).collect();
        Outcomes::from_parts(Parts { strs: StrPart { set, complemented: false }, reals: vec![] })
    }

    /// Every string except the listed ones.
    pub fn strings_except<I, S>(strs: I) -> Outcomes
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set = strs.into_iter().map(Into::into).collect();
        Outcomes::from_parts(Parts { strs: StrPart { set, complemented: true }, reals: vec![] })
    }

    fn parts(&self) -> Parts {
        match self {
            Outcomes::Empty => Parts::default(),
            Outcomes::FiniteStr { strings, complemented } => Parts {
                strs: StrPart { set: strings.iter().cloned().collect(), complemented: *complemented },
                reals: vec![],
            },
            Outcomes::FiniteReal { points } => Parts {
                strs: StrPart::default(),
                reals: merge_segs(points.iter().map(|r| Seg::point(*r)).collect()),
            },
            Outcomes::Interval(i) => Parts {
                strs: StrPart::default(),
                reals: Seg::make(i.lo, i.lo_open, i.hi, i.hi_open).into_iter().collect(),
            },
            Outcomes::Union { members } => {
                let mut strs = StrPart::default();
                let mut reals = Vec::new();
                for m in members {
                    let p = m.parts();
                    strs = strs.union(&p.strs);
                    reals.extend(p.reals);
                }
                Parts { strs, reals: merge_segs(reals) }
            }
        }
    }

    fn from_parts(p: Parts) -> Outcomes {
        let mut members = Vec::new();
        if !p.strs.is_empty() {
            members.push(Outcomes::FiniteStr {
                strings: p.strs.set.into_iter().collect(),
                complemented: p.strs.complemented,
            });
        }
        let points: Vec<f64> = p.reals.iter().filter(|s| s.is_point()).map(|s| s.lo).collect();
        if !points.is_empty() {
            members.push(Outcomes::FiniteReal { points });
        }
        for s in p.reals.iter().filter(|s| !s.is_point()) {
            members.push(Outcomes::Interval(Interval {
                lo: s.lo,
                lo_open: s.lo_open,
                hi: s.hi,
                hi_open: s.hi_open,
            }));
        }
        match members.len() {
            0 => Outcomes::Empty,
            1 => members.pop().unwrap(),
            _ => Outcomes::Union { members },
        }
    }

    /// Re-canonicalize a value built by hand (for example, deserialized).
    pub fn canonical(&self) -> Outcomes {
        Outcomes::from_parts(self.parts())
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Outcomes::Empty)
    }

    pub fn contains(&self, x: &Outcome) -> bool {
        match (self, x) {
            (Outcomes::Empty, _) => false,
            (Outcomes::FiniteStr { strings, complemented }, Outcome::Str(s)) => {
                strings.iter().any(|t| t == s) != *complemented
            }
            (Outcomes::FiniteReal { points }, Outcome::Real(r)) => points.contains(r),
            (Outcomes::Interval(i), Outcome::Real(r)) => i.contains(*r),
            (Outcomes::Union { members }, _) => members.iter().any(|m| m.contains(x)),
            _ => false,
        }
    }

    pub fn contains_real(&self, r: f64) -> bool {
        self.contains(&Outcome::Real(r))
    }

    pub fn contains_str(&self, s: &str) -> bool {
        self.parts().strs.contains(s)
    }

    pub fn union(&self, o: &Outcomes) -> Outcomes {
        let (a, b) = (self.parts(), o.parts());
        let mut reals = a.reals;
        reals.extend(b.reals);
        Outcomes::from_parts(Parts { strs: a.strs.union(&b.strs), reals: merge_segs(reals) })
    }

    pub fn intersection(&self, o: &Outcomes) -> Outcomes {
        let (a, b) = (self.parts(), o.parts());
        Outcomes::from_parts(Parts {
            strs: a.strs.intersect(&b.strs),
            reals: intersect_segs(&a.reals, &b.reals),
        })
    }

    /// Complement taken within the sorts the set occupies: a set of reals is
    /// complemented within the reals, a set of strings within the strings,
    /// a mixed set within both, and `Empty` becomes the whole universe.
    pub fn complement(&self) -> Outcomes {
        let p = self.parts();
        let has_str = !p.strs.is_empty();
        let has_real = !p.reals.is_empty();
        let strs = if has_str || !has_real {
            StrPart { set: p.strs.set, complemented: !p.strs.complemented }
        } else {
            StrPart::default()
        };
        let reals = if has_real || !has_str { complement_segs(&p.reals) } else { vec![] };
        Outcomes::from_parts(Parts { strs, reals })
    }

    /// Complement within the reals only; strings are dropped.
    pub fn real_complement(&self) -> Outcomes {
        Outcomes::from_parts(Parts {
            strs: StrPart::default(),
            reals: complement_segs(&self.parts().reals),
        })
    }

    /// The real-valued part of the set.
    pub fn real_part(&self) -> Outcomes {
        Outcomes::from_parts(Parts { strs: StrPart::default(), reals: self.parts().reals })
    }

    /// The string-valued part of the set.
    pub fn string_part(&self) -> Outcomes {
        Outcomes::from_parts(Parts { strs: self.parts().strs, reals: vec![] })
    }

    pub fn has_strings(&self) -> bool {
        !self.parts().strs.is_empty()
    }

    pub fn has_reals(&self) -> bool {
        !self.parts().reals.is_empty()
    }

    /// Union members, or the set itself when it is not a union.
    pub fn members(&self) -> Vec<Outcomes> {
        match self {
            Outcomes::Empty => vec![],
            Outcomes::Union { members } => members.clone(),
            other => vec![other.clone()],
        }
    }

    /// Real pieces as `(lo, lo_open, hi, hi_open)`; points have `lo == hi`.
    pub fn real_segments(&self) -> Vec<(f64, bool, f64, bool)> {
        self.parts()
            .reals
            .iter()
            .map(|s| (s.lo, s.lo_open, s.hi, s.hi_open))
            .collect()
    }

    /// Build a set of reals from `(lo, lo_open, hi, hi_open)` pieces.
    pub fn from_segments<I: IntoIterator<Item = (f64, bool, f64, bool)>>(segs: I) -> Outcomes {
        let reals = segs
            .into_iter()
            .filter_map(|(lo, lo_open, hi, hi_open)| Seg::make(lo, lo_open, hi, hi_open))
            .collect();
        Outcomes::from_parts(Parts { strs: StrPart::default(), reals: merge_segs(reals) })
    }

    /// A single finite point, if the set is exactly one real.
    pub fn as_single_real(&self) -> Option<f64> {
        match self {
            Outcomes::FiniteReal { points } if points.len() == 1 => Some(points[0]),
            _ => None,
        }
    }

    /// A single string, if the set is exactly one (non-complemented) string.
    pub fn as_single_str(&self) -> Option<&str> {
        match self {
            Outcomes::FiniteStr { strings, complemented: false } if strings.len() == 1 => {
                Some(&strings[0])
            }
            _ => None,
        }
    }
}

pub(crate) fn fmt_real(r: f64) -> String {
    if r == f64::INFINITY {
        "inf".into()
    } else if r == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{r:?}")
    }
}

impl fmt::Display for Outcomes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcomes::Empty => write!(f, "{{}}"),
            Outcomes::FiniteStr { strings, complemented } => {
                let body: Vec<String> = strings.iter().map(|s| format!("{s:?}")).collect();
                let prefix = if *complemented { "~" } else { "" };
                write!(f, "{prefix}{{{}}}", body.join(", "))
            }
            Outcomes::FiniteReal { points } => {
                let body: Vec<String> = points.iter().map(|r| fmt_real(*r)).collect();
                write!(f, "{{{}}}", body.join(", "))
            }
            Outcomes::Interval(i) => write!(
                f,
                "{}{}, {}{}",
                if i.lo_open { "(" } else { "[" },
                fmt_real(i.lo),
                fmt_real(i.hi),
                if i.hi_open { ")" } else { "]" }
            ),
            Outcomes::Union { members } => {
                let body: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                write!(f, "{}", body.join(" U "))
            }
        }
    }
}
