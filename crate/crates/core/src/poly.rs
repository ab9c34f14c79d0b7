//! Real polynomials with ascending coefficients: roots, limits and
//! sublevel sets.

use crate::outcomes::Outcomes;
use crate::{Error, Result};

/// Drop trailing zero coefficients.
pub fn strip(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    c
}

pub fn degree(coeffs: &[f64]) -> Option<usize> {
    let c = strip(coeffs);
    if c.is_empty() {
        None
    } else {
        Some(c.len() - 1)
    }
}

/// Horner evaluation; infinite arguments return the limit.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    if x.is_infinite() {
        let (lo, hi) = poly_lim(coeffs);
        return if x > 0.0 { hi } else { lo };
    }
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * i as f64)
        .collect()
}

/// Limits of the polynomial at `-inf` and `+inf`.
pub fn poly_lim(coeffs: &[f64]) -> (f64, f64) {
    let c = strip(coeffs);
    match c.len() {
        0 => (0.0, 0.0),
        1 => (c[0], c[0]),
        n => {
            let lead = c[n - 1];
            let hi = lead.signum() * f64::INFINITY;
            let lo = if (n - 1) % 2 == 0 { hi } else { -hi };
            (lo, hi)
        }
    }
}

fn magnitude(coeffs: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * ax + c.abs())
}

fn same_root(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn quadratic_roots(c: &[f64]) -> Vec<f64> {
    let (a, b, k) = (c[2], c[1], c[0]);
    let disc = b * b - 4.0 * a * k;
    let scale = b * b + (4.0 * a * k).abs();
    if disc < -1e-14 * scale {
        return vec![];
    }
    if disc <= 1e-14 * scale {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    let mut r = vec![q / a, k / q];
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r
}

fn bisect(c: &[f64], mut a: f64, mut b: f64) -> f64 {
    let mut fa = eval(c, a);
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// A few Newton steps, kept only while the residual shrinks.
fn polish(c: &[f64], mut x: f64) -> f64 {
    let d = derivative(c);
    let mut fx = eval(c, x).abs();
    for _ in 0..8 {
        if fx == 0.0 {
            break;
        }
        let dx = eval(&d, x);
        if dx == 0.0 {
            break;
        }
        let y = x - eval(c, x) / dx;
        let fy = eval(c, y).abs();
        if fy < fx {
            x = y;
            fx = fy;
        } else {
            break;
        }
    }
    x
}

/// Real roots of a stripped polynomial of degree at least one.
fn real_roots(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    match n {
        1 => return vec![-c[0] / c[1]],
        2 => return quadratic_roots(c),
        _ => {}
    }
    let crit = real_roots(&strip(&derivative(c)));
    let lead = c[n];
    let bound = 1.0 + c[..n].iter().map(|a| (a / lead).abs()).fold(0.0, f64::max);
    let mut pts = vec![-bound];
    pts.extend(crit.iter().copied().filter(|x| x.abs() < bound));
    pts.push(bound);
    // Critical points where the polynomial touches zero are multiple roots;
    // treat their sign as exactly zero so neighbouring intervals skip them.
    let sign = |x: f64| {
        let v = eval(c, x);
        if v.abs() <= 1e-12 * magnitude(c, x) {
            0.0
        } else {
            v.signum()
        }
    };
    let signs: Vec<f64> = pts.iter().map(|x| sign(*x)).collect();
    let mut roots = Vec::new();
    for i in 0..pts.len() {
        if signs[i] == 0.0 && i > 0 && i + 1 < pts.len() {
            roots.push(pts[i]);
        }
        if i + 1 < pts.len() && signs[i] * signs[i + 1] < 0.0 {
            roots.push(bisect(c, pts[i], pts[i + 1]));
        }
    }
    roots
}

/// Distinct real roots in ascending order. Degree one and two use closed
/// forms; higher degrees isolate roots between critical points and bisect.
/// Every root is polished with Newton steps and roots within 1e-9 merged.
pub fn roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    let c = strip(coeffs);
    if c.is_empty() {
        return Err(Error::DegeneratePolynomial("all coefficients are zero".into()));
    }
    if c.len() == 1 {
        return Ok(vec![]);
    }
    let mut rs: Vec<f64> = real_roots(&c).into_iter().map(|x| polish(&c, x)).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(rs.len());
    for r in rs {
        match out.last() {
            Some(prev) if same_root(*prev, r) => {}
            _ => out.push(r),
        }
    }
    Ok(out)
}

/// Solutions of `p(x) = r` over the extended reals. For infinite `r` the
/// answer is the set of infinities at which `p` tends to `r`.
pub fn poly_solve(r: f64, coeffs: &[f64]) -> Result<Vec<f64>> {
    let c = strip(coeffs);
    if c.len() < 2 {
        return Err(Error::DegeneratePolynomial("degree must be at least one".into()));
    }
    if r.is_infinite() {
        let (lo, hi) = poly_lim(&c);
        let mut out = Vec::new();
        if lo == r {
            out.push(f64::NEG_INFINITY);
        }
        if hi == r {
            out.push(f64::INFINITY);
        }
        return Ok(out);
    }
    let mut shifted = c;
    shifted[0] -= r;
    roots(&shifted)
}

/// `{x in R : p(x) < r}` when `strict`, else `{x : p(x) <= r}`.
pub fn poly_lte(strict: bool, r: f64, coeffs: &[f64]) -> Result<Outcomes> {
    let c = strip(coeffs);
    if c.len() < 2 {
        return Err(Error::DegeneratePolynomial("degree must be at least one".into()));
    }
    if r == f64::INFINITY {
        return Ok(Outcomes::reals());
    }
    if r == f64::NEG_INFINITY {
        return Ok(Outcomes::Empty);
    }
    let mut q = c;
    q[0] -= r;
    let xs = roots(&q)?;
    let mut breaks = vec![f64::NEG_INFINITY];
    breaks.extend(xs.iter().copied());
    breaks.push(f64::INFINITY);
    let mut segs = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (false, true) => b - 1.0 - b.abs(),
            (true, false) => a + 1.0 + a.abs(),
            (false, false) => 0.0,
        };
        if eval(&q, mid) < 0.0 {
            segs.push((a, strict, b, strict));
        }
    }
    if !strict {
        segs.extend(xs.iter().map(|x| (*x, false, *x, false)));
    }
    Ok(Outcomes::from_segments(segs))
}
