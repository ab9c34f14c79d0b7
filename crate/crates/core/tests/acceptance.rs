//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use spe_core::events::{clause_event, disjoint_p, Event};
use spe_core::inference::{condition, condition0, visit_count_probe};
use spe_core::outcomes::{Outcome, Outcomes};
use spe_core::spe::{Node, NodeId, SpeGraph};
use spe_core::transforms::Transform;
use spe_core::translator::{parse_event, spe_to_program, translate_source, TranslateOptions};
use spe_core::{Error, Var};

fn report(n: usize, name: &str, ok: bool, start: Instant, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n} ({name}): {verdict} in {:.3}s {detail}", start.elapsed().as_secs_f64());
}

fn event(g: &SpeGraph, root: NodeId, text: &str) -> Event {
    parse_event(text, g.scope(root)).unwrap()
}

/// Sum below `n`, looking through a product.
fn sum_under(g: &SpeGraph, n: NodeId) -> Option<NodeId> {
    match g.node(n) {
        Node::Sum { .. } => Some(n),
        Node::Product { children } => children.iter().copied().find(|c| matches!(g.node(*c), Node::Sum { .. })),
        Node::Leaf { .. } => None,
    }
}

#[test]
fn c1_indian_gpa_end_to_end() {
    let start = Instant::now();
    let t = translate(GPA, true);
    let mut g = t.graph;
    let e = event(&g, t.root, "((Nationality == 'USA') and (GPA > 3)) or (8 < GPA < 10)");
    let post = condition(&mut g, t.root, &e).unwrap();

    let (kids, w) = sum_weights(&g, post).expect("posterior root is a sum");
    let usa = event(&g, post, "Nationality == 'USA'");
    let (mut w_india, mut w_usa, mut usa_node) = (f64::NAN, f64::NAN, None);
    for (k, wk) in kids.iter().zip(&w) {
        if g.prob(*k, &usa).unwrap() > 0.5 {
            w_usa = *wk;
            usa_node = Some(*k);
        } else {
            w_india = *wk;
        }
    }
    let (_, mut inner) = sum_weights(&g, sum_under(&g, usa_node.unwrap()).unwrap()).unwrap();
    inner.sort_by(f64::total_cmp);

    // India keeps only uniform mass on (8, 10): .9 * .2; USA keeps the atom
    // at 4 (.15) and the uniform on (3, 4] (.85 * .25).
    let (india, us) = (0.5 * 0.9 * 0.2, 0.5 * (0.15 + 0.85 * 0.25));
    let exact_root = [india / (india + us), us / (india + us)];
    let exact_usa = [0.15 / 0.3625, 0.2125 / 0.3625];
    let got_root = [w_india, w_usa];
    let got_usa = [inner[0], inner[1]];
    let printed_root = [0.33, 0.67];
    let printed_usa = [0.41, 0.59];
    let mut ok = true;
    for i in 0..2 {
        ok &= (got_root[i] - exact_root[i]).abs() <= 1e-9 && (got_root[i] - printed_root[i]).abs() <= 5e-3;
        ok &= (got_usa[i] - exact_usa[i]).abs() <= 1e-9 && (got_usa[i] - printed_usa[i]).abs() <= 5e-3;
    }
    ok &= start.elapsed().as_secs_f64() < 1.0;
    report(1, "indian gpa", ok, start, &format!("root {got_root:?} usa {got_usa:?}"));
    assert!(ok);
}

#[test]
fn c2_poly_invert_preimage() {
    let start = Instant::now();
    let t = Transform::poly(Transform::id("X"), &[0.0, 6.0, 1.0, -1.0]).unwrap();
    // the left branch covers X < 1
    let pre = t.preimg(&Outcomes::closed(0.0, 2.0)).intersection(&Outcomes::interval(f64::NEG_INFINITY, true, 1.0, true));
    let segs = pre.real_segments();
    let printed = [(-2.174, -2.0), (0.0, 0.321)];
    let mut ok = segs.len() == 2;
    let mut worst: f64 = 0.0;
    if ok {
        for ((lo, _, hi, _), (plo, phi)) in segs.iter().zip(printed) {
            worst = worst.max((lo - plo).abs()).max((hi - phi).abs());
        }
        ok &= worst <= 1e-3;
    }

    // Component weights of the conditioned left branch. The right branch is
    // taken as 5*sqrt(X) - 9, whose preimage of [0, 2] is [81/25, 121/25].
    let src = POLY.replace("5*sqrt(X) + 11", "5*sqrt(X) - 9");
    let tr = translate(&src, true);
    let mut g = tr.graph;
    let e = event(&g, tr.root, "Z**2 <= 4 and Z >= 0");
    let post = condition(&mut g, tr.root, &e).unwrap();
    let (kids, w) = sum_weights(&g, post).unwrap();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (k, wk) in kids.iter().zip(&w) {
        let lo = event(&g, post, "X < 1");
        if g.prob(*k, &lo).unwrap() > 0.5 {
            left.push(*wk);
        } else {
            right.push(*wk);
        }
    }
    left.sort_by(f64::total_cmp);
    let weights_ok = left.len() == 2 && (left[0] - 0.16).abs() <= 1e-2 && (left[1] - 0.49).abs() <= 1e-2;
    ok &= weights_ok;
    ok &= start.elapsed().as_secs_f64() < 1.0;
    report(
        2,
        "poly invert",
        ok,
        start,
        &format!("preimage {segs:?} (worst endpoint error {worst:.2e}), left weights {left:?}, right {right:?}"),
    );
    assert!(weights_ok, "left weights {left:?}");
    assert!(ok, "preimage endpoints {segs:?} differ from the printed values by {worst:.2e}");
}

#[test]
fn c3_disjoin_bound() {
    let start = Instant::now();
    let r = &mut ChaCha8Rng::seed_from_u64(3);
    let mut ok = true;
    let mut detail = String::new();
    for case in 0..200 {
        let h = r.random_range(1..=3);
        let m = r.random_range(1..=5);
        let vars: Vec<Var> = (0..h).map(|i| Var::new(&format!("X{i}"))).collect();
        let e = random_boxes(r, &vars, m);
        let m = e.normalized_clauses().len();
        let h = e.vars().len();
        let cs = e.disjoint_clauses();
        let evs: Vec<Event> = cs.iter().map(clause_event).collect();
        let bound = (2 * m - 1).pow(h as u32);
        if cs.len() > bound {
            ok = false;
            detail = format!("case {case}: {} clauses > {bound}", cs.len());
        }
        for (i, a) in evs.iter().enumerate() {
            for b in &evs[i + 1..] {
                if !disjoint_p(a, b) {
                    ok = false;
                    detail = format!("case {case}: clauses overlap");
                }
            }
        }
        let d = Event::or(evs.clone());
        for _ in 0..1000 {
            let p: BTreeMap<Var, Outcome> = vars.iter().map(|v| (v.clone(), Outcome::Real(r.random_range(-5.0..8.0)))).collect();
            if holds(&e, &p) != holds(&d, &p) {
                ok = false;
                detail = format!("case {case}: disagreement at {p:?}");
            }
        }
    }
    // two overlapping boxes split into five
    let bx = |lo: [f64; 3], hi: [f64; 3]| {
        Event::and((0..3).map(|i| Event::contains(Transform::id(format!("X{i}").as_str()), Outcomes::closed(lo[i], hi[i]))).collect())
    };
    let two = Event::or(vec![bx([0.0, 0.0, 0.0], [2.0, 2.0, 2.0]), bx([1.0, 1.0, -1.0], [3.0, 3.0, 3.0])]);
    let five = two.disjoint_clauses().len();
    ok &= five == 5;
    ok &= start.elapsed().as_secs_f64() < 10.0;
    report(3, "disjoin bound", ok, start, &format!("two-box instance: {five} clauses {detail}"));
    assert!(ok, "{detail}");
}

/// Positive-probability event on a random SPE, skipping events beyond the
/// clause limit.
fn probe(r: &mut dyn RngCore, g: &SpeGraph, root: NodeId, specs: &[VarSpec], min_p: f64) -> (Event, f64) {
    loop {
        let e = random_event(r, specs, 2);
        match g.prob(root, &e) {
            Ok(p) if p >= min_p => return (e, p),
            Ok(_) | Err(Error::TooManyClauses { .. }) => continue,
            Err(err) => panic!("{err}"),
        }
    }
}

#[test]
fn c4_closure() {
    let start = Instant::now();
    let r = &mut ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut skipped, mut worst) = (0, 0, 0.0f64);
    let mut spes = 0;
    while spes < 100 {
        let (mut g, root, specs) = random_spe(r, 4, 3);
        let (e, pe) = probe(r, &g, root, &specs, 1e-9);
        let post = match condition(&mut g, root, &e) {
            Ok(p) => p,
            Err(Error::TooManyClauses { .. }) => continue,
            Err(err) => panic!("{err}"),
        };
        spes += 1;
        for _ in 0..50 {
            let (f, _) = probe(r, &g, root, &specs, 0.0);
            match g.prob(root, &Event::and(vec![e.clone(), f.clone()])) {
                Ok(joint) => {
                    let lhs = g.prob(post, &f).unwrap();
                    worst = worst.max((lhs - joint / pe).abs());
                    checked += 1;
                }
                Err(Error::TooManyClauses { .. }) => skipped += 1,
                Err(err) => panic!("{err}"),
            }
        }
    }
    let ok = worst <= 1e-9 && start.elapsed().as_secs_f64() < 60.0;
    report(4, "closure", ok, start, &format!("{checked} probes, {skipped} over the clause limit, max error {worst:.2e}"));
    assert!(ok);
}

/// A conjunction with a literal on every base variable, positive at every
/// node, or `None` after a few attempts.
fn covering_conjunction(r: &mut dyn RngCore, g: &SpeGraph, root: NodeId, vars: &[(Var, Kind)]) -> Option<Event> {
    'attempt: for _ in 0..50 {
        let e = random_conjunction(r, vars);
        for n in g.reachable(root) {
            let scope = g.scope(n);
            let mine: Vec<Event> = match &e {
                Event::And(ls) => ls.iter().filter(|l| l.vars().iter().all(|v| scope.contains(v))).cloned().collect(),
                l => vec![l.clone()],
            };
            if mine.is_empty() || g.prob(n, &Event::and(mine)).unwrap() <= 0.0 {
                continue 'attempt;
            }
        }
        return Some(e);
    }
    None
}

#[test]
fn c5_linear_time_conditioning() {
    let start = Instant::now();
    let mut ok = true;
    let mut lines = Vec::new();

    let t = translate(&hmm_source(10), true);
    let (g, root) = (&t.graph, t.root);
    let mut parts = Vec::new();
    let r = &mut ChaCha8Rng::seed_from_u64(5);
    for v in g.scope(root) {
        let name = v.as_str();
        let set = if name.starts_with('X') {
            let a = r.random_range(-2.0..6.0);
            Outcomes::closed(a, a + r.random_range(2.0..12.0))
        } else if name.starts_with('Y') {
            Outcomes::closed(0.0, r.random_range(0..12) as f64)
        } else {
            Outcomes::points([0.0, 1.0])
        };
        parts.push(Event::contains(Transform::Identity(v.clone()), set));
    }
    let e = Event::and(parts);
    let visits = visit_count_probe(g, root, &e).unwrap();
    let reach = g.node_count(root);
    ok &= visits == reach;
    lines.push(format!("hmm(10): {visits} visits / {reach} nodes"));

    let mut done = 0;
    let mut mismatches = 0;
    while done < 50 {
        let (g, root, specs) = random_spe(r, 4, 3);
        let vars: Vec<(Var, Kind)> = specs.iter().map(|s| (s.var.clone(), s.kind.clone())).collect();
        let Some(e) = covering_conjunction(r, &g, root, &vars) else { continue };
        let visits = visit_count_probe(&g, root, &e).unwrap();
        if visits != g.node_count(root) {
            mismatches += 1;
            lines.push(format!("mismatch: {visits} visits / {} nodes", g.node_count(root)));
        }
        done += 1;
    }
    ok &= mismatches == 0;
    report(5, "linear-time conditioning", ok, start, &lines.join("; "));
    assert!(ok);
}

#[test]
fn c6_hmm_scaling() {
    let start = Instant::now();
    let counts: Vec<f64> = [2, 4, 8, 16].iter().map(|n| translate(&hmm_source(*n), true).stats.nodes).collect();
    let ratios: Vec<f64> = counts.windows(2).map(|w| w[1] / w[0]).collect();
    let plain = translate(&hmm_source(8), false).stats.nodes;
    let blowup = plain / counts[2];
    let ok = ratios.iter().all(|r| *r <= 2.2) && blowup >= 10.0;
    report(
        6,
        "hmm scaling",
        ok,
        start,
        &format!("optimized {counts:?} ratios {ratios:.3?}; unoptimized n=8 {plain} ({blowup:.1}x)"),
    );
    assert!(ok);
}

const HMM3: &str = "\
p_init = 0.3
p_next = [0.2, 0.7]
mu = [0, 2.5]
Z = array(3)
X = array(3)
Z[0] ~ bernoulli(p=p_init)
for t in range(1, 3):
    switch Z[t-1] cases (z in [0, 1]):
        Z[t] ~ bernoulli(p=p_next[z])
for t in range(3):
    switch Z[t] cases (z in [0, 1]):
        X[t] ~ normal(mu[z], 1)
";

#[test]
fn c7_measure_zero_conditioning() {
    let start = Instant::now();
    let obs = [0.4, 2.9, 1.1];
    let (p_init, p_next, mu) = (0.3, [0.2, 0.7], [0.0, 2.5]);

    // brute force over the eight hidden paths
    let npdf = |x: f64, m: f64| (-(x - m) * (x - m) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut joint = [0.0; 8];
    for (path, j) in joint.iter_mut().enumerate() {
        let z = [(path >> 2) & 1, (path >> 1) & 1, path & 1];
        let mut p = if z[0] == 1 { p_init } else { 1.0 - p_init };
        for t in 1..3 {
            let q = p_next[z[t - 1]];
            p *= if z[t] == 1 { q } else { 1.0 - q };
        }
        for t in 0..3 {
            p *= npdf(obs[t], mu[z[t]]);
        }
        *j = p;
    }
    let total: f64 = joint.iter().sum();
    let oracle: Vec<f64> = (0..3)
        .map(|t| (0..8).filter(|path| (path >> (2 - t)) & 1 == 1).map(|p| joint[p]).sum::<f64>() / total)
        .collect();

    let constrain = format!("{HMM3}constrain(X[0] == {} and X[1] == {} and X[2] == {})\n", obs[0], obs[1], obs[2]);
    let a = translate(&constrain, true);
    let b = translate(HMM3, true);
    let mut g = b.graph;
    let e = event(&g, b.root, &format!("X[0] == {} and X[1] == {} and X[2] == {}", obs[0], obs[1], obs[2]));
    let post = condition0(&mut g, b.root, &e).unwrap();

    let mut worst = 0.0f64;
    let mut got = Vec::new();
    for (t, want) in oracle.iter().enumerate() {
        let q = format!("Z[{t}] == 1");
        let x = a.graph.prob(a.root, &event(&a.graph, a.root, &q)).unwrap();
        let y = g.prob(post, &event(&g, post, &q)).unwrap();
        worst = worst.max((x - want).abs()).max((y - want).abs());
        got.push(x);
    }
    let ok = worst <= 1e-9;
    report(7, "measure-zero conditioning", ok, start, &format!("posterior {got:?} oracle {oracle:?} max error {worst:.2e}"));
    assert!(ok);
}

#[test]
fn c8_round_trip() {
    let start = Instant::now();
    let r = &mut ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut checked) = (0.0f64, 0);
    for _ in 0..100 {
        let (g, root, specs) = random_spe(r, 4, 3);
        let text = spe_to_program(&g, root).unwrap();
        let back = translate_source(&text, TranslateOptions::default()).unwrap();
        for _ in 0..50 {
            let (e, p) = probe(r, &g, root, &specs, 0.0);
            match back.graph.prob(back.root, &e) {
                Ok(q) => {
                    worst = worst.max((p - q).abs());
                    checked += 1;
                }
                Err(Error::TooManyClauses { .. }) => {}
                Err(err) => panic!("{err}"),
            }
        }
    }
    let ok = worst <= 1e-9;
    report(8, "round trip", ok, start, &format!("{checked} probes, max error {worst:.2e}"));
    assert!(ok);
}

struct Subject {
    name: String,
    src: String,
    vars: Vec<(String, bool)>,
    strings: Vec<&'static str>,
}

fn named(vars: &[(&str, bool)]) -> Vec<(String, bool)> {
    vars.iter().map(|(v, r)| (v.to_string(), *r)).collect()
}

#[test]
fn c9_monte_carlo_consistency() {
    let start = Instant::now();
    let r = &mut ChaCha8Rng::seed_from_u64(9);
    let mut subjects = vec![
        Subject {
            name: "indian gpa".into(),
            src: GPA.into(),
            vars: named(&[("Nationality", false), ("Perfect", true), ("GPA", true)]),
            strings: vec!["India", "USA"],
        },
        Subject {
            name: "hmm".into(),
            src: HMM.into(),
            vars: named(&[
                ("separated", true),
                ("Z[0]", true),
                ("Z[1]", true),
                ("Z[50]", true),
                ("X[0]", true),
                ("X[1]", true),
                ("X[99]", true),
                ("Y[0]", true),
                ("Y[2]", true),
            ]),
            strings: vec![],
        },
        Subject {
            name: "poly invert".into(),
            src: POLY.into(),
            vars: named(&[("X", true), ("Z", true)]),
            strings: vec![],
        },
    ];
    while subjects.len() < 13 {
        let (src, vars) = random_program(r);
        if translate_source(&src, TranslateOptions::default()).is_ok() {
            subjects.push(Subject { name: format!("random {}", subjects.len() - 2), src, vars, strings: vec!["a", "b", "c"] });
        }
    }

    let n = 100_000;
    let mut ok = true;
    let mut detail = Vec::new();
    for s in &subjects {
        let t = translate(&s.src, true);
        let vars: Vec<Var> = s.vars.iter().map(|(v, _)| Var::new(v)).collect();
        let rows = t.graph.simulate_vars(t.root, &vars, n, r).unwrap();
        let rows: Vec<BTreeMap<Var, Outcome>> =
            rows.into_iter().map(|row| vars.iter().cloned().zip(row).collect()).collect();
        let mut events = 0;
        let mut worst_z = 0.0f64;
        while events < 20 {
            let text = if s.strings.is_empty() {
                let reals: Vec<(String, bool)> = s.vars.clone();
                random_event_text_with(r, &reals, &["a"], 2)
            } else {
                random_event_text_with(r, &s.vars, &s.strings, 2)
            };
            let e = event(&t.graph, t.root, &text);
            let p = match t.graph.prob(t.root, &e) {
                Ok(p) => p,
                Err(Error::TooManyClauses { .. }) => continue,
                Err(err) => panic!("{err}"),
            };
            events += 1;
            let hits = rows.iter().filter(|a| holds(&e, a)).count();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let dev = (hits as f64 / n as f64 - p).abs();
            let pass = dev <= 5.0 * se + 1e-12;
            if se > 0.0 {
                worst_z = worst_z.max(dev / se);
            }
            if !pass {
                ok = false;
                detail.push(format!("{}: {text}: exact {p} vs {}", s.name, hits as f64 / n as f64));
            }
        }
        detail.push(format!("{} worst {worst_z:.2} se", s.name));
    }
    report(9, "monte carlo consistency", ok, start, &detail.join("; "));
    assert!(ok);
}

