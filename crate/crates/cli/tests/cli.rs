use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spe_core::format::from_json;
use spe_core::inference::condition;
use spe_core::spe::Node;
use spe_core::translator::{parse_event, translate_source, TranslateOptions};

const SPE: &str = env!("CARGO_BIN_EXE_spe");

fn programs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../programs")
}

fn spe(args: &[&str]) -> Output {
    Command::new(SPE).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = spe(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gpa() -> PathBuf {
    programs().join("indian_gpa.sppl")
}

#[test]
fn translate_reports_node_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prior.json");
    let text = ok(&["translate", "--program", p(&gpa()), "--spe-out", p(&out), "--stats"]);
    assert!(text.lines().any(|l| l == "nodes 17"), "{text}");
    let (g, root) = from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(g.validate(root).is_ok());
}

#[test]
fn small_hmm_file_validates() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(programs().join("hmm.sppl")).unwrap().replace("n_step = 100", "n_step = 2");
    let prog = dir.path().join("hmm2.sppl");
    fs::write(&prog, src).unwrap();
    let out = dir.path().join("hmm2.json");
    ok(&["translate", "--program", p(&prog), "--spe-out", p(&out)]);
    let (g, root) = from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(g.validate(root).is_ok());
}

#[test]
fn staged_equals_monolithic() {
    let dir = tempfile::tempdir().unwrap();
    let prior = dir.path().join("prior.json");
    let post = dir.path().join("post.json");
    let e = "((Nationality == 'USA') and (GPA > 3)) or (8 < GPA < 10)";
    ok(&["translate", "--program", p(&gpa()), "--spe-out", p(&prior)]);
    ok(&["condition", "--spe-in", p(&prior), "--event", e, "--spe-out", p(&post)]);

    let t = translate_source(&fs::read_to_string(gpa()).unwrap(), TranslateOptions::default()).unwrap();
    let mut g = t.graph;
    let ev = parse_event(e, g.scope(t.root)).unwrap();
    let root = condition(&mut g, t.root, &ev).unwrap();
    for q in ["Perfect == 1", "GPA > 9", "Nationality == 'India'", "3.5 < GPA <= 4"] {
        let printed = ok(&["query", "--spe-in", p(&post), "--query", "prob", "--event", q]);
        let staged: f64 = printed.trim().parse().unwrap();
        let direct = g.prob(root, &parse_event(q, g.scope(root)).unwrap()).unwrap();
        assert_eq!(staged.to_bits(), direct.to_bits(), "{q}: {printed} vs {direct}");
    }

    // posterior weights
    let (pg, pr) = from_json(&fs::read_to_string(&post).unwrap()).unwrap();
    let Node::Sum { weights, .. } = pg.node(pr) else { panic!("posterior root is not a sum") };
    let z: f64 = weights.iter().sum();
    let mut w: Vec<f64> = weights.iter().map(|w| w / z).collect();
    w.sort_by(f64::total_cmp);
    assert!((w[0] - 0.09 / 0.27125).abs() < 1e-12, "{w:?}");
}

#[test]
fn full_space_condition_keeps_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let post = dir.path().join("post.json");
    ok(&["condition", "--program", p(&gpa()), "--event", "GPA >= 0", "--spe-out", p(&post)]);
    for q in ["GPA <= 4", "Perfect == 1"] {
        let a = ok(&["query", "--program", p(&gpa()), "--query", "prob", "--event", q]);
        let b = ok(&["query", "--spe-in", p(&post), "--query", "prob", "--event", q]);
        let (a, b): (f64, f64) = (a.trim().parse().unwrap(), b.trim().parse().unwrap());
        assert!((a - b).abs() < 1e-12, "{q}: {a} vs {b}");
    }
}

#[test]
fn prob_and_density_values() {
    let text = ok(&["query", "--program", p(&gpa()), "--query", "prob", "--event", "GPA <= 4"]);
    let x: f64 = text.trim().parse().unwrap();
    assert!((x - 0.68).abs() < 1e-12, "{text}");
    assert!(text.trim().len() >= 16, "{text}");

    let text = ok(&["query", "--program", p(&gpa()), "--query", "density", "--event", "Nationality == 'USA' and GPA == 3.5"]);
    let mut it = text.split_whitespace();
    assert_eq!(it.next(), Some("1"));
    let d: f64 = it.next().unwrap().parse().unwrap();
    assert!((d - 0.10625).abs() < 1e-12, "{text}");
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    for out in [&a, &b] {
        ok(&["query", "--program", p(&gpa()), "--query", "simulate", "--samples", "10", "--seed", "0", "--out", p(out)]);
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert_eq!(String::from_utf8(x).unwrap().lines().count(), 11);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sppl");
    fs::write(&bad, "X ~ normal(0,1)\nY ~ normal(0,1)\nZ ~ X/Y**2\n").unwrap();
    let out = spe(&["translate", "--program", p(&bad), "--spe-out", p(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R3"));

    let out = spe(&["condition", "--program", p(&gpa()), "--event", "GPA > 20", "--spe-out", p(&dir.path().join("y.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("y.json").exists());

    let out = spe(&["query", "--program", p(&gpa()), "--query", "prob"]);
    assert_eq!(out.status.code(), Some(1));
    let out = spe(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_round_trip_and_reverse() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["translate", "--program", p(&gpa()), "--spe-out", p(&a)]);
    let text = fs::read_to_string(&a).unwrap();
    let (g, root) = from_json(&text).unwrap();
    fs::write(&b, spe_core::format::to_json(&g, root)).unwrap();
    let (h, r2) = from_json(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(g.node_count(root), h.node_count(r2));
    for q in ["GPA <= 4", "Perfect == 1 and GPA > 3"] {
        let e = parse_event(q, g.scope(root)).unwrap();
        assert_eq!(g.prob(root, &e).unwrap().to_bits(), h.prob(r2, &e).unwrap().to_bits());
    }

    let prog = dir.path().join("rev.sppl");
    fs::write(&prog, ok(&["reverse", "--spe-in", p(&a)])).unwrap();
    let x = ok(&["query", "--program", p(&prog), "--query", "prob", "--event", "GPA <= 4"]);
    assert!((x.trim().parse::<f64>().unwrap() - 0.68).abs() < 1e-12);

    let c = dir.path().join("c.json");
    let rep = ok(&["optimize", "--spe-in", p(&a), "--spe-out", p(&c)]);
    assert!(rep.contains("nodes_after"));
}
