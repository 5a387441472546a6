use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_treecover"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn treecover")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &TempDir, kind: &str, size: usize) -> PathBuf {
    let out = dir.path().join(format!("{kind}_{size}.txt"));
    let o = run(&["generate", kind, &size.to_string(), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn generate_grid_counts() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(generate(&dir, "grid", 4)).unwrap();
    assert_eq!(text.lines().next(), Some("16 24"));
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn generate_is_deterministic() {
    let a = run(&["generate", "random_geometric", "40", "--seed", "7"]);
    let b = run(&["generate", "random_geometric", "40", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn star_weights_double() {
    let o = run(&["generate", "star_exponential", "5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut w: Vec<f64> = text.lines().skip(1).map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap()).collect();
    w.sort_by(f64::total_cmp);
    assert_eq!(w, vec![1.0, 2.0, 4.0, 8.0]);
}

#[test]
fn cover_of_a_tree_is_exact() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "path", 12);
    let stats = dir.path().join("stats.json");
    let cover = dir.path().join("cover.json");
    let o = run(&["cover", "--graph", s(&g), "--out", s(&cover), "--stats", s(&stats)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&stats);
    assert_eq!(v["max_stretch"].as_f64(), Some(1.0));
    assert_eq!(v["individual_lightness"].as_f64(), Some(1.0));
    assert_eq!(v["spanning_failures"].as_u64(), Some(0));
    assert_eq!(v["schema_version"].as_u64(), Some(1));
}

#[test]
fn cover_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "grid", 5);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        assert!(run(&["cover", "--graph", s(&g), "--out", s(out), "--stats", s(&dir.path().join("st.json"))]).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn tampered(dir: &TempDir, g: &Path, edit: impl Fn(&mut Value)) -> Output {
    let cover = dir.path().join("cover.json");
    assert!(run(&["cover", "--graph", s(g), "--out", s(&cover), "--stats", s(&dir.path().join("st.json"))]).status.success());
    let mut v = json(&cover);
    edit(&mut v);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    run(&["verify", "--graph", s(g), "--cover", s(&bad), "--out", s(&dir.path().join("report.json"))])
}

#[test]
fn verify_accepts_a_fresh_cover() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "grid", 4);
    let o = tampered(&dir, &g, |_| {});
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("report.json"))["pass"], Value::Bool(true));
}

#[test]
fn verify_rejects_a_non_graph_edge() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "grid", 4);
    let o = tampered(&dir, &g, |v| v["trees"][0]["edges"][0] = serde_json::json!([0, 15]));
    assert_eq!(o.status.code(), Some(1));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["spanning"]["failures"][0]["kind"], "non_graph_edge");
}

#[test]
fn verify_rejects_n_edges() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "grid", 4);
    let o = tampered(&dir, &g, |v| v["trees"][0]["edges"].as_array_mut().unwrap().push(serde_json::json!([0, 1])));
    assert_eq!(o.status.code(), Some(1));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["spanning"]["pass"], Value::Bool(false));
}

#[test]
fn route_on_a_path_is_exact() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "path", 10);
    let traces = dir.path().join("traces.csv");
    let stats = dir.path().join("route.json");
    let o = run(&["route", "--graph", s(&g), "--out", s(&traces), "--stats", s(&stats)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&stats);
    assert_eq!(v["stretch_max"].as_f64(), Some(1.0));
    assert_eq!(v["unterminated"].as_u64(), Some(0));
    let csv = fs::read_to_string(&traces).unwrap();
    assert!(csv.starts_with("s,t,tree,hop,vertex,port,cumulative_weight\n"));
}

#[test]
fn oracle_answers_queries() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "grid", 4);
    let cover = dir.path().join("cover.json");
    assert!(run(&["cover", "--graph", s(&g), "--out", s(&cover), "--stats", s(&dir.path().join("st.json"))]).status.success());
    let q = dir.path().join("q.txt");
    fs::write(&q, "0 15\n# comment\n5 5\n").unwrap();
    let o = run(&["oracle", "--graph", s(&g), "--cover", s(&cover), "--queries", s(&q)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "u,v,estimate,tree,path_len,path");
    assert!(rows[1].starts_with("0,15,6,"));
    assert!(rows[2].starts_with("5,5,0,"));
}

#[test]
fn bad_config_exits_two() {
    let dir = TempDir::new().unwrap();
    let g = generate(&dir, "path", 4);
    assert_eq!(run(&["cover", "--graph", s(&g), "--epsilon", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["cover", "--graph", s(&g), "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(run(&["cover", "--graph", s(&g), "--pairs", "some"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "torus", "4"]).status.code(), Some(2));
}
