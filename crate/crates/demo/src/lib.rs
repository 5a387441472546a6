//! Browser demo: build a light tree cover for a generated graph, then query
//! the distance oracle and simulate routes. Everything crosses the wasm
//! boundary as JSON strings; `www/index.html` does the drawing.

use serde::Serialize;
use treecover::cover::{light_tree_cover, CoverConfig, LightCover};
use treecover::graph::dijkstra;
use treecover::graph::generate::{generate_with_layout, GraphKind, Layout};
use treecover::hpf::HpfParams;
use treecover::oracle::{build_oracle, OracleIndex};
use treecover::routing::{build_routing_scheme, route_end_to_end, RoutingScheme};
use treecover::WeightedGraph;
use wasm_bindgen::prelude::*;

/// Keeps page builds under a second or two.
pub const MAX_VERTICES: usize = 300;

pub struct Session {
    g: WeightedGraph,
    layout: Layout,
    light: LightCover,
    oracle: OracleIndex,
    scheme: RoutingScheme,
}

#[derive(Serialize)]
struct GraphView<'a> {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    layout: &'a Layout,
    trees: usize,
    spanner_lightness: f64,
}

#[derive(Serialize)]
struct TreeView<'a> {
    index: usize,
    hierarchy: usize,
    offset: usize,
    edges: &'a [(usize, usize)],
}

#[derive(Serialize)]
struct PathView {
    path: Vec<usize>,
    weight: f64,
    tree: Option<usize>,
    d_graph: f64,
    stretch: f64,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("view serializes")
}

impl Session {
    pub fn new(kind: &str, size: usize, seed: u64, epsilon: f64) -> Result<Session, String> {
        let kind: GraphKind = kind.parse().map_err(|e: treecover::GraphError| e.to_string())?;
        let (g, layout) = generate_with_layout(kind, size, seed).map_err(|e| e.to_string())?;
        if g.n() > MAX_VERTICES {
            return Err(format!("{} vertices is more than the demo allows ({MAX_VERTICES})", g.n()));
        }
        let params = HpfParams { epsilon, ..HpfParams::default() };
        let config = CoverConfig { params, seed, ..CoverConfig::default() };
        let light = light_tree_cover(&g, &config).map_err(|e| e.to_string())?;
        let oracle = build_oracle(&g, &light.build.cover).map_err(|e| e.to_string())?;
        let scheme = build_routing_scheme(&g, &light, seed, None).map_err(|e| e.to_string())?;
        Ok(Session { g, layout, light, oracle, scheme })
    }

    pub fn graph_json(&self) -> String {
        to_json(&GraphView {
            n: self.g.n(),
            edges: self.g.edges().iter().map(|e| (e.u, e.v, e.w)).collect(),
            layout: &self.layout,
            trees: self.light.build.cover.trees.len(),
            spanner_lightness: self.light.spanner_lightness,
        })
    }

    pub fn tree_json(&self, index: usize) -> Result<String, String> {
        let t = self.light.build.cover.trees.get(index).ok_or_else(|| format!("no tree {index}"))?;
        Ok(to_json(&TreeView { index, hierarchy: t.provenance.hierarchy, offset: t.provenance.offset, edges: &t.edges }))
    }

    fn check(&self, u: usize, v: usize) -> Result<f64, String> {
        if u >= self.g.n() || v >= self.g.n() {
            return Err(format!("vertex out of range (n = {})", self.g.n()));
        }
        Ok(dijkstra(&self.g, u, None).map_err(|e| e.to_string())?.dist[v])
    }

    pub fn query_json(&self, u: usize, v: usize) -> Result<String, String> {
        let d = self.check(u, v)?;
        let (path, est) = self.oracle.query_path(u, v);
        Ok(to_json(&PathView { path, weight: est.distance, tree: Some(est.tree), d_graph: d, stretch: ratio(est.distance, d) }))
    }

    pub fn route_json(&self, u: usize, v: usize) -> Result<String, String> {
        let d = self.check(u, v)?;
        let e = route_end_to_end(&self.g, &self.scheme, u, v).map_err(|e| e.to_string())?;
        if !e.trace.terminated {
            return Err(e.trace.error.unwrap_or_else(|| "route did not terminate".into()));
        }
        Ok(to_json(&PathView { path: e.trace.vertices, weight: e.trace.weight, tree: e.tree, d_graph: d, stretch: ratio(e.trace.weight, d) }))
    }
}

fn ratio(x: f64, d: f64) -> f64 {
    if d > 0.0 {
        x / d
    } else {
        1.0
    }
}

#[wasm_bindgen]
pub struct Demo {
    inner: Session,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, size: usize, seed: u32, epsilon: f64) -> Result<Demo, JsValue> {
        Session::new(kind, size, seed as u64, epsilon).map(|inner| Demo { inner }).map_err(|e| JsValue::from_str(&e))
    }

    pub fn graph(&self) -> String {
        self.inner.graph_json()
    }

    pub fn tree(&self, index: usize) -> Result<String, JsValue> {
        self.inner.tree_json(index).map_err(|e| JsValue::from_str(&e))
    }

    pub fn query(&self, u: usize, v: usize) -> Result<String, JsValue> {
        self.inner.query_json(u, v).map_err(|e| JsValue::from_str(&e))
    }

    pub fn route(&self, u: usize, v: usize) -> Result<String, JsValue> {
        self.inner.route_json(u, v).map_err(|e| JsValue::from_str(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn grid_session_round_trip() {
        let s = Session::new("grid", 5, 1, 0.25).unwrap();
        let g = parse(&s.graph_json());
        assert_eq!(g["n"], 25);
        assert_eq!(g["edges"].as_array().unwrap().len(), 40);
        let t = parse(&s.tree_json(0).unwrap());
        assert_eq!(t["edges"].as_array().unwrap().len(), 24);
        let q = parse(&s.query_json(0, 24).unwrap());
        assert_eq!(q["d_graph"], 8.0);
        assert!(q["stretch"].as_f64().unwrap() >= 1.0);
        let r = parse(&s.route_json(0, 24).unwrap());
        assert_eq!(r["path"][0], 0);
        assert_eq!(r["path"].as_array().unwrap().last().unwrap(), 24);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Session::new("torus", 4, 1, 0.25).is_err());
        assert!(Session::new("path", MAX_VERTICES + 1, 1, 0.25).is_err());
        let s = Session::new("path", 6, 1, 0.25).unwrap();
        assert!(s.query_json(0, 6).is_err());
        assert!(s.tree_json(10_000).is_err());
    }
}
