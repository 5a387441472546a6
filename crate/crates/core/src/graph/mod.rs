//! Weighted graphs and exact shortest paths.
//!
//! Every construction in the crate is checked against the Dijkstra and APSP
//! routines here, so they favour determinism over speed: ties are broken by
//! predecessor id, then edge id.

pub mod generate;
pub mod io;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for every floating comparison in the crate.
pub const TOL: f64 = 1e-9;
/// Largest vertex count `apsp` accepts unless told otherwise.
pub const DEFAULT_APSP_CAP: usize = 2000;

pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("edge {u}-{v} has nonpositive weight {w}")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: usize, v: usize },
    #[error("self-loop at vertex {v}")]
    SelfLoop { v: usize },
    #[error("vertex {v} out of range (n = {n})")]
    VertexOutOfRange { v: usize, n: usize },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("graph has no vertices")]
    Empty,
    #[error("apsp on {n} vertices exceeds the cap of {cap}")]
    ApspCapExceeded { n: usize, cap: usize },
    #[error("bad generator parameters: {0}")]
    Generator(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// One adjacency entry: the neighbour, the weight, and the edge id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub to: usize,
    pub w: f64,
    pub edge: EdgeId,
}

/// Undirected, connected, positively weighted simple graph on `0..n`.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<Arc>>,
    index: HashMap<(usize, usize), EdgeId>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl WeightedGraph {
    /// Validates and builds. Edge ids follow input order; endpoints are
    /// stored with `u < v`.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut stored = Vec::new();
        let mut index = HashMap::new();
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { v: x, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { v: u });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(GraphError::NonPositiveWeight { u, v, w });
            }
            let k = key(u, v);
            if index.insert(k, stored.len()).is_some() {
                return Err(GraphError::DuplicateEdge { u: k.0, v: k.1 });
            }
            stored.push(Edge { u: k.0, v: k.1, w });
        }
        let mut adj = vec![Vec::new(); n];
        for (id, e) in stored.iter().enumerate() {
            adj[e.u].push(Arc { to: e.v, w: e.w, edge: id });
            adj[e.v].push(Arc { to: e.u, w: e.w, edge: id });
        }
        for list in &mut adj {
            list.sort_by_key(|a| a.to);
        }
        let g = WeightedGraph { n, edges: stored, adj, index };
        let components = g.component_count();
        if components > 1 {
            return Err(GraphError::Disconnected { components });
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    pub fn neighbors(&self, v: usize) -> &[Arc] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<EdgeId> {
        self.index.get(&key(u, v)).copied()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.w).min_by(f64::total_cmp)
    }

    fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.n);
        let mut comps = self.n;
        for e in &self.edges {
            if uf.union(e.u, e.v) {
                comps -= 1;
            }
        }
        comps
    }

    /// Same graph with every weight multiplied by `factor`; edge ids kept.
    pub fn scaled(&self, factor: f64) -> WeightedGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.w *= factor;
        }
        for list in &mut g.adj {
            for a in list.iter_mut() {
                a.w *= factor;
            }
        }
        g
    }

    /// Subgraph on the given edge ids (must stay connected). Edge ids of
    /// the result follow the order of `ids`.
    pub fn subgraph(&self, ids: &[EdgeId]) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::new(self.n, ids.iter().map(|&i| {
            let e = self.edges[i];
            (e.u, e.v, e.w)
        }))
    }
}

/// A walk given by its vertices and the edges between consecutive ones.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    pub fn single(v: usize) -> Self {
        Path { vertices: vec![v], edges: Vec::new() }
    }

    pub fn first(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().expect("empty path")
    }

    pub fn weight(&self, g: &WeightedGraph) -> f64 {
        self.edges.iter().map(|&e| g.edge(e).w).sum()
    }

    /// Vertices `from..to` (exclusive) with their internal edges.
    pub fn slice(&self, from: usize, to: usize) -> Path {
        let vertices = self.vertices[from..to].to_vec();
        let edges = if to > from + 1 { self.edges[from..to - 1].to_vec() } else { Vec::new() };
        Path { vertices, edges }
    }
}

#[derive(Clone, Debug)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
    pub parent_edge: Vec<Option<EdgeId>>,
}

impl ShortestPathTree {
    pub fn reached(&self, v: usize) -> bool {
        self.dist[v].is_finite()
    }

    /// Path from the (nearest) source to `v`, or `None` if unreached.
    pub fn path_to(&self, v: usize) -> Option<Path> {
        if !self.reached(v) {
            return None;
        }
        let mut vertices = vec![v];
        let mut edges = Vec::new();
        let mut cur = v;
        while let (Some(p), Some(e)) = (self.parent[cur], self.parent_edge[cur]) {
            vertices.push(p);
            edges.push(e);
            cur = p;
        }
        vertices.reverse();
        edges.reverse();
        Some(Path { vertices, edges })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    d: f64,
    v: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.d.total_cmp(&self.d).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Options for the general search. `edge_ok` filters usable edges; the
/// search stops expanding past `bound`, and returns as soon as a vertex
/// satisfying `target` is settled.
pub struct Search<'a> {
    pub edge_ok: Option<&'a dyn Fn(EdgeId) -> bool>,
    pub bound: f64,
    pub target: Option<&'a dyn Fn(usize) -> bool>,
}

impl Default for Search<'_> {
    fn default() -> Self {
        Search { edge_ok: None, bound: f64::INFINITY, target: None }
    }
}

/// Multi-source Dijkstra with the crate's tie rules. Returns the tree and,
/// if a target predicate was given, the first target settled.
pub fn search(g: &WeightedGraph, sources: &[usize], opts: &Search<'_>) -> (ShortestPathTree, Option<usize>) {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut parent_edge: Vec<Option<EdgeId>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry { d: 0.0, v: s });
    }
    let mut hit = None;
    while let Some(Entry { d, v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        if let Some(t) = opts.target {
            if t(v) {
                hit = Some(v);
                break;
            }
        }
        for a in g.neighbors(v) {
            if done[a.to] {
                continue;
            }
            if let Some(ok) = opts.edge_ok {
                if !ok(a.edge) {
                    continue;
                }
            }
            let nd = d + a.w;
            if nd > opts.bound + TOL {
                continue;
            }
            let cur = dist[a.to];
            if nd < cur - TOL {
                dist[a.to] = nd;
                parent[a.to] = Some(v);
                parent_edge[a.to] = Some(a.edge);
                heap.push(Entry { d: nd, v: a.to });
            } else if nd <= cur + TOL {
                let better = match (parent[a.to], parent_edge[a.to]) {
                    (Some(p), Some(e)) => (v, a.edge) < (p, e),
                    _ => false,
                };
                if better {
                    parent[a.to] = Some(v);
                    parent_edge[a.to] = Some(a.edge);
                }
                if nd < cur {
                    dist[a.to] = nd;
                    heap.push(Entry { d: nd, v: a.to });
                }
            }
        }
    }
    let source = sources.first().copied().unwrap_or(0);
    (ShortestPathTree { source, dist, parent, parent_edge }, hit)
}

/// Single-source Dijkstra, optionally inside the subgraph induced by
/// `restriction`. Vertices outside the restriction stay at infinity.
pub fn dijkstra(g: &WeightedGraph, source: usize, restriction: Option<&[usize]>) -> Result<ShortestPathTree, GraphError> {
    if source >= g.n() {
        return Err(GraphError::VertexOutOfRange { v: source, n: g.n() });
    }
    match restriction {
        None => Ok(search(g, &[source], &Search::default()).0),
        Some(set) => {
            let mut mask = vec![false; g.n()];
            for &v in set {
                if v >= g.n() {
                    return Err(GraphError::VertexOutOfRange { v, n: g.n() });
                }
                mask[v] = true;
            }
            if !mask[source] {
                let mut t = search(g, &[], &Search::default()).0;
                t.source = source;
                return Ok(t);
            }
            Ok(dijkstra_masked(g, source, &mask))
        }
    }
}

/// Dijkstra inside the subgraph induced by `mask`.
pub fn dijkstra_masked(g: &WeightedGraph, source: usize, mask: &[bool]) -> ShortestPathTree {
    let ok = |e: EdgeId| {
        let e = g.edge(e);
        mask[e.u] && mask[e.v]
    };
    search(g, &[source], &Search { edge_ok: Some(&ok), ..Search::default() }).0
}

/// Row-major n×n matrix of exact distances.
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.d[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.d[u * self.n..(u + 1) * self.n]
    }

    pub fn max_entry(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

pub fn apsp(g: &WeightedGraph) -> Result<DistanceMatrix, GraphError> {
    apsp_with_cap(g, DEFAULT_APSP_CAP)
}

pub fn apsp_with_cap(g: &WeightedGraph, cap: usize) -> Result<DistanceMatrix, GraphError> {
    let n = g.n();
    if n > cap {
        return Err(GraphError::ApspCapExceeded { n, cap });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| search(g, &[s], &Search::default()).0.dist)
        .collect();
    Ok(DistanceMatrix { n, d: rows.concat() })
}

/// Kruskal edge ids in (weight, id) order.
pub fn mst_edges(g: &WeightedGraph) -> Vec<EdgeId> {
    let mut order: Vec<EdgeId> = (0..g.m()).collect();
    order.sort_by(|&a, &b| g.edge(a).w.total_cmp(&g.edge(b).w).then(a.cmp(&b)));
    let mut uf = UnionFind::new(g.n());
    order.into_iter().filter(|&id| uf.union(g.edge(id).u, g.edge(id).v)).collect()
}

pub fn mst_weight(g: &WeightedGraph) -> f64 {
    mst_edges(g).iter().map(|&e| g.edge(e).w).sum()
}

/// Edge ids kept by the greedy (1+ε)-spanner, in increasing (weight, id).
pub fn greedy_spanner_edges(g: &WeightedGraph, epsilon: f64) -> Vec<EdgeId> {
    let mut order: Vec<EdgeId> = (0..g.m()).collect();
    order.sort_by(|&a, &b| g.edge(a).w.total_cmp(&g.edge(b).w).then(a.cmp(&b)));
    let mut kept = vec![false; g.m()];
    let mut chosen = Vec::new();
    for id in order {
        let e = *g.edge(id);
        let bound = (1.0 + epsilon) * e.w;
        let ok = |x: EdgeId| kept[x];
        let is_v = |x: usize| x == e.v;
        let opts = Search { edge_ok: Some(&ok), bound, target: Some(&is_v) };
        let (_, hit) = search(g, &[e.u], &opts);
        if hit.is_none() {
            kept[id] = true;
            chosen.push(id);
        }
    }
    chosen
}

/// Greedy (1+ε)-spanner as a graph on the same vertices.
pub fn greedy_spanner(g: &WeightedGraph, epsilon: f64) -> WeightedGraph {
    let mut ids = greedy_spanner_edges(g, epsilon);
    ids.sort_unstable();
    g.subgraph(&ids).expect("spanner of a connected graph is connected")
}

/// Incrementally maintained distance to a growing vertex set, exact for
/// every vertex within `t` of the set.
pub struct Coverage<'g> {
    g: &'g WeightedGraph,
    t: f64,
    near: Vec<f64>,
}

impl<'g> Coverage<'g> {
    pub fn new(g: &'g WeightedGraph, t: f64) -> Self {
        Coverage { g, t, near: vec![f64::INFINITY; g.n()] }
    }

    pub fn add(&mut self, v: usize) {
        let mut heap = BinaryHeap::new();
        if self.near[v] <= 0.0 {
            return;
        }
        self.near[v] = 0.0;
        heap.push(Entry { d: 0.0, v });
        while let Some(Entry { d, v }) = heap.pop() {
            if d > self.near[v] {
                continue;
            }
            for a in self.g.neighbors(v) {
                let nd = d + a.w;
                if nd > self.t + TOL || nd >= self.near[a.to] {
                    continue;
                }
                self.near[a.to] = nd;
                heap.push(Entry { d: nd, v: a.to });
            }
        }
    }

    /// Distance to the set if at most `t` (plus tolerance), else infinity.
    pub fn distance(&self, v: usize) -> f64 {
        self.near[v]
    }

    /// True when `v` is farther than `t` from every member.
    pub fn is_far(&self, v: usize) -> bool {
        self.near[v] > self.t + TOL
    }
}

/// `base` plus candidates (increasing id) whose distance to every current
/// member exceeds `t`. Sorted output.
pub fn greedy_net(g: &WeightedGraph, candidates: &[usize], base: &[usize], t: f64) -> Vec<usize> {
    let mut cov = Coverage::new(g, t);
    let mut out: Vec<usize> = base.to_vec();
    for &b in base {
        cov.add(b);
    }
    let mut cand = candidates.to_vec();
    cand.sort_unstable();
    cand.dedup();
    for c in cand {
        if cov.is_far(c) {
            cov.add(c);
            out.push(c);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.9)]).unwrap()
    }

    fn cycle4() -> WeightedGraph {
        WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap()
    }

    #[test]
    fn path_distances() {
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let t = dijkstra(&g, 0, None).unwrap();
        assert_eq!(t.dist, vec![0.0, 1.0, 3.0]);
        assert_eq!(t.path_to(2).unwrap().vertices, vec![0, 1, 2]);
    }

    #[test]
    fn triangle_direct_edge() {
        let t = dijkstra(&triangle(), 0, None).unwrap();
        assert_eq!(t.dist[2], 1.9);
    }

    #[test]
    fn restriction_drops_cycle_edge() {
        let t = dijkstra(&cycle4(), 0, Some(&[0, 1, 2])).unwrap();
        assert_eq!(t.dist[2], 2.0);
        assert!(!t.reached(3));
    }

    #[test]
    fn ties_prefer_smaller_predecessor() {
        // 0-1, 0-2 and both reach 3 at the same distance.
        let g = WeightedGraph::new(4, [(0, 2, 1.0), (0, 1, 1.0), (2, 3, 1.0), (1, 3, 1.0)]).unwrap();
        let t = dijkstra(&g, 0, None).unwrap();
        assert_eq!(t.parent[3], Some(1));
    }

    #[test]
    fn source_out_of_range() {
        assert!(matches!(dijkstra(&triangle(), 7, None), Err(GraphError::VertexOutOfRange { .. })));
    }

    #[test]
    fn apsp_small_cases() {
        let p = WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(apsp(&p).unwrap().max_entry(), 3.0);
        let one = WeightedGraph::new(1, []).unwrap();
        let d = apsp(&one).unwrap();
        assert_eq!((d.n(), d.get(0, 0)), (1, 0.0));
        let grid = generate::grid(5).unwrap();
        assert_eq!(apsp(&grid).unwrap().get(0, 24), 8.0);
    }

    #[test]
    fn apsp_cap() {
        let g = generate::uniform_line(10).unwrap();
        assert_eq!(apsp_with_cap(&g, 5).unwrap_err(), GraphError::ApspCapExceeded { n: 10, cap: 5 });
    }

    #[test]
    fn mst_examples() {
        let p = WeightedGraph::new(3, [(0, 1, 1.5), (1, 2, 2.0)]).unwrap();
        assert_eq!(mst_weight(&p), 3.5);
        assert_eq!(mst_weight(&triangle()), 2.0);
        assert_eq!(mst_weight(&generate::grid(4).unwrap()), 15.0);
    }

    #[test]
    fn spanner_triangle() {
        let g = triangle();
        assert_eq!(greedy_spanner(&g, 0.1).m(), 2);
        assert_eq!(greedy_spanner(&g, 0.05).m(), 3);
    }

    #[test]
    fn spanner_of_tree_is_tree() {
        let g = generate::star_exponential(6).unwrap();
        let s = greedy_spanner(&g, 0.3);
        assert_eq!(s.edges(), g.edges());
    }

    #[test]
    fn net_examples() {
        let p = generate::uniform_line(3).unwrap();
        assert_eq!(greedy_net(&p, &[0, 1, 2], &[], 1.0), vec![0, 2]);
        assert_eq!(greedy_net(&p, &[2, 1, 0], &[], 10.0), vec![0]);
        assert_eq!(greedy_net(&p, &[0, 1, 2], &[1], 1.0), vec![1]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(WeightedGraph::new(2, [(0, 0, 1.0)]).unwrap_err(), GraphError::SelfLoop { v: 0 });
        assert!(matches!(
            WeightedGraph::new(2, [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(GraphError::DuplicateEdge { u: 0, v: 1 })
        ));
        assert!(matches!(WeightedGraph::new(2, [(0, 1, 0.0)]), Err(GraphError::NonPositiveWeight { .. })));
        assert!(matches!(WeightedGraph::new(2, [(0, 1, f64::NAN)]), Err(GraphError::NonPositiveWeight { .. })));
        assert!(matches!(WeightedGraph::new(3, [(0, 1, 1.0)]), Err(GraphError::Disconnected { components: 2 })));
    }
}
