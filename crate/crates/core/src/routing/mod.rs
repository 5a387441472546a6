//! Fixed-port labeled routing on cover trees.
//!
//! Per tree: DFS interval routing where each vertex stores only β children
//! and β later siblings; a message carries at most one port in its header.
//! Across trees: selection labels over compressed subhierarchies pick a
//! tree for (s, t), then the message follows that tree.

pub mod selection;

use std::collections::BTreeMap;

use bitvec::prelude::*;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{LightCover, SpanningTree};
use crate::graph::{Arc, EdgeId, WeightedGraph};
pub use selection::{build_selection_labels, lca_condition, select_tree, CompressedTree, SelectError, SelectionLabel, SelectionScheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoutingError {
    #[error("tree {tree} uses {u}-{v}, which is not a spanner edge")]
    NotSubgraph { tree: usize, u: usize, v: usize },
    #[error("no port from {u} to {v}")]
    MissingPort { u: usize, v: usize },
    #[error("cover and hierarchy family disagree: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Selection(#[from] SelectError),
}

/// ⌈2·log2 n⌉, at least 1: the width of every stored integer.
pub fn word_bits(n: usize) -> u32 {
    let sq = (n as u128) * (n as u128);
    sq.next_power_of_two().trailing_zeros().max(1)
}

/// Port numbers around each vertex. The all-ones word is never used as a
/// port, so it can encode "none".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortAssignment {
    pub bits: u32,
    /// ports[v][k] is the port of the k-th neighbour in adjacency order.
    ports: Vec<Vec<u64>>,
    lookup: Vec<BTreeMap<u64, usize>>,
}

impl PortAssignment {
    pub fn port(&self, g: &WeightedGraph, u: usize, v: usize) -> Option<u64> {
        let k = g.neighbors(u).binary_search_by_key(&v, |a| a.to).ok()?;
        Some(self.ports[u][k])
    }

    pub fn follow<'g>(&self, g: &'g WeightedGraph, u: usize, port: u64) -> Option<&'g Arc> {
        self.lookup[u].get(&port).map(|&k| &g.neighbors(u)[k])
    }

    pub fn ports_of(&self, v: usize) -> &[u64] {
        &self.ports[v]
    }

    pub fn none(&self) -> u64 {
        (1u64 << self.bits) - 1
    }
}

pub fn assign_ports(g: &WeightedGraph, seed: u64) -> PortAssignment {
    let bits = word_bits(g.n());
    let range = ((1u64 << bits) - 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ports: Vec<Vec<u64>> = (0..g.n()).map(|v| sample(&mut rng, range, g.degree(v)).into_iter().map(|p| p as u64).collect()).collect();
    let lookup = ports.iter().map(|ps| ps.iter().enumerate().map(|(k, &p)| (p, k)).collect()).collect();
    PortAssignment { bits, ports, lookup }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub alpha: usize,
    pub vertex: usize,
    /// Lower end ℓ of the window achieving α.
    pub window: f64,
}

/// Max over vertices and windows [ℓ, 2ℓ] of incident edges in the window.
pub fn measure_alpha(spanner: &WeightedGraph) -> Alpha {
    let mut best = Alpha { alpha: 0, vertex: 0, window: 0.0 };
    for v in 0..spanner.n() {
        let mut w: Vec<f64> = spanner.neighbors(v).iter().map(|a| a.w).collect();
        w.sort_by(f64::total_cmp);
        let mut hi = 0;
        for lo in 0..w.len() {
            while hi < w.len() && w[hi] <= 2.0 * w[lo] {
                hi += 1;
            }
            if hi - lo > best.alpha {
                best = Alpha { alpha: hi - lo, vertex: v, window: w[lo] };
            }
        }
    }
    best
}

/// β = 2·⌈log2(1/ε)⌉·α, at least 1.
pub fn beta_for(epsilon: f64, alpha: usize) -> usize {
    let mut k = 0;
    while (1u64 << k) as f64 * epsilon < 1.0 - 1e-12 {
        k += 1;
    }
    (2 * k * alpha).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: u32,
    pub hi: u32,
}

impl Interval {
    pub fn contains(&self, t: u32) -> bool {
        self.lo <= t && t <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub interval: Interval,
    pub port: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub own: Interval,
    pub parent_port: Option<u64>,
    /// The first β children by timestamp.
    pub children: Vec<Entry>,
    pub parent: Option<Interval>,
    /// The next β siblings after this vertex, with the parent's ports.
    pub siblings: Vec<Entry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRouting {
    pub root: usize,
    pub beta: usize,
    pub label: Vec<u32>,
    pub tables: Vec<Table>,
    pub parent: Vec<Option<usize>>,
    /// Children in timestamp order.
    pub children: Vec<Vec<usize>>,
}

pub fn build_tree_routing(
    g: &WeightedGraph,
    tree: &SpanningTree,
    in_spanner: &[bool],
    ports: &PortAssignment,
    beta: usize,
) -> Result<TreeRouting, RoutingError> {
    let n = g.n();
    let mut adj: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n];
    for &(u, v) in &tree.edges {
        let e = g.edge_id(u, v).filter(|&e| in_spanner[e]).ok_or(RoutingError::NotSubgraph { tree: 0, u, v })?;
        adj[u].push((g.edge(e).w, v));
        adj[v].push((g.edge(e).w, u));
    }
    for a in &mut adj {
        a.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    }
    let mut parent = vec![None; n];
    let mut children = vec![Vec::new(); n];
    let mut label = vec![u32::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![tree.root];
    while let Some(x) = stack.pop() {
        label[x] = order.len() as u32;
        order.push(x);
        for &(_, c) in adj[x].iter().rev() {
            if Some(c) != parent[x] {
                parent[c] = Some(x);
                stack.push(c);
            }
        }
        children[x] = adj[x].iter().map(|&(_, c)| c).filter(|&c| Some(c) != parent[x]).collect();
    }
    let mut size = vec![1u32; n];
    for &x in order.iter().rev() {
        if let Some(p) = parent[x] {
            size[p] += size[x];
        }
    }
    let interval = |x: usize| Interval { lo: label[x], hi: label[x] + size[x] - 1 };
    let port = |u: usize, v: usize| ports.port(g, u, v).ok_or(RoutingError::MissingPort { u, v });
    let mut tables = Vec::with_capacity(n);
    for x in 0..n {
        let kids = children[x].iter().take(beta).map(|&c| Ok(Entry { interval: interval(c), port: port(x, c)? })).collect::<Result<_, RoutingError>>()?;
        let (parent_port, pint, siblings) = match parent[x] {
            None => (None, None, Vec::new()),
            Some(p) => {
                let i = children[p].iter().position(|&c| c == x).expect("child of its parent");
                let sibs = children[p][i + 1..].iter().take(beta).map(|&s| Ok(Entry { interval: interval(s), port: port(p, s)? })).collect::<Result<_, RoutingError>>()?;
                (Some(port(x, p)?), Some(interval(p)), sibs)
            }
        };
        tables.push(Table { own: interval(x), parent_port, children: kids, parent: pint, siblings });
    }
    Ok(TreeRouting { root: tree.root, beta, label, tables, parent, children })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Done,
    Forward { port: u64, header: Option<u64> },
    /// The tables cannot make progress; only reachable with bad labels.
    Stuck,
}

pub fn routing_decision(table: &Table, dest: u32, header: Option<u64>) -> Decision {
    let forward = |port, header| Decision::Forward { port, header };
    if dest == table.own.lo {
        return Decision::Done;
    }
    if table.own.contains(dest) {
        if let Some(c) = table.children.iter().find(|c| c.interval.contains(dest)) {
            return forward(c.port, None);
        }
        if let Some(p) = header {
            return forward(p, None);
        }
        return table.children.first().map_or(Decision::Stuck, |c| forward(c.port, None));
    }
    let Some(up) = table.parent_port else {
        return Decision::Stuck;
    };
    if !table.parent.is_some_and(|p| p.contains(dest)) {
        return forward(up, None);
    }
    // Under an earlier sibling, or the parent itself: the parent restarts
    // from its first child.
    if dest < table.own.lo {
        return forward(up, None);
    }
    if let Some(s) = table.siblings.iter().find(|s| s.interval.contains(dest)) {
        return forward(up, Some(s.port));
    }
    table.siblings.first().map_or(Decision::Stuck, |s| forward(up, Some(s.port)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteTrace {
    pub vertices: Vec<usize>,
    /// Port taken at each hop.
    pub ports: Vec<u64>,
    pub weight: f64,
    pub hops: usize,
    pub terminated: bool,
    pub error: Option<String>,
}

impl RouteTrace {
    pub fn to_csv(&self, g: &WeightedGraph) -> String {
        let mut out = String::from("hop,vertex,port,cumulative_weight\n");
        let mut acc = 0.0;
        for (h, &v) in self.vertices.iter().enumerate() {
            if h > 0 {
                let e = g.edge_id(self.vertices[h - 1], v).expect("trace follows edges");
                acc += g.edge(e).w;
            }
            let port = self.ports.get(h).map_or(String::new(), |p| p.to_string());
            out.push_str(&format!("{h},{v},{port},{acc}\n"));
        }
        out
    }
}

pub fn simulate_route(g: &WeightedGraph, ports: &PortAssignment, tr: &TreeRouting, s: usize, t: usize) -> RouteTrace {
    let cap = 4 * g.n();
    let dest = tr.label[t];
    let mut trace = RouteTrace { vertices: vec![s], ports: Vec::new(), weight: 0.0, hops: 0, terminated: false, error: None };
    let mut x = s;
    let mut header = None;
    loop {
        match routing_decision(&tr.tables[x], dest, header) {
            Decision::Done => {
                trace.terminated = true;
                return trace;
            }
            Decision::Stuck => {
                trace.error = Some(format!("stuck at {x}"));
                return trace;
            }
            Decision::Forward { port, header: h } => {
                if trace.hops == cap {
                    trace.error = Some(format!("hop cap {cap} reached"));
                    return trace;
                }
                let Some(a) = ports.follow(g, x, port) else {
                    trace.error = Some(format!("vertex {x} has no port {port}"));
                    return trace;
                };
                trace.ports.push(port);
                trace.weight += a.w;
                trace.hops += 1;
                x = a.to;
                trace.vertices.push(x);
                header = h;
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoutingScheme {
    pub n: usize,
    pub epsilon: f64,
    pub word_bits: u32,
    pub alpha: Alpha,
    pub beta: usize,
    pub ports: PortAssignment,
    pub spanner_edges: Vec<EdgeId>,
    pub trees: Vec<TreeRouting>,
    pub selection: SelectionScheme,
}

/// Scheme over a light cover (trees on the greedy spanner of `g`).
pub fn build_routing_scheme(g: &WeightedGraph, light: &LightCover, seed: u64, beta_override: Option<usize>) -> Result<RoutingScheme, RoutingError> {
    let epsilon = light.build.cover.params.epsilon;
    let spanner = g.subgraph(&light.spanner_edges).map_err(|e| RoutingError::Mismatch(e.to_string()))?;
    let alpha = measure_alpha(&spanner);
    let beta = beta_override.unwrap_or_else(|| beta_for(epsilon, alpha.alpha));
    let ports = assign_ports(g, seed);
    let mut in_spanner = vec![false; g.m()];
    for &e in &light.spanner_edges {
        in_spanner[e] = true;
    }
    let trees = light
        .build
        .cover
        .trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            build_tree_routing(g, t, &in_spanner, &ports, beta).map_err(|e| match e {
                RoutingError::NotSubgraph { u, v, .. } => RoutingError::NotSubgraph { tree: i, u, v },
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;
    let selection = build_selection_labels(&light.build.preserving.family, &light.build.cover)?;
    Ok(RoutingScheme { n: g.n(), epsilon, word_bits: word_bits(g.n()), alpha, beta, ports, spanner_edges: light.spanner_edges.clone(), trees, selection })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndToEnd {
    pub tree: Option<usize>,
    pub trace: RouteTrace,
}

pub fn route_end_to_end(g: &WeightedGraph, scheme: &RoutingScheme, s: usize, t: usize) -> Result<EndToEnd, RoutingError> {
    if s == t {
        let trace = RouteTrace { vertices: vec![s], ports: Vec::new(), weight: 0.0, hops: 0, terminated: true, error: None };
        return Ok(EndToEnd { tree: None, trace });
    }
    let tree = select_tree(&scheme.selection.labels[s], &scheme.selection.labels[t])?;
    let trace = simulate_route(g, &scheme.ports, &scheme.trees[tree], s, t);
    Ok(EndToEnd { tree: Some(tree), trace })
}

type Bits = BitVec<u8, Msb0>;

fn push(bits: &mut Bits, value: u64, width: u32) {
    for k in (0..width).rev() {
        bits.push((value >> k) & 1 == 1);
    }
}

impl RoutingScheme {
    fn none(&self) -> u64 {
        (1u64 << self.word_bits) - 1
    }

    fn push_interval(&self, bits: &mut Bits, i: Option<Interval>) {
        let (lo, hi) = i.map_or((self.none(), self.none()), |i| (i.lo as u64, i.hi as u64));
        push(bits, lo, self.word_bits);
        push(bits, hi, self.word_bits);
    }

    fn push_entries(&self, bits: &mut Bits, entries: &[Entry]) {
        push(bits, entries.len() as u64, self.word_bits);
        for e in entries {
            self.push_interval(bits, Some(e.interval));
            push(bits, e.port, self.word_bits);
        }
    }

    /// Per tree the DFS timestamp, then the selection label.
    pub fn encode_label(&self, v: usize) -> Bits {
        let mut bits = Bits::new();
        for t in &self.trees {
            push(&mut bits, t.label[v] as u64, self.word_bits);
        }
        self.selection.encode(&mut bits, v, self.word_bits);
        bits
    }

    pub fn encode_table(&self, v: usize) -> Bits {
        let mut bits = Bits::new();
        for t in &self.trees {
            let tab = &t.tables[v];
            self.push_interval(&mut bits, Some(tab.own));
            push(&mut bits, tab.parent_port.unwrap_or(self.none()), self.word_bits);
            self.push_entries(&mut bits, &tab.children);
            self.push_interval(&mut bits, tab.parent);
            self.push_entries(&mut bits, &tab.siblings);
        }
        bits
    }

    pub fn header_bits(&self) -> u32 {
        self.word_bits
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSizes {
    pub word_bits: u32,
    pub label_bits_max: usize,
    pub selection_bits_max: usize,
    pub table_bits_max: usize,
    pub header_bits: u32,
    pub max_apices: usize,
    /// Largest integer stored anywhere, checked against 2^word_bits.
    pub max_stored: u64,
}

pub fn measure_sizes(scheme: &RoutingScheme) -> SchemeSizes {
    let n = scheme.n;
    let label_bits_max = (0..n).map(|v| scheme.encode_label(v).len()).max().unwrap_or(0);
    let table_bits_max = (0..n).map(|v| scheme.encode_table(v).len()).max().unwrap_or(0);
    let selection_bits_max = (0..n).map(|v| scheme.selection.label_bits(v, scheme.word_bits)).max().unwrap_or(0);
    let max_apices = scheme.selection.labels.iter().flat_map(|l| l.parts.iter().map(|p| p.apices.len())).max().unwrap_or(0);
    let mut max_stored = 0;
    for t in &scheme.trees {
        for tab in &t.tables {
            max_stored = max_stored.max(tab.own.hi as u64);
            for e in tab.children.iter().chain(&tab.siblings) {
                max_stored = max_stored.max(e.port);
            }
            max_stored = max_stored.max(tab.parent_port.unwrap_or(0));
        }
    }
    SchemeSizes { word_bits: scheme.word_bits, label_bits_max, selection_bits_max, table_bits_max, header_bits: scheme.header_bits(), max_apices, max_stored }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexDump {
    pub vertex: usize,
    pub label_bits: usize,
    pub table_bits: usize,
    pub label_hex: String,
    pub table_hex: String,
    pub tree_labels: Vec<u32>,
    pub selection: SelectionLabel,
    pub tables: Vec<Table>,
}

pub fn dump_scheme(scheme: &RoutingScheme) -> Vec<VertexDump> {
    (0..scheme.n)
        .map(|v| {
            let label = scheme.encode_label(v);
            let table = scheme.encode_table(v);
            VertexDump {
                vertex: v,
                label_bits: label.len(),
                table_bits: table.len(),
                label_hex: hex::encode(label.as_raw_slice()),
                table_hex: hex::encode(table.as_raw_slice()),
                tree_labels: scheme.trees.iter().map(|t| t.label[v]).collect(),
                selection: scheme.selection.labels[v].clone(),
                tables: scheme.trees.iter().map(|t| t.tables[v].clone()).collect(),
            }
        })
        .collect()
}
