//! Spanning tree covers: the recursive path-preserving tree, the top-level
//! driver over a pair-preserving family, the light-cover pipeline, and the
//! stretch/spanning checks.

use std::collections::BTreeSet;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{apsp_with_cap, greedy_spanner_edges, mst_weight, DistanceMatrix, EdgeId, GraphError, Path, WeightedGraph, DEFAULT_APSP_CAP, TOL};
use crate::hpf::pairs::{make_pair_preserving, Demand, PairPreserving};
use crate::hpf::{build_hpf, HpFamily, HpfError, HpfParams, Hierarchy};
use crate::oracle::{build_oracle, OracleError};
use crate::preservable::{build_preservable_set, build_sketch_graph, check_preservable, ClusterTower, PreservableReport, PreservableError};

pub const SCHEMA_VERSION: u32 = 1;

/// Pairs sampled when n is above the all-pairs limit.
pub const SAMPLE_PAIRS: usize = 10_000;
pub const ALL_PAIRS_LIMIT: usize = 512;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Hpf(#[from] HpfError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cluster {cluster} (level {level}): {source}")]
    Preservable { cluster: usize, level: usize, source: PreservableError },
    #[error("cluster {cluster} (level {level}): output is not a tree: {reason}")]
    NotATree { cluster: usize, level: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Demand,
    Exhaustive,
    Theory,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "demand" => Ok(Mode::Demand),
            "exhaustive" => Ok(Mode::Exhaustive),
            "theory" => Ok(Mode::Theory),
            _ => Err(format!("unknown mode {s:?} (demand|exhaustive|theory)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    /// All pairs up to the limit, else a seeded sample plus every edge.
    #[default]
    Auto,
    All,
    Sample(usize),
    List(Vec<(usize, usize)>),
}

/// How much of the preservable-set guarantees to check at each recursion node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audit {
    #[default]
    Off,
    Structure,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    pub params: HpfParams,
    pub mode: Mode,
    pub pairs: PairSource,
    pub seed: u64,
    pub apsp_cap: usize,
    pub audit: Audit,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig { params: HpfParams::default(), mode: Mode::Demand, pairs: PairSource::Auto, seed: 42, apsp_cap: DEFAULT_APSP_CAP, audit: Audit::Off }
    }
}

impl CoverConfig {
    fn effective_params(&self) -> HpfParams {
        HpfParams { theory: self.params.theory || self.mode == Mode::Theory, ..self.params }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Index of the materialized hierarchy copy.
    pub hierarchy: usize,
    /// Subnet hierarchy it was copied from.
    pub source: usize,
    pub copy: usize,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanningTree {
    pub provenance: Provenance,
    pub root: usize,
    /// Sorted (u, v) pairs with u < v.
    pub edges: Vec<(usize, usize)>,
}

impl SpanningTree {
    pub fn weight(&self, g: &WeightedGraph) -> f64 {
        self.edges.iter().map(|&(u, v)| g.edge_id(u, v).map_or(f64::NAN, |e| g.edge(e).w)).sum()
    }

    pub fn max_degree(&self, n: usize) -> usize {
        let mut deg = vec![0; n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeCover {
    pub schema_version: u32,
    pub params: HpfParams,
    pub ell: usize,
    /// Factor applied so the lightest edge weighs 1.
    pub scale: f64,
    pub trees: Vec<SpanningTree>,
}

impl TreeCover {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cover serializes")
    }

    pub fn from_json(s: &str) -> Result<TreeCover, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Index of the tree for materialized hierarchy `h` at offset `j`.
    pub fn tree_index(&self, h: usize, j: usize) -> Option<usize> {
        self.trees.iter().position(|t| t.provenance.hierarchy == h && t.provenance.offset == j)
    }
}

/// One recursion node of a tree build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLog {
    pub cluster: usize,
    pub level: usize,
    pub highway: Path,
    pub report: Option<PreservableReport>,
}

#[derive(Clone, Debug)]
pub struct TreeBuild {
    pub vertices: Vec<usize>,
    pub edges: Vec<EdgeId>,
    pub nodes: Vec<NodeLog>,
}

struct Recursion<'a> {
    g: &'a WeightedGraph,
    family: &'a HpFamily,
    hier: &'a Hierarchy,
    audit: Audit,
    nodes: Vec<NodeLog>,
}

impl Recursion<'_> {
    fn run(&mut self, c: usize, pi: &Path) -> Result<BTreeSet<EdgeId>, CoverError> {
        let cl = self.hier.cluster(c);
        let mut edges: BTreeSet<EdgeId> = pi.edges.iter().copied().collect();
        if cl.members.len() == 1 {
            return Ok(edges);
        }
        let level = cl.level;
        let err = |source| CoverError::Preservable { cluster: c, level, source };
        let tower = ClusterTower::from_hierarchy(self.hier, c, self.family.sub_level(level));
        let index = |id: usize| tower.clustering().iter().position(|k| k.id == id).expect("pair lies in the clustering");
        let pair = cl.pair.map(|p| (index(p.first), index(p.second)));
        let (set, inter) = build_preservable_set(self.g, &tower, pi, pair).map_err(err)?;
        let report = if self.audit == Audit::Off {
            None
        } else {
            let eps = self.family.params.epsilon;
            let sketch = build_sketch_graph(self.g, &tower, &set, &inter, self.family.params.scale(level), eps).map_err(err)?;
            let full = self.audit == Audit::Full;
            Some(check_preservable(self.g, &tower, &set, &sketch, pair, eps, self.family.params.theory, full))
        };
        self.nodes.push(NodeLog { cluster: c, level, highway: pi.clone(), report });
        edges.extend(inter);
        for (k, child) in tower.clustering().iter().enumerate() {
            edges.extend(self.run(child.id, &set.paths[set.touch[k]])?);
        }
        let vertices = vertex_set(&cl.members, pi);
        check_tree(self.g, &vertices, &edges).map_err(|reason| CoverError::NotATree { cluster: c, level, reason })?;
        Ok(edges)
    }
}

fn vertex_set(members: &[usize], pi: &Path) -> Vec<usize> {
    let mut v: BTreeSet<usize> = members.iter().copied().collect();
    v.extend(&pi.vertices);
    v.into_iter().collect()
}

fn check_tree(g: &WeightedGraph, vertices: &[usize], edges: &BTreeSet<EdgeId>) -> Result<(), String> {
    if edges.len() + 1 != vertices.len() {
        return Err(format!("{} edges on {} vertices", edges.len(), vertices.len()));
    }
    let mut uf = UnionFind::new(g.n());
    for &e in edges {
        let ed = g.edge(e);
        if vertices.binary_search(&ed.u).is_err() || vertices.binary_search(&ed.v).is_err() {
            return Err(format!("edge {}-{} leaves the vertex set", ed.u, ed.v));
        }
        if !uf.union(ed.u, ed.v) {
            return Err(format!("edge {}-{} closes a cycle", ed.u, ed.v));
        }
    }
    Ok(())
}

/// Spanning tree of G[cluster] ∪ π. An empty π is replaced by the
/// cluster's representative.
pub fn path_preserving_tree(
    g: &WeightedGraph,
    family: &HpFamily,
    hier: &Hierarchy,
    cluster: usize,
    pi: Option<&Path>,
    audit: Audit,
) -> Result<TreeBuild, CoverError> {
    let cl = hier.cluster(cluster);
    let pi = pi.cloned().unwrap_or_else(|| Path::single(cl.representative));
    let mut rec = Recursion { g, family, hier, audit, nodes: Vec::new() };
    let edges = rec.run(cluster, &pi)?;
    let vertices = vertex_set(&cl.members, &pi);
    if cl.members.len() == 1 {
        check_tree(g, &vertices, &edges).map_err(|reason| CoverError::NotATree { cluster, level: cl.level, reason })?;
    }
    Ok(TreeBuild { vertices, edges: edges.into_iter().collect(), nodes: rec.nodes })
}

/// Node report tagged with the tree it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub tree: usize,
    pub cluster: usize,
    pub level: usize,
    pub report: PreservableReport,
}

/// Everything a cover run produces, for downstream checks.
#[derive(Clone, Debug)]
pub struct CoverBuild {
    pub cover: TreeCover,
    /// The input rescaled so its lightest edge weighs 1.
    pub scaled: WeightedGraph,
    /// Distances in `scaled`.
    pub dist: DistanceMatrix,
    pub preserving: PairPreserving,
    pub demanded: Vec<(usize, usize)>,
    pub reports: Vec<NodeReport>,
}

fn sample_pairs(g: &WeightedGraph, k: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = g.n();
    let mut set: BTreeSet<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tries = 0;
    while set.len() < k && tries < 20 * k {
        tries += 1;
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            set.insert((u.min(v), u.max(v)));
        }
    }
    let mut out: Vec<_> = set.into_iter().collect();
    out.shuffle(&mut rng);
    out.sort_unstable();
    out
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

pub fn demanded_pairs(g: &WeightedGraph, source: &PairSource, seed: u64) -> Vec<(usize, usize)> {
    match source {
        PairSource::Auto if g.n() <= ALL_PAIRS_LIMIT => all_pairs(g.n()),
        PairSource::Auto => sample_pairs(g, SAMPLE_PAIRS, seed),
        PairSource::All => all_pairs(g.n()),
        PairSource::Sample(k) => sample_pairs(g, *k, seed),
        PairSource::List(p) => p.clone(),
    }
}

pub fn span_tree_cover(g: &WeightedGraph, config: &CoverConfig) -> Result<CoverBuild, CoverError> {
    let params = config.effective_params();
    params.validate()?;
    let n = g.n();
    if let PairSource::List(p) = &config.pairs {
        if let Some(&(u, v)) = p.iter().find(|&&(u, v)| u >= n || v >= n) {
            return Err(CoverError::Config(format!("pair ({u}, {v}) out of range for n = {n}")));
        }
    }
    let scale = g.min_weight().map_or(1.0, |w| 1.0 / w);
    let scaled = g.scaled(scale);
    let family = build_hpf(&scaled, &params)?;
    let dist = apsp_with_cap(&scaled, config.apsp_cap)?;
    let demanded = demanded_pairs(g, &config.pairs, config.seed);
    let demand = if config.mode == Mode::Exhaustive { Demand::Exhaustive } else { Demand::Pairs(demanded.clone()) };
    let preserving = make_pair_preserving(&scaled, &family, &dist, &demand)?;
    let fam = &preserving.family;
    let jobs: Vec<(usize, usize)> = (0..fam.hierarchies.len()).flat_map(|h| fam.offsets().map(move |j| (h, j))).collect();
    let built: Vec<(SpanningTree, Vec<NodeLog>)> = jobs
        .par_iter()
        .map(|&(h, j)| {
            let hier = &fam.hierarchies[h];
            let top = hier.top_at(j);
            let b = path_preserving_tree(&scaled, fam, hier, top, None, config.audit)?;
            if b.vertices.len() != n {
                return Err(CoverError::NotATree { cluster: top, level: j, reason: "does not span V".into() });
            }
            let mut edges: Vec<(usize, usize)> = b.edges.iter().map(|&e| (scaled.edge(e).u, scaled.edge(e).v)).collect();
            edges.sort_unstable();
            let provenance = Provenance { hierarchy: h, source: hier.source, copy: hier.copy, offset: j };
            Ok((SpanningTree { provenance, root: hier.cluster(top).representative, edges }, b.nodes))
        })
        .collect::<Result<_, CoverError>>()?;
    let mut trees = Vec::with_capacity(built.len());
    let mut reports = Vec::new();
    for (i, (t, nodes)) in built.into_iter().enumerate() {
        trees.push(t);
        reports.extend(nodes.into_iter().filter_map(|nl| nl.report.map(|report| NodeReport { tree: i, cluster: nl.cluster, level: nl.level, report })));
    }
    let cover = TreeCover { schema_version: SCHEMA_VERSION, params, ell: fam.ell, scale, trees };
    Ok(CoverBuild { cover, scaled, dist, preserving, demanded, reports })
}

#[derive(Clone, Debug)]
pub struct LightCover {
    pub build: CoverBuild,
    /// Edge ids of `g` kept by the greedy spanner.
    pub spanner_edges: Vec<EdgeId>,
    pub spanner_lightness: f64,
    pub individual_lightness: f64,
    pub collective_lightness: f64,
}

/// Cover of the greedy (1+ε)-spanner; lightness is measured against the
/// MST of `g`.
pub fn light_tree_cover(g: &WeightedGraph, config: &CoverConfig) -> Result<LightCover, CoverError> {
    let spanner_edges = greedy_spanner_edges(g, config.params.epsilon);
    let spanner = g.subgraph(&spanner_edges)?;
    let build = span_tree_cover(&spanner, config)?;
    let mst = mst_weight(g);
    let spanner_lightness = spanner.total_weight() / mst;
    let weights: Vec<f64> = build.cover.trees.iter().map(|t| t.weight(g)).collect();
    let individual_lightness = weights.iter().copied().fold(0.0, f64::max) / mst;
    let collective_lightness = weights.iter().sum::<f64>() / mst;
    Ok(LightCover { build, spanner_edges, spanner_lightness, individual_lightness, collective_lightness })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStretch {
    pub u: usize,
    pub v: usize,
    pub d_graph: f64,
    pub d_tree: f64,
    pub tree: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchReport {
    pub max: f64,
    pub mean: f64,
    pub pairs: Vec<PairStretch>,
}

/// Min over trees of d_T/d_G per pair, with d_G from `dist` (same units
/// as `g`).
pub fn cover_stretch(g: &WeightedGraph, cover: &TreeCover, dist: &DistanceMatrix, pairs: &[(usize, usize)]) -> Result<StretchReport, CoverError> {
    let oracle = build_oracle(g, cover)?;
    let rows: Vec<PairStretch> = pairs
        .par_iter()
        .filter(|&&(u, v)| u != v)
        .map(|&(u, v)| {
            let est = oracle.query_distance(u, v);
            let d = dist.get(u, v);
            PairStretch { u, v, d_graph: d, d_tree: est.distance, tree: est.tree, ratio: est.distance / d }
        })
        .collect();
    let max = rows.iter().map(|r| r.ratio).fold(1.0, f64::max);
    let mean = if rows.is_empty() { 1.0 } else { rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64 };
    Ok(StretchReport { max, mean, pairs: rows })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SpanningFailure {
    NonGraphEdge { tree: usize, u: usize, v: usize },
    EdgeCount { tree: usize, count: usize, expected: usize },
    Cycle { tree: usize, u: usize, v: usize },
    Disconnected { tree: usize, components: usize },
}

pub fn verify_spanning(g: &WeightedGraph, cover: &TreeCover) -> Vec<SpanningFailure> {
    let n = g.n();
    let mut out = Vec::new();
    for (i, t) in cover.trees.iter().enumerate() {
        let mut uf = UnionFind::new(n);
        let mut components = n;
        for &(u, v) in &t.edges {
            if u >= n || v >= n || g.edge_id(u, v).is_none() {
                out.push(SpanningFailure::NonGraphEdge { tree: i, u, v });
                continue;
            }
            if uf.union(u, v) {
                components -= 1;
            } else {
                out.push(SpanningFailure::Cycle { tree: i, u, v });
            }
        }
        if t.edges.len() + 1 != n {
            out.push(SpanningFailure::EdgeCount { tree: i, count: t.edges.len(), expected: n - 1 });
        }
        if components != 1 {
            out.push(SpanningFailure::Disconnected { tree: i, components });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverStats {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub num_trees: usize,
    pub ell: usize,
    pub num_pairs: usize,
    pub max_stretch: f64,
    pub mean_stretch: f64,
    pub individual_lightness: f64,
    pub collective_lightness: f64,
    pub max_tree_degree: usize,
    pub unpreserved_pairs: usize,
}

impl CoverStats {
    pub fn new(g: &WeightedGraph, build: &CoverBuild, stretch: &StretchReport) -> CoverStats {
        let mst = mst_weight(g);
        let weights: Vec<f64> = build.cover.trees.iter().map(|t| t.weight(g)).collect();
        CoverStats {
            schema_version: SCHEMA_VERSION,
            n: g.n(),
            m: g.m(),
            num_trees: build.cover.trees.len(),
            ell: build.cover.ell,
            num_pairs: stretch.pairs.len(),
            max_stretch: stretch.max,
            mean_stretch: stretch.mean,
            individual_lightness: weights.iter().copied().fold(0.0, f64::max) / mst,
            collective_lightness: weights.iter().sum::<f64>() / mst,
            max_tree_degree: build.cover.trees.iter().map(|t| t.max_degree(g.n())).max().unwrap_or(0),
            unpreserved_pairs: build.preserving.unpreserved(),
        }
    }
}

/// Per demanded pair: min-tree distance minus (d_{G[C]} + 44εμ^i). The
/// stretch report must come from `build.scaled` and `build.dist`.
pub fn pair_gate_excess(build: &CoverBuild, stretch: &StretchReport) -> Vec<(usize, usize, f64)> {
    let fam = &build.preserving.family;
    let eps = fam.params.epsilon;
    let by_pair: std::collections::HashMap<(usize, usize), f64> = stretch.pairs.iter().map(|p| ((p.u.min(p.v), p.u.max(p.v)), p.d_tree)).collect();
    build
        .preserving
        .records
        .iter()
        .filter_map(|r| {
            let d_tree = *by_pair.get(&(r.u, r.v))?;
            Some((r.u, r.v, d_tree - (r.d_cluster + 44.0 * eps * fam.params.scale(r.level))))
        })
        .collect()
}

/// Whether `a` ≤ `b` within the shared tolerance.
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::apsp;
    use crate::graph::generate::{grid, star_exponential, uniform_line};

    fn tree_graph() -> WeightedGraph {
        WeightedGraph::new(7, vec![(0, 1, 1.0), (0, 2, 2.0), (1, 3, 3.0), (1, 4, 1.5), (2, 5, 0.25), (5, 6, 4.0)]).unwrap()
    }

    fn pairs_of(g: &WeightedGraph) -> Vec<(usize, usize)> {
        all_pairs(g.n())
    }

    #[test]
    fn single_vertex_tree() {
        let g = uniform_line(1).unwrap();
        let b = span_tree_cover(&g, &CoverConfig::default()).unwrap();
        assert!(b.cover.trees.iter().all(|t| t.edges.is_empty() && t.root == 0));
    }

    #[test]
    fn tree_input_reproduced() {
        let g = tree_graph();
        let b = span_tree_cover(&g, &CoverConfig { audit: Audit::Full, ..CoverConfig::default() }).unwrap();
        let want: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.u, e.v)).collect();
        for t in &b.cover.trees {
            assert_eq!(t.edges, want);
        }
        let st = cover_stretch(&g, &b.cover, &apsp(&g).unwrap(), &pairs_of(&g)).unwrap();
        assert!((st.max - 1.0).abs() < 1e-12);
        assert!(b.reports.iter().all(|r| r.report.passed()));
    }

    #[test]
    fn path_cluster_gives_the_path() {
        let g = uniform_line(4).unwrap();
        let b = span_tree_cover(&g, &CoverConfig::default()).unwrap();
        assert!(b.cover.trees.iter().all(|t| t.edges == vec![(0, 1), (1, 2), (2, 3)]));
    }

    #[test]
    fn tree_count_is_ell_times_copies() {
        let g = grid(4).unwrap();
        let cfg = CoverConfig { params: HpfParams { mu: 2.0, ..HpfParams::default() }, ..CoverConfig::default() };
        let b = span_tree_cover(&g, &cfg).unwrap();
        let fam = &b.preserving.family;
        assert_eq!(fam.ell, 2);
        assert_eq!(b.cover.trees.len(), fam.ell * fam.hierarchies.len());
        assert!(verify_spanning(&g, &b.cover).is_empty());
    }

    #[test]
    fn grid_pairs_within_gate() {
        let g = grid(6).unwrap();
        let b = span_tree_cover(&g, &CoverConfig { audit: Audit::Full, ..CoverConfig::default() }).unwrap();
        assert!(verify_spanning(&g, &b.cover).is_empty());
        let d = apsp(&g).unwrap();
        let st = cover_stretch(&g, &b.cover, &d, &b.demanded).unwrap();
        assert!(st.pairs.iter().all(|p| p.ratio >= 1.0 - 1e-9));
        let excess = pair_gate_excess(&b, &st);
        assert_eq!(excess.len(), b.demanded.len());
        assert!(excess.iter().all(|e| e.2 <= 1e-9), "{:?}", excess.iter().find(|e| e.2 > 1e-9));
        let bad: Vec<_> = b.reports.iter().filter(|r| !r.report.structure_ok()).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn subcalls_are_consistent() {
        let g = grid(5).unwrap();
        let cfg = CoverConfig::default();
        let b = span_tree_cover(&g, &cfg).unwrap();
        let fam = &b.preserving.family;
        let h = &fam.hierarchies[0];
        let top = h.top_at(fam.i_max());
        let whole = path_preserving_tree(&b.scaled, fam, h, top, None, Audit::Off).unwrap();
        for node in &whole.nodes {
            let sub = path_preserving_tree(&b.scaled, fam, h, node.cluster, Some(&node.highway), Audit::Off).unwrap();
            assert!(sub.edges.iter().all(|e| whole.edges.binary_search(e).is_ok()));
        }
    }

    #[test]
    fn deterministic_json() {
        let g = star_exponential(10).unwrap();
        let a = span_tree_cover(&g, &CoverConfig::default()).unwrap().cover.to_json();
        let b = span_tree_cover(&g, &CoverConfig::default()).unwrap().cover.to_json();
        assert_eq!(a, b);
        assert_eq!(TreeCover::from_json(&a).unwrap().to_json(), a);
    }

    #[test]
    fn light_cover_on_line() {
        let g = uniform_line(64).unwrap();
        let lc = light_tree_cover(&g, &CoverConfig::default()).unwrap();
        assert!((lc.individual_lightness - 1.0).abs() < 1e-9);
        assert!(lc.individual_lightness <= lc.spanner_lightness + 1e-12);
    }

    #[test]
    fn spanning_failures_detected() {
        let g = grid(3).unwrap();
        let mut cover = span_tree_cover(&g, &CoverConfig::default()).unwrap().cover;
        cover.trees.truncate(1);
        let mut bad = cover.clone();
        bad.trees[0].edges[0] = (0, 8);
        assert!(verify_spanning(&g, &bad).contains(&SpanningFailure::NonGraphEdge { tree: 0, u: 0, v: 8 }));
        let mut extra = cover.clone();
        let missing = g.edges().iter().map(|e| (e.u, e.v)).find(|p| !extra.trees[0].edges.contains(p)).unwrap();
        extra.trees[0].edges.push(missing);
        let f = verify_spanning(&g, &extra);
        assert!(f.iter().any(|x| matches!(x, SpanningFailure::Cycle { .. })));
        assert!(f.contains(&SpanningFailure::EdgeCount { tree: 0, count: 9, expected: 8 }));
    }

    #[test]
    fn sampled_pairs_include_edges() {
        let g = grid(4).unwrap();
        let p = demanded_pairs(&g, &PairSource::Sample(40), 7);
        assert_eq!(p.len(), 40);
        assert!(g.edges().iter().all(|e| p.contains(&(e.u, e.v))));
        assert_eq!(p, demanded_pairs(&g, &PairSource::Sample(40), 7));
    }
}
