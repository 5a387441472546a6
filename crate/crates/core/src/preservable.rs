//! Preservable sets, inter-cluster edges and sketch graphs.
//!
//! Input is a cluster Ĝ at level i, the chain of its descendant clusters
//! down to the ε-subclusters (the "tower"), a highway path π, and an
//! optional pair of ε-subclusters. The output is a family of vertex-disjoint
//! paths touching every ε-subcluster exactly once, plus edges I joining
//! them into a tree once each subcluster is collapsed onto its path.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{dijkstra_masked, search, EdgeId, Path, Search, WeightedGraph, TOL};
use crate::hpf::Hierarchy;
use crate::oracle::TreeOracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreservableError {
    #[error("highway does not touch the cluster")]
    HighwayOutside,
    #[error("pair member {0} is not a cluster of the clustering")]
    PairNotInClustering(usize),
    #[error("cluster {0} is touched by no path")]
    Untouched(usize),
    #[error("no path from {from} to {to} inside the cluster")]
    Unreachable { from: usize, to: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerCluster {
    /// Cluster id in the owning hierarchy (or any caller-chosen tag).
    pub id: usize,
    pub members: Vec<usize>,
    pub representative: usize,
    /// Index of the parent in the previous tower level.
    pub parent: usize,
}

/// levels[0] = [Ĝ]; levels[k] = its descendants k levels down; the last
/// level is the clustering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterTower {
    pub levels: Vec<Vec<TowerCluster>>,
}

impl ClusterTower {
    pub fn from_hierarchy(h: &Hierarchy, cluster: usize, bottom: usize) -> ClusterTower {
        let top = h.cluster(cluster);
        let mut levels = vec![vec![TowerCluster {
            id: cluster,
            members: top.members.clone(),
            representative: top.representative,
            parent: 0,
        }]];
        for _ in bottom..top.level {
            let prev = levels.last().unwrap();
            let mut next = Vec::new();
            for (pi, p) in prev.iter().enumerate() {
                for &c in &h.cluster(p.id).children {
                    let cl = h.cluster(c);
                    next.push(TowerCluster { id: c, members: cl.members.clone(), representative: cl.representative, parent: pi });
                }
            }
            levels.push(next);
        }
        ClusterTower { levels }
    }

    pub fn root(&self) -> &TowerCluster {
        &self.levels[0][0]
    }

    pub fn clustering(&self) -> &[TowerCluster] {
        self.levels.last().unwrap()
    }
}

/// A Step-2 path and the representative it was grown from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Glue {
    pub origin: usize,
    pub path: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreservableSet {
    pub paths: Vec<Path>,
    /// Index of π in `paths`.
    pub highway: usize,
    /// Clustering index → index of the unique path touching it.
    pub touch: Vec<usize>,
    pub glued: Vec<Glue>,
}

const NONE: usize = usize::MAX;

struct Builder<'a> {
    g: &'a WeightedGraph,
    owner: HashMap<usize, usize>,
    touch: Vec<usize>,
    paths: Vec<Path>,
    inter: Vec<EdgeId>,
    glued: Vec<Glue>,
}

impl Builder<'_> {
    fn owner(&self, v: usize) -> usize {
        self.owner.get(&v).copied().unwrap_or(NONE)
    }

    fn touched(&self, v: usize) -> bool {
        let k = self.owner(v);
        k != NONE && self.touch[k] != NONE
    }

    fn add(&mut self, p: Path) -> usize {
        let idx = self.paths.len();
        for &v in &p.vertices {
            let k = self.owner(v);
            if k != NONE && self.touch[k] == NONE {
                self.touch[k] = idx;
            }
        }
        self.paths.push(p);
        idx
    }

    /// Truncate `q` at its first vertex in a touched cluster; add the
    /// prefix and the crossing edge.
    fn glue(&mut self, q: Path) {
        let Some(j) = q.vertices.iter().position(|&v| self.touched(v)) else {
            let idx = self.add(q.clone());
            self.glued.push(Glue { origin: q.first(), path: idx });
            return;
        };
        if j == 0 {
            return;
        }
        self.inter.push(q.edges[j - 1]);
        let idx = self.add(q.slice(0, j));
        self.glued.push(Glue { origin: q.first(), path: idx });
    }
}

fn mask_of(n: usize, members: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &v in members {
        m[v] = true;
    }
    m
}

/// Shortest path from `from` to the nearest vertex of π using edges of Ĝ
/// and of π.
fn path_to_highway(g: &WeightedGraph, in_cluster: &[bool], pi: &Path, from: usize) -> Option<Path> {
    let on_pi: BTreeSet<usize> = pi.vertices.iter().copied().collect();
    let pi_edges: BTreeSet<EdgeId> = pi.edges.iter().copied().collect();
    let ok = |e: EdgeId| {
        let ed = g.edge(e);
        (in_cluster[ed.u] && in_cluster[ed.v]) || pi_edges.contains(&e)
    };
    let target = |v: usize| on_pi.contains(&v);
    let (t, hit) = search(g, &[from], &Search { edge_ok: Some(&ok), target: Some(&target), ..Search::default() });
    t.path_to(hit?)
}

pub fn build_preservable_set(
    g: &WeightedGraph,
    tower: &ClusterTower,
    pi: &Path,
    pair: Option<(usize, usize)>,
) -> Result<(PreservableSet, Vec<EdgeId>), PreservableError> {
    let n = g.n();
    let clustering = tower.clustering();
    let mut owner = HashMap::new();
    for (k, c) in clustering.iter().enumerate() {
        for &v in &c.members {
            owner.insert(v, k);
        }
    }
    let mut b = Builder { g, owner, touch: vec![NONE; clustering.len()], paths: Vec::new(), inter: Vec::new(), glued: Vec::new() };
    if !pi.vertices.iter().any(|v| b.owner.contains_key(v)) {
        return Err(PreservableError::HighwayOutside);
    }
    let highway = b.add(pi.clone());
    let root = tower.root();
    let in_root = mask_of(n, &root.members);

    if let Some((c1, c2)) = pair {
        for c in [c1, c2] {
            if c >= clustering.len() {
                return Err(PreservableError::PairNotInClustering(c));
            }
        }
        step_one(&mut b, &in_root, pi, clustering[c1].representative, clustering[c2].representative)?;
    }

    // Second pass: representatives top-down, each glued onto what is there.
    let r = root.representative;
    let q = path_to_highway(g, &in_root, pi, r).ok_or(PreservableError::Unreachable { from: r, to: pi.first() })?;
    b.glue(q);
    for k in 1..tower.levels.len() {
        for c in &tower.levels[k] {
            let parent = &tower.levels[k - 1][c.parent];
            let t = dijkstra_masked(g, c.representative, &mask_of(n, &parent.members));
            let q = t
                .path_to(parent.representative)
                .ok_or(PreservableError::Unreachable { from: c.representative, to: parent.representative })?;
            b.glue(q);
        }
    }
    if let Some(k) = b.touch.iter().position(|&t| t == NONE) {
        return Err(PreservableError::Untouched(clustering[k].id));
    }
    let set = PreservableSet { paths: b.paths, highway, touch: b.touch, glued: b.glued };
    Ok((set, b.inter))
}

fn step_one(b: &mut Builder<'_>, in_root: &[bool], pi: &Path, x: usize, y: usize) -> Result<(), PreservableError> {
    let g = b.g;
    let pxy = dijkstra_masked(g, x, in_root).path_to(y).ok_or(PreservableError::Unreachable { from: x, to: y })?;
    let pi_clusters: BTreeSet<usize> = pi.vertices.iter().map(|&v| b.owner(v)).filter(|&k| k != NONE).collect();
    let pxy_clusters: BTreeSet<usize> = pxy.vertices.iter().map(|&v| b.owner(v)).collect();
    if pxy_clusters.is_disjoint(&pi_clusters) {
        let p1 = path_to_highway(g, in_root, pi, x).ok_or(PreservableError::Unreachable { from: x, to: pi.first() })?;
        b.add(pxy);
        let j2 = p1.vertices.iter().position(|&v| pi_clusters.contains(&b.owner(v))).expect("ends on π");
        let j1 = (0..j2).rev().find(|&j| pxy_clusters.contains(&b.owner(p1.vertices[j]))).expect("starts in C1");
        if j2 == j1 + 1 {
            b.inter.push(p1.edges[j1]);
        } else {
            b.inter.push(p1.edges[j1]);
            b.inter.push(p1.edges[j2 - 1]);
            b.add(p1.slice(j1 + 1, j2));
        }
    } else {
        let j3 = pxy.vertices.iter().position(|&v| pi_clusters.contains(&b.owner(v))).expect("nonempty intersection");
        let mut blocked = pi_clusters.clone();
        if j3 > 0 {
            b.inter.push(pxy.edges[j3 - 1]);
            let prefix = pxy.slice(0, j3);
            blocked.extend(prefix.vertices.iter().map(|&v| b.owner(v)));
            b.add(prefix);
        }
        let j4 = (0..pxy.vertices.len()).rev().find(|&j| blocked.contains(&b.owner(pxy.vertices[j]))).expect("j3 qualifies");
        if j4 + 1 < pxy.vertices.len() {
            b.inter.push(pxy.edges[j4]);
            b.add(pxy.slice(j4 + 1, pxy.vertices.len()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FakeEdge {
    pub v: usize,
    pub anchor: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchGraph {
    pub vertices: Vec<usize>,
    pub real_edges: Vec<EdgeId>,
    pub fake_edges: Vec<FakeEdge>,
    pub inter: Vec<EdgeId>,
    /// μ^i.
    pub scale: f64,
}

pub fn fake_weight(scale: f64, epsilon: f64) -> f64 {
    10.0 * epsilon * scale
}

pub fn build_sketch_graph(
    g: &WeightedGraph,
    tower: &ClusterTower,
    set: &PreservableSet,
    inter: &[EdgeId],
    scale: f64,
    epsilon: f64,
) -> Result<SketchGraph, PreservableError> {
    let mut vertices: BTreeSet<usize> = tower.root().members.iter().copied().collect();
    let mut real = BTreeSet::new();
    for p in &set.paths {
        vertices.extend(&p.vertices);
        real.extend(&p.edges);
    }
    let w = fake_weight(scale, epsilon);
    let mut fake = Vec::new();
    for (k, c) in tower.clustering().iter().enumerate() {
        let t = set.touch.get(k).copied().filter(|&t| t != NONE).ok_or(PreservableError::Untouched(c.id))?;
        let p = &set.paths[t];
        let on_p: BTreeSet<usize> = p.vertices.iter().copied().collect();
        let anchors: Vec<usize> = c.members.iter().copied().filter(|v| on_p.contains(v)).collect();
        let rest: Vec<usize> = c.members.iter().copied().filter(|v| !on_p.contains(v)).collect();
        if rest.is_empty() {
            continue;
        }
        let in_c = mask_of(g.n(), &c.members);
        let p_edges: BTreeSet<EdgeId> = p.edges.iter().copied().collect();
        let ok = |e: EdgeId| {
            let ed = g.edge(e);
            (in_c[ed.u] && in_c[ed.v]) || p_edges.contains(&e)
        };
        let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, NONE); rest.len()];
        for &a in &anchors {
            let (t, _) = search(g, &[a], &Search { edge_ok: Some(&ok), ..Search::default() });
            for (slot, &v) in best.iter_mut().zip(&rest) {
                if t.dist[v] < slot.0 - TOL {
                    *slot = (t.dist[v], a);
                }
            }
        }
        for (&v, &(_, anchor)) in rest.iter().zip(&best) {
            fake.push(FakeEdge { v, anchor, w });
        }
    }
    Ok(SketchGraph { vertices: vertices.into_iter().collect(), real_edges: real.into_iter().collect(), fake_edges: fake, inter: inter.to_vec(), scale })
}

impl SketchGraph {
    fn local(&self) -> HashMap<usize, usize> {
        self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect()
    }

    fn weighted_edges(&self, g: &WeightedGraph) -> Vec<(usize, usize, f64)> {
        let ix = self.local();
        let real = self.real_edges.iter().chain(&self.inter).map(|&e| {
            let ed = g.edge(e);
            (ix[&ed.u], ix[&ed.v], ed.w)
        });
        let fake = self.fake_edges.iter().map(|f| (ix[&f.v], ix[&f.anchor], f.w));
        real.chain(fake).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.real_edges.len() + self.fake_edges.len() + self.inter.len()
    }

    /// Distance oracle over the sketch if it is a tree.
    pub fn tree(&self, g: &WeightedGraph) -> Option<(TreeOracle, HashMap<usize, usize>)> {
        let t = TreeOracle::new(self.vertices.len(), &self.weighted_edges(g), 0).ok()?;
        Some((t, self.local()))
    }
}

/// Results of checking one recursion node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreservableReport {
    pub one_touch: bool,
    pub disjoint: bool,
    pub shortest_paths: bool,
    pub is_tree: bool,
    pub fake_weights_exact: bool,
    /// max d_H(u, v) over same-cluster pairs, in units of εμ^i.
    pub same_cluster_ratio: f64,
    /// max over x ∈ C1, y ∈ C2 of d_H(x, y) − d_Ĝ(x, y) − 44εμ^i (≤ 0 passes).
    pub pair_excess: Option<f64>,
    /// max d_H(u, v) / μ^i over u, v ∈ Ĝ.
    pub diameter_ratio: f64,
    pub glue_monotone: bool,
    /// Whether the diameter ratio is held to 10.
    pub theory: bool,
}

impl PreservableReport {
    pub fn structure_ok(&self) -> bool {
        self.one_touch && self.disjoint && self.is_tree && self.fake_weights_exact && self.same_cluster_ratio <= 21.0 + TOL
    }

    pub fn passed(&self) -> bool {
        self.structure_ok()
            && self.shortest_paths
            && self.glue_monotone
            && self.pair_excess.is_none_or(|e| e <= TOL)
            && (!self.theory || self.diameter_ratio <= 10.0 + TOL)
    }
}

/// `full` adds the distance checks (pair excess, diameter, glue monotonicity,
/// shortest paths), which cost a Dijkstra per vertex of C1 and per cluster.
#[allow(clippy::too_many_arguments)]
pub fn check_preservable(
    g: &WeightedGraph,
    tower: &ClusterTower,
    set: &PreservableSet,
    sketch: &SketchGraph,
    pair: Option<(usize, usize)>,
    epsilon: f64,
    theory: bool,
    full: bool,
) -> PreservableReport {
    let scale = sketch.scale;
    let clustering = tower.clustering();
    let mut rep = PreservableReport { theory, ..PreservableReport::default() };

    let mut seen = HashMap::new();
    rep.disjoint = true;
    for (i, p) in set.paths.iter().enumerate() {
        for &v in &p.vertices {
            if seen.insert(v, i).is_some_and(|j| j != i) {
                rep.disjoint = false;
            }
        }
    }
    rep.one_touch = clustering.iter().enumerate().all(|(k, c)| {
        let touching: BTreeSet<usize> = c.members.iter().filter_map(|v| seen.get(v).copied()).collect();
        touching.len() == 1 && touching.contains(&set.touch[k])
    });
    let w = fake_weight(scale, epsilon);
    rep.fake_weights_exact = sketch.fake_edges.iter().all(|f| f.w.to_bits() == w.to_bits());
    let tree = sketch.tree(g);
    rep.is_tree = tree.is_some() && sketch.edge_count() + 1 == sketch.vertices.len();
    let Some((h, ix)) = tree else {
        rep.same_cluster_ratio = f64::INFINITY;
        rep.diameter_ratio = f64::INFINITY;
        return rep;
    };
    let dh = |u: usize, v: usize| h.distance(ix[&u], ix[&v]);

    let unit = epsilon * scale;
    for c in clustering {
        for (a, &u) in c.members.iter().enumerate() {
            for &v in &c.members[a + 1..] {
                rep.same_cluster_ratio = rep.same_cluster_ratio.max(dh(u, v) / unit);
            }
        }
    }
    // Diameter over Ĝ by a double sweep (exact on tree metrics).
    let members = &tower.root().members;
    let far = |s: usize| members.iter().copied().map(|v| (dh(s, v), v)).fold((0.0, s), |a, b| if b.0 > a.0 { b } else { a });
    let (_, a) = far(members[0]);
    rep.diameter_ratio = far(a).0 / scale;

    if !full {
        rep.shortest_paths = true;
        rep.glue_monotone = true;
        return rep;
    }
    let n = g.n();
    let in_root = mask_of(n, members);
    if let Some((c1, c2)) = pair {
        let mut worst = f64::NEG_INFINITY;
        for &x in &clustering[c1].members {
            let t = dijkstra_masked(g, x, &in_root);
            for &y in &clustering[c2].members {
                worst = worst.max(dh(x, y) - t.dist[y] - 44.0 * unit);
            }
        }
        rep.pair_excess = Some(worst);
    }
    rep.shortest_paths = clustering.iter().enumerate().all(|(k, c)| {
        let p = &set.paths[set.touch[k]];
        let in_c = mask_of(n, &c.members);
        let p_edges: BTreeSet<EdgeId> = p.edges.iter().copied().collect();
        let ok = |e: EdgeId| {
            let ed = g.edge(e);
            (in_c[ed.u] && in_c[ed.v]) || p_edges.contains(&e)
        };
        let (t, _) = search(g, &[p.first()], &Search { edge_ok: Some(&ok), ..Search::default() });
        let mut along = 0.0;
        p.vertices.iter().enumerate().all(|(j, &v)| {
            if j > 0 {
                along += g.edge(p.edges[j - 1]).w;
            }
            (t.dist[v] - along).abs() <= TOL * (1.0 + along)
        })
    });
    // d_H(·, π) via the tree: distance to the nearest highway vertex.
    let pi = &set.paths[set.highway];
    let to_pi = |u: usize| pi.vertices.iter().map(|&p| dh(u, p)).fold(f64::INFINITY, f64::min);
    rep.glue_monotone = set.glued.iter().all(|gl| {
        let base = to_pi(gl.origin) + fake_weight(scale, epsilon) + TOL;
        let hit: BTreeSet<usize> = set.paths[gl.path].vertices.iter().filter_map(|v| clustering.iter().position(|c| c.members.binary_search(v).is_ok())).collect();
        hit.into_iter().all(|k| clustering[k].members.iter().all(|&u| to_pi(u) <= base))
    });
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate::{grid, uniform_line};

    fn flat_tower(members: Vec<usize>, parts: Vec<Vec<usize>>) -> ClusterTower {
        let root = TowerCluster { id: 0, representative: members[0], members, parent: 0 };
        let level = parts
            .into_iter()
            .enumerate()
            .map(|(k, m)| TowerCluster { id: k + 1, representative: m[0], members: m, parent: 0 })
            .collect();
        ClusterTower { levels: vec![vec![root], level] }
    }

    #[test]
    fn single_vertex() {
        let g = uniform_line(1).unwrap();
        let tower = ClusterTower { levels: vec![vec![TowerCluster { id: 0, members: vec![0], representative: 0, parent: 0 }]] };
        let (set, inter) = build_preservable_set(&g, &tower, &Path::single(0), None).unwrap();
        assert_eq!(set.paths, vec![Path::single(0)]);
        assert!(inter.is_empty());
        let sk = build_sketch_graph(&g, &tower, &set, &inter, 1.0, 0.25).unwrap();
        let rep = check_preservable(&g, &tower, &set, &sk, None, 0.25, false, true);
        assert!(rep.passed() && rep.is_tree && rep.pair_excess.is_none());
    }

    #[test]
    fn path_of_singletons() {
        let g = uniform_line(4).unwrap();
        let tower = flat_tower(vec![0, 1, 2, 3], vec![vec![0], vec![1], vec![2], vec![3]]);
        let (set, inter) = build_preservable_set(&g, &tower, &Path::single(0), None).unwrap();
        // Each representative glues a one-vertex path onto its neighbour.
        assert_eq!(set.paths.len(), 4);
        assert_eq!(set.touch, vec![0, 1, 2, 3]);
        let mut ids = inter.clone();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2]);
        let sk = build_sketch_graph(&g, &tower, &set, &inter, 1.0, 0.25).unwrap();
        assert!(sk.fake_edges.is_empty());
        assert!(check_preservable(&g, &tower, &set, &sk, None, 0.25, false, true).passed());
    }

    #[test]
    fn disjoint_pair_adds_bridge() {
        // Path 0..=7; π = (0); clusters {0,1},{2,3},{4,5},{6,7}; pair = last two.
        let g = uniform_line(8).unwrap();
        let tower = flat_tower((0..8).collect(), vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]]);
        let (set, inter) = build_preservable_set(&g, &tower, &Path::single(0), Some((2, 3))).unwrap();
        let pxy = &set.paths[1];
        assert_eq!(pxy.vertices, vec![4, 5, 6]);
        let bridge = &set.paths[2];
        assert_eq!(bridge.vertices, vec![3, 2]);
        // (x'_{j1}, x'_{j1+1}) = (4, 3) and (x'_{j2-1}, x'_{j2}) = (2, 1).
        assert!(inter.contains(&g.edge_id(3, 4).unwrap()));
        assert!(inter.contains(&g.edge_id(1, 2).unwrap()));
        let sk = build_sketch_graph(&g, &tower, &set, &inter, 4.0, 0.25).unwrap();
        let rep = check_preservable(&g, &tower, &set, &sk, Some((2, 3)), 0.25, false, true);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn fake_edges_on_grid() {
        let g = grid(5).unwrap();
        let parts: Vec<Vec<usize>> = (0..5).map(|r| (0..5).map(|c| r * 5 + c).collect()).collect();
        let tower = flat_tower((0..25).collect(), parts);
        let (set, inter) = build_preservable_set(&g, &tower, &Path::single(12), Some((0, 4))).unwrap();
        let sk = build_sketch_graph(&g, &tower, &set, &inter, 6.0, 0.25).unwrap();
        assert_eq!(sk.edge_count() + 1, sk.vertices.len());
        assert!(sk.fake_edges.iter().all(|f| f.w == 10.0 * 0.25 * 6.0));
        let rep = check_preservable(&g, &tower, &set, &sk, Some((0, 4)), 0.25, false, true);
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn errors() {
        let g = uniform_line(4).unwrap();
        let tower = flat_tower(vec![0, 1], vec![vec![0], vec![1]]);
        assert_eq!(build_preservable_set(&g, &tower, &Path::single(3), None).unwrap_err(), PreservableError::HighwayOutside);
        assert_eq!(build_preservable_set(&g, &tower, &Path::single(0), Some((0, 5))).unwrap_err(), PreservableError::PairNotInClustering(5));
    }
}
