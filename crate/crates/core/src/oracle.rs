//! Exact tree distance oracles and the min-over-trees path-reporting
//! oracle for a cover.
//!
//! Each tree gets an Euler tour with a sparse table over tour depths, so
//! lca and distance queries are O(1) after O(n log n) preprocessing.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cover::{SpanningTree, TreeCover};
use crate::graph::WeightedGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("edge set is not a spanning tree: {0}")]
    NotATree(String),
    #[error("tree {tree} uses {u}-{v}, which is not a graph edge")]
    MissingEdge { tree: usize, u: usize, v: usize },
}

#[derive(Clone, Debug)]
pub struct TreeOracle {
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<u32>,
    wdepth: Vec<f64>,
    /// Weight of the edge to the parent; 0 at the root.
    up: Vec<f64>,
    euler: Vec<u32>,
    first: Vec<u32>,
    sparse: Vec<Vec<u32>>,
}

impl TreeOracle {
    /// Tree on vertices `0..n` given as weighted edges.
    pub fn new(n: usize, edges: &[(usize, usize, f64)], root: usize) -> Result<Self, OracleError> {
        if edges.len() + 1 != n {
            return Err(OracleError::NotATree(format!("{} edges on {} vertices", edges.len(), n)));
        }
        if root >= n {
            return Err(OracleError::NotATree(format!("root {root} out of range")));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(OracleError::NotATree(format!("edge {u}-{v} out of range")));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for a in &mut adj {
            a.sort_by_key(|x| x.0);
        }
        let mut parent = vec![None; n];
        let mut depth = vec![0u32; n];
        let mut wdepth = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut first = vec![u32::MAX; n];
        let mut euler = Vec::with_capacity(2 * n);
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        first[root] = 0;
        euler.push(root as u32);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let (c, w) = adj[v][*next];
                *next += 1;
                if Some(c) == parent[v] {
                    continue;
                }
                if first[c] != u32::MAX {
                    return Err(OracleError::NotATree(format!("cycle through {c}")));
                }
                parent[c] = Some(v);
                depth[c] = depth[v] + 1;
                wdepth[c] = wdepth[v] + w;
                up[c] = w;
                first[c] = euler.len() as u32;
                euler.push(c as u32);
                stack.push((c, 0));
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    euler.push(p as u32);
                }
            }
        }
        if let Some(v) = first.iter().position(|&f| f == u32::MAX) {
            return Err(OracleError::NotATree(format!("vertex {v} unreachable")));
        }
        let mut sparse = vec![(0..euler.len() as u32).collect::<Vec<_>>()];
        let mut span = 1;
        while 2 * span <= euler.len() {
            let prev = sparse.last().unwrap();
            let row = (0..=euler.len() - 2 * span)
                .map(|i| {
                    let (a, b) = (prev[i], prev[i + span]);
                    if depth[euler[a as usize] as usize] <= depth[euler[b as usize] as usize] {
                        a
                    } else {
                        b
                    }
                })
                .collect();
            sparse.push(row);
            span *= 2;
        }
        Ok(TreeOracle { root, parent, depth, wdepth, up, euler, first, sparse })
    }

    /// Spanning tree of `g` given by vertex pairs.
    pub fn for_tree(g: &WeightedGraph, tree: &SpanningTree) -> Result<Self, OracleError> {
        let mut edges = Vec::with_capacity(tree.edges.len());
        for &(u, v) in &tree.edges {
            let id = g.edge_id(u, v).ok_or(OracleError::MissingEdge { tree: 0, u, v })?;
            edges.push((u, v, g.edge(id).w));
        }
        TreeOracle::new(g.n(), &edges, tree.root)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn weighted_depth(&self, v: usize) -> f64 {
        self.wdepth[v]
    }

    pub fn lca(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = (self.first[u] as usize, self.first[v] as usize);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let k = (usize::BITS - 1 - (b - a + 1).leading_zeros()) as usize;
        let (x, y) = (self.sparse[k][a], self.sparse[k][b + 1 - (1 << k)]);
        let (x, y) = (self.euler[x as usize] as usize, self.euler[y as usize] as usize);
        if self.depth[x] <= self.depth[y] {
            x
        } else {
            y
        }
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        let l = self.lca(u, v);
        self.wdepth[u] + self.wdepth[v] - 2.0 * self.wdepth[l]
    }

    /// Edge weights summed left to right along `path(u, v)`. Agrees to the
    /// last bit with any search that accumulates from `u`, unlike `distance`.
    pub fn path_distance(&self, u: usize, v: usize) -> f64 {
        let path = self.path(u, v);
        let mut d = 0.0;
        for p in path.windows(2) {
            d += if self.parent[p[0]] == Some(p[1]) { self.up[p[0]] } else { self.up[p[1]] };
        }
        d
    }

    /// Vertices from `u` to `v` along the tree.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let l = self.lca(u, v);
        let mut up = vec![u];
        let mut x = u;
        while x != l {
            x = self.parent[x].expect("lca is an ancestor");
            up.push(x);
        }
        let mut down = Vec::new();
        let mut y = v;
        while y != l {
            down.push(y);
            y = self.parent[y].expect("lca is an ancestor");
        }
        up.extend(down.into_iter().rev());
        up
    }
}

/// Answer of a distance query: the estimate and the tree achieving it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub distance: f64,
    pub tree: usize,
}

#[derive(Debug)]
pub struct OracleIndex {
    trees: Vec<TreeOracle>,
    evaluations: AtomicUsize,
}

pub fn build_oracle(g: &WeightedGraph, cover: &TreeCover) -> Result<OracleIndex, OracleError> {
    let trees = cover
        .trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            TreeOracle::for_tree(g, t).map_err(|e| match e {
                OracleError::MissingEdge { u, v, .. } => OracleError::MissingEdge { tree: i, u, v },
                other => other,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(OracleIndex { trees, evaluations: AtomicUsize::new(0) })
}

impl OracleIndex {
    pub fn from_oracles(trees: Vec<TreeOracle>) -> Self {
        OracleIndex { trees, evaluations: AtomicUsize::new(0) }
    }

    pub fn tree(&self, i: usize) -> &TreeOracle {
        &self.trees[i]
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Total per-tree distance evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    /// min over trees of d_T(u, v); ties go to the smaller tree index.
    /// Trees within rounding of the minimum are re-summed along their paths
    /// so the estimate equals the weight of the returned path exactly.
    pub fn query_distance(&self, u: usize, v: usize) -> Estimate {
        if u == v {
            return Estimate { distance: 0.0, tree: 0 };
        }
        let fast: Vec<f64> = self.trees.iter().map(|t| t.distance(u, v)).collect();
        self.evaluations.fetch_add(self.trees.len(), Ordering::Relaxed);
        let min = fast.iter().copied().fold(f64::INFINITY, f64::min);
        let slack = 1e-9 * min.max(1.0);
        let mut best = Estimate { distance: f64::INFINITY, tree: 0 };
        for (i, &d) in fast.iter().enumerate() {
            if d <= min + slack {
                let exact = self.trees[i].path_distance(u, v);
                if exact < best.distance {
                    best = Estimate { distance: exact, tree: i };
                }
            }
        }
        best
    }

    /// The vertex path in the argmin tree, with the estimate.
    pub fn query_path(&self, u: usize, v: usize) -> (Vec<usize>, Estimate) {
        let est = self.query_distance(u, v);
        if u == v {
            return (vec![u], est);
        }
        (self.trees[est.tree].path(u, v), est)
    }
}
