//! Tree-selection labels.
//!
//! One compressed subhierarchy per cover tree: the clusters the tree's
//! recursion visited (each cluster's children are its ε-subclusters), with
//! single-child chains contracted. A vertex stores, per subhierarchy, its
//! leaf timestamp and one record per apex (parent of a light ancestor).
//! The lca of two leaves is the deepest apex of either leaf whose interval
//! holds both timestamps.

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Interval, RoutingError};
use crate::cover::TreeCover;
use crate::hpf::{HpFamily, Hierarchy};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectError {
    #[error("selection needs two distinct vertices")]
    Degenerate,
    #[error("no subhierarchy satisfies the lca condition")]
    NoSubhierarchy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CNode {
    pub cluster: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub leaves: usize,
    /// Child index of the heavy child.
    pub heavy: Option<usize>,
    /// Child indices of the assigned subcluster pair.
    pub pair: Option<(usize, usize)>,
    pub interval: Interval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedTree {
    pub tree: usize,
    pub nodes: Vec<CNode>,
    /// Node of each vertex's leaf.
    pub leaf: Vec<usize>,
}

impl CompressedTree {
    fn max_children(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    fn path_to_root(&self, mut v: usize) -> Vec<usize> {
        let mut out = vec![v];
        while let Some(p) = self.nodes[v].parent {
            out.push(p);
            v = p;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApexRecord {
    pub interval: Interval,
    /// Child holding the leaf.
    pub l1: u32,
    /// Heavy child.
    pub l2: Option<u32>,
    /// Assigned pair.
    pub l3: Option<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubLabel {
    pub leaf: u32,
    /// Top-down.
    pub apices: Vec<ApexRecord>,
}

/// parts[k] belongs to the subhierarchy of cover tree k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionLabel {
    pub parts: Vec<SubLabel>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionScheme {
    pub subs: Vec<CompressedTree>,
    pub labels: Vec<SelectionLabel>,
    /// ⌈log2(max children + 1)⌉; the all-ones index means "none".
    pub index_bits: u32,
}

fn compress(hier: &Hierarchy, family: &HpFamily, c: usize) -> usize {
    let mut c = c;
    loop {
        let kids = sub_children(hier, family, c);
        if kids.len() != 1 {
            return c;
        }
        c = kids[0];
    }
}

fn sub_children(hier: &Hierarchy, family: &HpFamily, c: usize) -> Vec<usize> {
    let level = hier.cluster(c).level;
    if level == 0 {
        return Vec::new();
    }
    hier.descendants_at(c, family.sub_level(level))
}

pub fn build_compressed(family: &HpFamily, h: usize, offset: usize, tree: usize, n: usize) -> CompressedTree {
    let hier = &family.hierarchies[h];
    let mut nodes: Vec<CNode> = Vec::new();
    let mut leaf = vec![usize::MAX; n];
    let blank = Interval { lo: 0, hi: 0 };
    // Preorder build: nodes get ids in timestamp order.
    let mut stack = vec![(compress(hier, family, hier.top_at(offset)), None::<usize>)];
    while let Some((c, parent)) = stack.pop() {
        let id = nodes.len();
        let cl = hier.cluster(c);
        let kids: Vec<usize> = sub_children(hier, family, c).into_iter().map(|k| compress(hier, family, k)).collect();
        let pair = cl.pair.map(|p| {
            let at = |x: usize| kids.iter().position(|&k| k == compress(hier, family, x)).expect("pair member is a child");
            (at(p.first), at(p.second))
        });
        if kids.is_empty() {
            leaf[cl.members[0]] = id;
        }
        nodes.push(CNode { cluster: c, parent, children: Vec::new(), leaves: 0, heavy: None, pair, interval: blank });
        if let Some(p) = parent {
            nodes[p].children.push(id);
        }
        for &k in kids.iter().rev() {
            stack.push((k, Some(id)));
        }
    }
    // Children were pushed in reverse, so each child list is in order.
    for id in (0..nodes.len()).rev() {
        let leaves = if nodes[id].children.is_empty() { 1 } else { nodes[id].children.iter().map(|&c| nodes[c].leaves).sum() };
        nodes[id].leaves = leaves;
        nodes[id].heavy = nodes[id].children.iter().position(|&c| 2 * nodes[c].leaves > leaves);
        let hi = nodes[id].children.last().map_or(id, |&c| nodes[c].interval.hi as usize);
        nodes[id].interval = Interval { lo: id as u32, hi: hi as u32 };
    }
    CompressedTree { tree, nodes, leaf }
}

fn sub_label(ct: &CompressedTree, v: usize) -> SubLabel {
    let path = ct.path_to_root(ct.leaf[v]);
    let mut apices = Vec::new();
    for w in path.windows(2) {
        let (a, p) = (w[0], w[1]);
        let node = &ct.nodes[p];
        let idx = node.children.iter().position(|&c| c == a).expect("child of parent");
        if node.heavy != Some(idx) {
            apices.push(ApexRecord {
                interval: node.interval,
                l1: idx as u32,
                l2: node.heavy.map(|h| h as u32),
                l3: node.pair.map(|(a, b)| (a as u32, b as u32)),
            });
        }
    }
    apices.reverse();
    SubLabel { leaf: ct.nodes[ct.leaf[v]].interval.lo, apices }
}

pub fn build_selection_labels(family: &HpFamily, cover: &TreeCover) -> Result<SelectionScheme, RoutingError> {
    let n = family.hierarchies[0].partitions[0].len();
    let mut subs = Vec::with_capacity(cover.trees.len());
    for (k, t) in cover.trees.iter().enumerate() {
        let p = t.provenance;
        if p.hierarchy >= family.hierarchies.len() || p.offset > family.i_max() {
            return Err(RoutingError::Mismatch(format!("tree {k} names hierarchy {} offset {}", p.hierarchy, p.offset)));
        }
        subs.push(build_compressed(family, p.hierarchy, p.offset, k, n));
    }
    let labels = (0..n).map(|v| SelectionLabel { parts: subs.iter().map(|ct| sub_label(ct, v)).collect() }).collect();
    let max_children = subs.iter().map(CompressedTree::max_children).max().unwrap_or(0);
    let index_bits = (usize::BITS - max_children.leading_zeros()).max(1);
    Ok(SelectionScheme { subs, labels, index_bits })
}

/// Children (of the lca) holding x and y, if the labels determine them.
fn lca_children(x: &SubLabel, y: &SubLabel) -> Option<(u32, u32, Option<(u32, u32)>)> {
    let both = |r: &&ApexRecord| r.interval.contains(x.leaf) && r.interval.contains(y.leaf);
    let bx = x.apices.iter().filter(both).max_by_key(|r| r.interval.lo);
    let by = y.apices.iter().filter(both).max_by_key(|r| r.interval.lo);
    let lo = |r: Option<&ApexRecord>| r.map_or(-1, |r| r.interval.lo as i64);
    match (bx, by) {
        (Some(a), Some(b)) if a.interval == b.interval => Some((a.l1, b.l1, a.l3)),
        (Some(a), _) if lo(Some(a)) > lo(by) => Some((a.l1, a.l2?, a.l3)),
        (_, Some(b)) => Some((b.l2?, b.l1, b.l3)),
        _ => None,
    }
}

/// Index of the first tree whose subhierarchy meets the lca condition.
pub fn select_tree(x: &SelectionLabel, y: &SelectionLabel) -> Result<usize, SelectError> {
    if x == y {
        return Err(SelectError::Degenerate);
    }
    for (k, (a, b)) in x.parts.iter().zip(&y.parts).enumerate() {
        if a.leaf == b.leaf {
            return Err(SelectError::Degenerate);
        }
        if let Some((cx, cy, Some((p, q)))) = lca_children(a, b) {
            if (cx, cy) == (p, q) || (cx, cy) == (q, p) {
                return Ok(k);
            }
        }
    }
    Err(SelectError::NoSubhierarchy)
}

/// Direct check on the cluster tree.
pub fn lca_condition(ct: &CompressedTree, x: usize, y: usize) -> bool {
    let px = ct.path_to_root(ct.leaf[x]);
    let py = ct.path_to_root(ct.leaf[y]);
    let Some(pos) = px.iter().position(|a| py.contains(a)) else {
        return false;
    };
    if pos == 0 {
        return false;
    }
    let lca = px[pos];
    let qy = py.iter().position(|&a| a == lca).expect("common ancestor");
    let node = &ct.nodes[lca];
    let idx = |c: usize| node.children.iter().position(|&k| k == c).expect("child");
    let (cx, cy) = (idx(px[pos - 1]), idx(py[qy - 1]));
    node.pair.is_some_and(|(a, b)| (cx, cy) == (a, b) || (cx, cy) == (b, a))
}

impl SelectionScheme {
    pub(crate) fn encode(&self, bits: &mut BitVec<u8, Msb0>, v: usize, word: u32) {
        let k = self.index_bits;
        let none = (1u64 << k) - 1;
        for part in &self.labels[v].parts {
            super::push(bits, part.leaf as u64, word);
            super::push(bits, part.apices.len() as u64, word);
            for r in &part.apices {
                super::push(bits, r.interval.lo as u64, word);
                super::push(bits, r.interval.hi as u64, word);
                super::push(bits, r.l1 as u64, k);
                super::push(bits, r.l2.map_or(none, u64::from), k);
                let (a, b) = r.l3.map_or((none, none), |(a, b)| (a as u64, b as u64));
                super::push(bits, a, k);
                super::push(bits, b, k);
            }
        }
    }

    /// Σ over subhierarchies of (2 words for leaf and count + apices ×
    /// (2 words + 4 indices)).
    pub fn label_bits(&self, v: usize, word: u32) -> usize {
        let rec = 2 * word as usize + 4 * self.index_bits as usize;
        self.labels[v].parts.iter().map(|p| 2 * word as usize + p.apices.len() * rec).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{span_tree_cover, CoverConfig};
    use crate::graph::generate::{grid, uniform_line};

    #[test]
    fn path_family_compresses() {
        let g = uniform_line(2).unwrap();
        let b = span_tree_cover(&g, &CoverConfig::default()).unwrap();
        let s = build_selection_labels(&b.preserving.family, &b.cover).unwrap();
        for ct in &s.subs {
            assert_eq!(ct.nodes.len(), 3);
            assert_eq!(ct.nodes[0].children, vec![1, 2]);
        }
        assert!(s.labels.iter().all(|l| l.parts.iter().all(|p| p.apices.len() == 1)));
        assert_eq!(select_tree(&s.labels[0], &s.labels[1]), Ok(0));
        assert_eq!(select_tree(&s.labels[0], &s.labels[0]), Err(SelectError::Degenerate));
    }

    #[test]
    fn decoding_matches_brute_force() {
        let g = grid(6).unwrap();
        let b = span_tree_cover(&g, &CoverConfig::default()).unwrap();
        let s = build_selection_labels(&b.preserving.family, &b.cover).unwrap();
        for ct in &s.subs {
            let leaves = ct.nodes[0].leaves;
            let bound = (usize::BITS - 1 - leaves.leading_zeros()) as usize + 1;
            for x in 0..36 {
                let l = sub_label(ct, x);
                assert!(l.apices.len() <= bound);
                assert!(l.apices.iter().all(|r| (r.l1 as usize) < ct.max_children()));
            }
        }
        for x in 0..36 {
            for y in 0..36 {
                if x == y {
                    continue;
                }
                let brute = s.subs.iter().position(|ct| lca_condition(ct, x, y));
                assert_eq!(select_tree(&s.labels[x], &s.labels[y]).ok(), brute, "pair ({x}, {y})");
                assert!(brute.is_some(), "demanded pair ({x}, {y}) unselected");
            }
        }
    }
}
