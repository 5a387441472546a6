//! Pair-preserving families: copies of each hierarchy in which every
//! cluster is dedicated to one pair of its ε-subclusters.
//!
//! Demand mode assigns each requested vertex pair (u, v) to the lowest
//! level, then the first hierarchy, whose cluster holds both vertices while
//! their ε-subclusters differ, preferring clusters whose induced subgraph
//! keeps d(u, v) and the distance between the subcluster representatives.
//! Copy t of a hierarchy carries, in each cluster, the t-th distinct
//! subcluster pair demanded there.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{HpFamily, HpfError, Hierarchy, PairInfo};
use crate::graph::{dijkstra_masked, DistanceMatrix, WeightedGraph, TOL};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Demand {
    Pairs(Vec<(usize, usize)>),
    /// Every subcluster pair of every cluster (n ≤ 64).
    Exhaustive,
}

/// Where a demanded pair is preserved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub u: usize,
    pub v: usize,
    /// Index of the materialized hierarchy copy.
    pub hierarchy: usize,
    pub cluster: usize,
    pub level: usize,
    pub subclusters: (usize, usize),
    pub d_graph: f64,
    /// d_{G[C]}(u, v).
    pub d_cluster: f64,
    /// μ^level / d_G(u, v).
    pub rho_eff: f64,
    /// Whether G[C] keeps both d(u, v) and the representative distance.
    pub preserved: bool,
}

#[derive(Clone, Debug)]
pub struct PairPreserving {
    pub family: HpFamily,
    pub records: Vec<PairRecord>,
    /// Demanded pairs with u = v.
    pub degenerate: usize,
}

impl PairPreserving {
    pub fn unpreserved(&self) -> usize {
        self.records.iter().filter(|r| !r.preserved).count()
    }
}

struct Hit {
    base: usize,
    level: usize,
    cluster: usize,
    sub: (usize, usize),
    d_cluster: f64,
    preserved: bool,
}

struct Finder<'a> {
    g: &'a WeightedGraph,
    base: &'a HpFamily,
    dist: &'a DistanceMatrix,
    cache: HashMap<(usize, usize, usize), Vec<f64>>,
    mask: Vec<bool>,
}

impl Finder<'_> {
    fn inside(&mut self, h: usize, c: usize, src: usize, dst: usize) -> f64 {
        if !self.cache.contains_key(&(h, c, src)) {
            let members = &self.base.hierarchies[h].clusters[c].members;
            for &x in members {
                self.mask[x] = true;
            }
            let t = dijkstra_masked(self.g, src, &self.mask);
            for &x in members {
                self.mask[x] = false;
            }
            self.cache.insert((h, c, src), t.dist);
        }
        self.cache[&(h, c, src)][dst]
    }

    fn find(&mut self, u: usize, v: usize) -> Hit {
        let mut fallback = None;
        for i in 1..=self.base.i_max() {
            let s = self.base.sub_level(i);
            for h in 0..self.base.hierarchies.len() {
                let hier = &self.base.hierarchies[h];
                let c = hier.cluster_of(i, u);
                if c != hier.cluster_of(i, v) {
                    continue;
                }
                let (cu, cv) = (hier.cluster_of(s, u), hier.cluster_of(s, v));
                if cu == cv {
                    continue;
                }
                let (ru, rv) = (hier.clusters[cu].representative, hier.clusters[cv].representative);
                let d_cluster = self.inside(h, c, u, v);
                let reps = self.inside(h, c, ru, rv);
                let preserved = d_cluster <= self.dist.get(u, v) + TOL && reps <= self.dist.get(ru, rv) + TOL;
                let hit = Hit { base: h, level: i, cluster: c, sub: (cu, cv), d_cluster, preserved };
                if preserved {
                    return hit;
                }
                fallback.get_or_insert(hit);
            }
        }
        fallback.expect("distinct vertices separate below the top")
    }
}

fn separation(dist: &DistanceMatrix, hier: &Hierarchy, a: usize, b: usize) -> f64 {
    let mut best = f64::INFINITY;
    for &x in &hier.clusters[a].members {
        for &y in &hier.clusters[b].members {
            best = best.min(dist.get(x, y));
        }
    }
    best
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn make_pair_preserving(g: &WeightedGraph, base: &HpFamily, dist: &DistanceMatrix, demand: &Demand) -> Result<PairPreserving, HpfError> {
    let n = g.n();
    let mut finder = Finder { g, base, dist, cache: HashMap::new(), mask: vec![false; n] };
    let pairs: Vec<(usize, usize)> = match demand {
        Demand::Pairs(p) => p.clone(),
        Demand::Exhaustive => {
            if n > 64 {
                return Err(HpfError::ExhaustiveTooLarge { n });
            }
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
        }
    };
    // Per base hierarchy, per cluster: distinct subcluster pairs in order.
    let mut lists: Vec<BTreeMap<usize, Vec<(usize, usize)>>> = vec![BTreeMap::new(); base.hierarchies.len()];
    if *demand == Demand::Exhaustive {
        for (h, hier) in base.hierarchies.iter().enumerate() {
            for c in &hier.clusters {
                if c.level == 0 {
                    continue;
                }
                let subs = hier.descendants_at(c.id, base.sub_level(c.level));
                let all: Vec<(usize, usize)> =
                    subs.iter().enumerate().flat_map(|(k, &a)| subs[k + 1..].iter().map(move |&b| (a, b))).collect();
                if !all.is_empty() {
                    lists[h].insert(c.id, all);
                }
            }
        }
    }
    let mut degenerate = 0;
    let mut hits = Vec::new();
    for &(u, v) in &pairs {
        if u == v {
            degenerate += 1;
            continue;
        }
        let (u, v) = ordered(u, v);
        let hit = finder.find(u, v);
        let list = lists[hit.base].entry(hit.cluster).or_default();
        let key = ordered(hit.sub.0, hit.sub.1);
        let t = match list.iter().position(|&p| p == key) {
            Some(t) => t,
            None => {
                list.push(key);
                list.len() - 1
            }
        };
        hits.push((u, v, hit, t));
    }

    let mut first_copy = Vec::with_capacity(base.hierarchies.len());
    let mut hierarchies = Vec::new();
    for (h, hier) in base.hierarchies.iter().enumerate() {
        first_copy.push(hierarchies.len());
        let copies = lists[h].values().map(Vec::len).max().unwrap_or(0);
        for t in 0..copies {
            let mut copy = hier.clone();
            copy.copy = t;
            for (&c, list) in &lists[h] {
                if let Some(&(a, b)) = list.get(t) {
                    let sep = separation(dist, hier, a, b);
                    let scale = base.params.scale(hier.clusters[c].level);
                    copy.clusters[c].pair = Some(PairInfo { first: a, second: b, separation: sep, rho_eff: scale / sep });
                }
            }
            hierarchies.push(copy);
        }
    }
    if hierarchies.is_empty() {
        hierarchies.push(base.hierarchies[0].clone());
    }
    let records = hits
        .into_iter()
        .map(|(u, v, hit, t)| {
            let d_graph = dist.get(u, v);
            PairRecord {
                u,
                v,
                hierarchy: first_copy[hit.base] + t,
                cluster: hit.cluster,
                level: hit.level,
                subclusters: hit.sub,
                d_graph,
                d_cluster: hit.d_cluster,
                rho_eff: base.params.scale(hit.level) / d_graph,
                preserved: hit.preserved,
            }
        })
        .collect();
    let family = HpFamily { hierarchies, ..base.clone_params() };
    Ok(PairPreserving { family, records, degenerate })
}

impl HpFamily {
    fn clone_params(&self) -> HpFamily {
        HpFamily { hierarchies: Vec::new(), params: self.params, ell: self.ell, sigma: self.sigma, slack: self.slack }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::apsp;
    use crate::graph::generate::{grid, uniform_line};
    use crate::hpf::{build_hpf, HpfParams};

    #[test]
    fn path_pair_lands_on_top_cluster() {
        let g = uniform_line(8).unwrap();
        let params = HpfParams { mu: 4.0, epsilon: 0.25, ..HpfParams::default() };
        let base = build_hpf(&g, &params).unwrap();
        let d = apsp(&g).unwrap();
        let pp = make_pair_preserving(&g, &base, &d, &Demand::Pairs(vec![(0, 7)])).unwrap();
        let r = &pp.records[0];
        let hier = &pp.family.hierarchies[r.hierarchy];
        assert_eq!(hier.clusters[r.cluster].members, (0..8).collect::<Vec<_>>());
        let (a, b) = r.subclusters;
        assert!(hier.clusters[a].members.contains(&0));
        assert!(hier.clusters[b].members.contains(&7));
        assert!(r.preserved);
        let info = hier.clusters[r.cluster].pair.unwrap();
        assert_eq!(ordered(info.first, info.second), ordered(a, b));
    }

    #[test]
    fn degenerate_and_empty_demand() {
        let g = uniform_line(4).unwrap();
        let base = build_hpf(&g, &HpfParams::default()).unwrap();
        let d = apsp(&g).unwrap();
        let pp = make_pair_preserving(&g, &base, &d, &Demand::Pairs(vec![(2, 2)])).unwrap();
        assert_eq!(pp.degenerate, 1);
        assert!(pp.records.is_empty());
        assert_eq!(pp.family.hierarchies.len(), 1);
        assert!(pp.family.hierarchies[0].clusters.iter().all(|c| c.pair.is_none()));
    }

    #[test]
    fn assignments_respect_offset_and_separation() {
        let g = grid(6).unwrap();
        let base = build_hpf(&g, &HpfParams::default()).unwrap();
        let d = apsp(&g).unwrap();
        let pairs: Vec<_> = (0..36).flat_map(|u| (u + 1..36).map(move |v| (u, v))).collect();
        let pp = make_pair_preserving(&g, &base, &d, &Demand::Pairs(pairs)).unwrap();
        assert_eq!(pp.records.len(), 630);
        for h in &pp.family.hierarchies {
            for c in &h.clusters {
                if let Some(p) = c.pair {
                    let sub = pp.family.sub_level(c.level);
                    assert_ne!(p.first, p.second);
                    assert_eq!(h.clusters[p.first].level, sub);
                    assert_eq!(h.clusters[p.second].level, sub);
                    assert!(p.separation * p.rho_eff >= pp.family.params.scale(c.level) - 1e-9);
                }
            }
        }
        for r in &pp.records {
            let h = &pp.family.hierarchies[r.hierarchy];
            let p = h.clusters[r.cluster].pair.unwrap();
            assert_eq!(ordered(p.first, p.second), ordered(r.subclusters.0, r.subclusters.1));
        }
    }

    #[test]
    fn exhaustive_limits() {
        let g = grid(9).unwrap();
        let base = build_hpf(&g, &HpfParams::default()).unwrap();
        let d = apsp(&g).unwrap();
        assert!(matches!(
            make_pair_preserving(&g, &base, &d, &Demand::Exhaustive),
            Err(HpfError::ExhaustiveTooLarge { n: 81 })
        ));
    }
}
