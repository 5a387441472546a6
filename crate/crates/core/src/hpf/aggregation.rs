//! Cluster aggregation: merge the clusters of one level into connected
//! groups, one per portal.
//!
//! A Dijkstra-style forest over the cluster adjacency graph. Clusters that
//! contain a portal are seeded at cost 0. Reaching cluster B through edge
//! (a, b) costs dist(a) + w + ecc_B(b), where dist(a) is the distance from
//! the portal through the clusters already adopted and ecc_B(b) is the
//! eccentricity of b inside G[B]. Each cluster adopts the label that reaches
//! it first, so every preimage is a tree of adjacent clusters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::HpfError;
use crate::graph::{dijkstra_masked, search, Search, WeightedGraph};

#[derive(PartialEq)]
struct Offer {
    key: f64,
    portal: usize,
    cluster: usize,
    entry: usize,
    entry_dist: f64,
}

impl Eq for Offer {}

impl Ord for Offer {
    fn cmp(&self, o: &Self) -> Ordering {
        o.key
            .total_cmp(&self.key)
            .then(o.portal.cmp(&self.portal))
            .then(o.cluster.cmp(&self.cluster))
            .then(o.entry.cmp(&self.entry))
    }
}

impl PartialOrd for Offer {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Returns the portal assigned to each input cluster.
pub fn cluster_aggregation(g: &WeightedGraph, clusters: &[Vec<usize>], portals: &[usize]) -> Result<Vec<usize>, HpfError> {
    if portals.is_empty() {
        return Err(HpfError::NoPortals);
    }
    let n = g.n();
    let mut owner = vec![usize::MAX; n];
    for (k, c) in clusters.iter().enumerate() {
        for &v in c {
            owner[v] = k;
        }
    }
    let mut mask = vec![false; n];
    let local = |k: usize, from: usize, mask: &mut Vec<bool>| {
        for &v in &clusters[k] {
            mask[v] = true;
        }
        let t = dijkstra_masked(g, from, mask);
        for &v in &clusters[k] {
            mask[v] = false;
        }
        t.dist
    };
    let mut ecc = vec![f64::NAN; n];
    let mut label: Vec<Option<usize>> = vec![None; clusters.len()];
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();

    let mut sorted = portals.to_vec();
    sorted.sort_unstable();
    for &p in &sorted {
        if label[owner[p]].is_none() {
            heap.push(Offer { key: 0.0, portal: p, cluster: owner[p], entry: p, entry_dist: 0.0 });
        }
    }
    while let Some(offer) = heap.pop() {
        let k = offer.cluster;
        if label[k].is_some() {
            continue;
        }
        label[k] = Some(offer.portal);
        let d = local(k, offer.entry, &mut mask);
        for &v in &clusters[k] {
            dist[v] = offer.entry_dist + d[v];
        }
        for &v in &clusters[k] {
            for a in g.neighbors(v) {
                let kb = owner[a.to];
                if label[kb].is_some() {
                    continue;
                }
                if ecc[a.to].is_nan() {
                    let db = local(kb, a.to, &mut mask);
                    ecc[a.to] = clusters[kb].iter().map(|&x| db[x]).fold(0.0, f64::max);
                }
                let entry_dist = dist[v] + a.w;
                heap.push(Offer {
                    key: entry_dist + ecc[a.to],
                    portal: offer.portal,
                    cluster: kb,
                    entry: a.to,
                    entry_dist,
                });
            }
        }
    }
    Ok(label.into_iter().map(|l| l.expect("connected graph reaches every cluster")).collect())
}

/// max_v d_{G[f⁻¹(f(v))]}(v, f(v)) − d_G(v, portals).
pub fn aggregation_distortion(g: &WeightedGraph, clusters: &[Vec<usize>], assignment: &[usize], portals: &[usize]) -> f64 {
    let (to_portals, _) = search(g, portals, &Search::default());
    let mut worst: f64 = 0.0;
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (k, &p) in assignment.iter().enumerate() {
        groups.entry(p).or_default().extend(&clusters[k]);
    }
    for (p, members) in groups {
        let mut mask = vec![false; g.n()];
        for &v in &members {
            mask[v] = true;
        }
        let t = dijkstra_masked(g, p, &mask);
        for &v in &members {
            worst = worst.max(t.dist[v] - to_portals.dist[v]);
        }
    }
    worst
}
