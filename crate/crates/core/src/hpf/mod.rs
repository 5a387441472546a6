//! Hierarchical partition families.
//!
//! A hierarchy is a sequence of partitions, level 0 singletons and the top
//! level a single cluster, with level-i clusters of strong diameter at most
//! μ^i. A family of hierarchies is padded if every ball B(v, μ^i/ρ) fits
//! inside a level-i cluster of some member.

pub mod aggregation;
pub mod nets;
pub mod pairs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aggregation::{aggregation_distortion, cluster_aggregation};
pub use nets::{build_net_hierarchy, build_subnet_family, NetHierarchy, SubnetFamily};
pub use pairs::{make_pair_preserving, Demand, PairPreserving, PairRecord};

use crate::graph::{dijkstra_masked, search, GraphError, Search, WeightedGraph, TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HpfError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{unplaced} leftover net points at level {level} fit in none of the σ families")]
    SigmaInsufficient { level: usize, unplaced: usize },
    #[error("cluster aggregation needs at least one portal")]
    NoPortals,
    #[error("hierarchy {hierarchy} cluster {cluster} (level {level}) has strong diameter {diameter} > {bound}")]
    StrongDiameter { hierarchy: usize, cluster: usize, level: usize, diameter: f64, bound: f64 },
    #[error("exhaustive pair mode is limited to n ≤ 64 (got {n})")]
    ExhaustiveTooLarge { n: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HpfParams {
    pub mu: f64,
    /// Padding parameter checked by [`verify_padding`].
    pub rho: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Enforce the parameter couplings the conditional bounds need.
    pub theory: bool,
}

impl Default for HpfParams {
    fn default() -> Self {
        HpfParams { mu: 6.0, rho: 24.0, eta: 1.0, epsilon: 0.25, theory: false }
    }
}

impl HpfParams {
    pub fn validate(&self) -> Result<(), HpfError> {
        let bad = |s: &str| Err(HpfError::InvalidParams(s.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if !(self.mu >= 2.0) || !self.mu.is_finite() {
            return bad("mu must be at least 2");
        }
        if !(self.eta >= 1.0) || !self.eta.is_finite() {
            return bad("eta must be at least 1");
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return bad("rho must be positive");
        }
        if self.theory && (self.rho < 24.0 || self.eta < 5.0) {
            return bad("theory mode needs rho ≥ 24 and eta ≥ 5");
        }
        Ok(())
    }

    /// Offset ℓ = ⌈log_μ(1/ε)⌉, computed without floating logs so exact
    /// powers land on the right integer.
    pub fn ell(&self) -> usize {
        let mut k = 1;
        while self.mu.powi(k as i32) * self.epsilon < 1.0 - 1e-12 {
            k += 1;
        }
        k
    }

    pub fn scale(&self, level: usize) -> f64 {
        self.mu.powi(level as i32)
    }
}

/// An assigned pair of ε-subclusters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairInfo {
    pub first: usize,
    pub second: usize,
    /// d_G(first, second).
    pub separation: f64,
    /// μ^level / separation.
    pub rho_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub level: usize,
    pub members: Vec<usize>,
    pub portal: usize,
    pub representative: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub diameter: f64,
    pub pair: Option<PairInfo>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Hierarchy {
    /// partitions[level][v] = id of the level cluster holding v.
    pub partitions: Vec<Vec<usize>>,
    pub clusters: Vec<Cluster>,
    /// Cluster ids per level, in id order.
    pub levels: Vec<Vec<usize>>,
    pub i_max: usize,
    /// Index of the subnet hierarchy this was built from.
    pub source: usize,
    /// Copy number within its source (pair-preserving families).
    pub copy: usize,
}

impl Hierarchy {
    pub fn cluster(&self, id: usize) -> &Cluster {
        &self.clusters[id]
    }

    pub fn cluster_of(&self, level: usize, v: usize) -> usize {
        self.partitions[level][v]
    }

    pub fn top_at(&self, level: usize) -> usize {
        self.partitions[level][0]
    }

    /// Descendants of `id` at `level` (≤ its own level), in id order.
    pub fn descendants_at(&self, id: usize, level: usize) -> Vec<usize> {
        let mut frontier = vec![id];
        while self.clusters[frontier[0]].level > level {
            frontier = frontier.iter().flat_map(|&c| self.clusters[c].children.iter().copied()).collect();
        }
        frontier.sort_unstable();
        frontier
    }

    pub fn max_children(&self) -> usize {
        self.clusters.iter().map(|c| c.children.len()).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HpFamily {
    pub hierarchies: Vec<Hierarchy>,
    pub params: HpfParams,
    pub ell: usize,
    pub sigma: usize,
    /// Number of leftover seed families seeding never used.
    pub slack: usize,
}

impl HpFamily {
    pub fn i_max(&self) -> usize {
        self.hierarchies[0].i_max
    }

    /// Level of the ε-subclusters of a level-i cluster.
    pub fn sub_level(&self, level: usize) -> usize {
        level.saturating_sub(self.ell)
    }

    /// Offsets j with a tree per copy: the top ℓ levels.
    pub fn offsets(&self) -> std::ops::RangeInclusive<usize> {
        self.i_max() + 1 - self.ell..=self.i_max()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("family serializes")
    }
}

fn restricted_diameter(g: &WeightedGraph, members: &[usize]) -> f64 {
    let mut mask = vec![false; g.n()];
    for &v in members {
        mask[v] = true;
    }
    members
        .iter()
        .map(|&s| {
            let t = dijkstra_masked(g, s, &mask);
            members.iter().map(|&v| t.dist[v]).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn build_hierarchy(g: &WeightedGraph, subnets: &[Vec<usize>], ell: usize, source: usize) -> Result<Hierarchy, HpfError> {
    let n = g.n();
    let mut clusters: Vec<Cluster> = (0..n)
        .map(|v| Cluster {
            id: v,
            level: 0,
            members: vec![v],
            portal: v,
            representative: v,
            parent: None,
            children: Vec::new(),
            diameter: 0.0,
            pair: None,
        })
        .collect();
    let mut levels = vec![(0..n).collect::<Vec<_>>()];
    for (i, portals) in subnets.iter().enumerate().skip(1) {
        let below = levels[i - 1].clone();
        let members: Vec<Vec<usize>> = below.iter().map(|&c| clusters[c].members.clone()).collect();
        let assignment = cluster_aggregation(g, &members, portals)?;
        let mut ids = Vec::new();
        let mut portal_order: Vec<usize> = assignment.clone();
        portal_order.sort_unstable();
        portal_order.dedup();
        for p in portal_order {
            let id = clusters.len();
            let children: Vec<usize> = below.iter().zip(&assignment).filter(|(_, &a)| a == p).map(|(&c, _)| c).collect();
            let mut m: Vec<usize> = children.iter().flat_map(|&c| clusters[c].members.iter().copied()).collect();
            m.sort_unstable();
            for &c in &children {
                clusters[c].parent = Some(id);
            }
            let diameter = if children.len() == 1 { clusters[children[0]].diameter } else { restricted_diameter(g, &m) };
            clusters.push(Cluster {
                id,
                level: i,
                representative: m[0],
                members: m,
                portal: p,
                parent: None,
                children,
                diameter,
                pair: None,
            });
            ids.push(id);
        }
        levels.push(ids);
    }
    // ℓ − 1 trivial levels above the first single-cluster level.
    for _ in 1..ell {
        let below = *levels.last().unwrap().first().unwrap();
        let id = clusters.len();
        let prev = clusters[below].clone();
        clusters[below].parent = Some(id);
        clusters.push(Cluster {
            id,
            level: prev.level + 1,
            parent: None,
            children: vec![below],
            pair: None,
            ..prev
        });
        levels.push(vec![id]);
    }
    let mut partitions = vec![vec![0; n]; levels.len()];
    for (i, ids) in levels.iter().enumerate() {
        for &c in ids {
            for &v in &clusters[c].members {
                partitions[i][v] = c;
            }
        }
    }
    let i_max = levels.len() - 1;
    Ok(Hierarchy { partitions, clusters, levels, i_max, source, copy: 0 })
}

/// One hierarchy per subnet hierarchy. Strong diameter is asserted.
pub fn build_hpf(g: &WeightedGraph, params: &HpfParams) -> Result<HpFamily, HpfError> {
    params.validate()?;
    let nets = build_net_hierarchy(g, params.mu, params.eta);
    let fam = build_subnet_family(g, &nets, params.mu)?;
    let ell = params.ell();
    let hierarchies: Vec<Hierarchy> = fam
        .subnets
        .par_iter()
        .enumerate()
        .map(|(j, s)| build_hierarchy(g, s, ell, j))
        .collect::<Result<_, _>>()?;
    let family = HpFamily { hierarchies, params: *params, ell, sigma: fam.sigma, slack: fam.sigma - fam.used };
    if let Some(v) = strong_diameter_violations(&family).into_iter().next() {
        return Err(v);
    }
    Ok(family)
}

pub fn strong_diameter_violations(family: &HpFamily) -> Vec<HpfError> {
    let mut out = Vec::new();
    for (h, hier) in family.hierarchies.iter().enumerate() {
        for c in &hier.clusters {
            let bound = family.params.scale(c.level);
            if c.diameter > bound + TOL {
                out.push(HpfError::StrongDiameter { hierarchy: h, cluster: c.id, level: c.level, diameter: c.diameter, bound });
            }
        }
    }
    out
}

/// Structural check of one hierarchy: refinement, singletons at level 0,
/// a single top cluster, connected clusters. One message per problem.
pub fn check_hierarchy(g: &WeightedGraph, hier: &Hierarchy) -> Vec<String> {
    let mut bad = Vec::new();
    let n = g.n();
    if hier.levels[0].len() != n || hier.levels[0].iter().any(|&c| hier.clusters[c].members.len() != 1) {
        bad.push("level 0 is not all singletons".into());
    }
    if hier.levels[hier.i_max].len() != 1 {
        bad.push("top level has more than one cluster".into());
    }
    for (i, ids) in hier.levels.iter().enumerate() {
        let mut seen = vec![false; n];
        for &c in ids {
            let cl = &hier.clusters[c];
            for &v in &cl.members {
                if std::mem::replace(&mut seen[v], true) {
                    bad.push(format!("level {i}: vertex {v} in two clusters"));
                }
            }
            if i > 0 {
                let mut union: Vec<usize> = cl.children.iter().flat_map(|&k| hier.clusters[k].members.iter().copied()).collect();
                union.sort_unstable();
                if union != cl.members {
                    bad.push(format!("cluster {c}: children do not partition it"));
                }
                if cl.children.iter().any(|&k| hier.clusters[k].level + 1 != i) {
                    bad.push(format!("cluster {c}: child at wrong level"));
                }
            }
            if !cl.diameter.is_finite() {
                bad.push(format!("cluster {c}: induced subgraph disconnected"));
            }
        }
        if seen.iter().any(|s| !s) {
            bad.push(format!("level {i} does not cover V"));
        }
    }
    bad
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PaddingReport {
    pub checked: usize,
    pub failures: Vec<(usize, usize)>,
}

/// For each sampled (v, i): does some hierarchy have a level-i cluster
/// containing every vertex within μ^i/ρ of v?
pub fn verify_padding(g: &WeightedGraph, family: &HpFamily, rho: f64, sample: &[(usize, usize)]) -> PaddingReport {
    let failures: Vec<(usize, usize)> = sample
        .par_iter()
        .filter(|&&(v, i)| {
            let r = family.params.scale(i) / rho;
            let (t, _) = search(g, &[v], &Search { bound: r, ..Search::default() });
            let ball: Vec<usize> = (0..g.n()).filter(|&u| t.dist[u] <= r + TOL).collect();
            !family.hierarchies.iter().any(|h| {
                let level = i.min(h.i_max);
                let c = h.cluster_of(level, v);
                ball.iter().all(|&u| h.cluster_of(level, u) == c)
            })
        })
        .copied()
        .collect();
    PaddingReport { checked: sample.len(), failures }
}

/// Every (vertex, level) pair of the family.
pub fn all_vertex_levels(n: usize, family: &HpFamily) -> Vec<(usize, usize)> {
    (0..=family.i_max()).flat_map(|i| (0..n).map(move |v| (v, i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate::{grid, uniform_line};

    #[test]
    fn ell_is_exact_on_powers() {
        let p = |mu, epsilon| HpfParams { mu, epsilon, ..HpfParams::default() };
        assert_eq!(p(4.0, 0.25).ell(), 1);
        assert_eq!(p(6.0, 0.25).ell(), 1);
        assert_eq!(p(2.0, 0.25).ell(), 2);
        assert_eq!(p(64.0, 1.0 / 64.0).ell(), 1);
        assert_eq!(p(2.0, 0.1).ell(), 4);
    }

    #[test]
    fn params_validation() {
        assert!(HpfParams::default().validate().is_ok());
        assert!(HpfParams { epsilon: 1.0, ..HpfParams::default() }.validate().is_err());
        assert!(HpfParams { mu: 1.5, ..HpfParams::default() }.validate().is_err());
        assert!(HpfParams { theory: true, ..HpfParams::default() }.validate().is_err());
        assert!(HpfParams { theory: true, eta: 5.0, ..HpfParams::default() }.validate().is_ok());
    }

    #[test]
    fn single_vertex_family() {
        let g = uniform_line(1).unwrap();
        let f = build_hpf(&g, &HpfParams::default()).unwrap();
        assert_eq!(f.hierarchies.len(), 1);
        assert_eq!(f.hierarchies[0].clusters.len(), 1);
    }

    #[test]
    fn grid_family_structure() {
        let g = grid(6).unwrap();
        let f = build_hpf(&g, &HpfParams::default()).unwrap();
        assert_eq!(f.hierarchies.len(), f.sigma);
        for h in &f.hierarchies {
            assert!(check_hierarchy(&g, h).is_empty(), "{:?}", check_hierarchy(&g, h));
            for c in &h.clusters {
                assert_eq!(c.representative, c.members[0]);
            }
        }
        assert!(strong_diameter_violations(&f).is_empty());
    }

    #[test]
    fn extra_top_levels_when_offset_exceeds_one() {
        let g = uniform_line(10).unwrap();
        let params = HpfParams { mu: 2.0, epsilon: 0.25, ..HpfParams::default() };
        let f = build_hpf(&g, &params).unwrap();
        let h = &f.hierarchies[0];
        assert_eq!(h.levels[h.i_max].len(), 1);
        assert_eq!(h.levels[h.i_max - 1].len(), 1);
        assert_eq!(f.offsets().count(), 2);
    }

    #[test]
    fn padding_trivial_levels() {
        let g = grid(5).unwrap();
        let f = build_hpf(&g, &HpfParams::default()).unwrap();
        let level0: Vec<_> = (0..25).map(|v| (v, 0)).collect();
        assert!(verify_padding(&g, &f, 24.0, &level0).failures.is_empty());
        let top: Vec<_> = (0..25).map(|v| (v, f.i_max())).collect();
        assert!(verify_padding(&g, &f, 24.0, &top).failures.is_empty());
        let all = all_vertex_levels(25, &f);
        assert!(verify_padding(&g, &f, 24.0, &all).failures.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let g = grid(3).unwrap();
        let f = build_hpf(&g, &HpfParams::default()).unwrap();
        let back: HpFamily = serde_json::from_str(&f.to_json()).unwrap();
        assert_eq!(back.hierarchies[0].clusters, f.hierarchies[0].clusters);
    }
}
