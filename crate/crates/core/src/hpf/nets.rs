//! Net hierarchy and the family of subnet hierarchies derived from it.

use serde::{Deserialize, Serialize};

use super::HpfError;
use crate::graph::{greedy_net, search, Coverage, Search, WeightedGraph, TOL};

/// N_0 = V ⊇ N_1 ⊇ … ⊇ N_L with |N_L| = 1; N_i is a Δ_i-net of N_{i-1}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetHierarchy {
    pub levels: Vec<Vec<usize>>,
    /// Δ_i = μ^i/(6η); entry 0 is unused and set to 0.
    pub delta: Vec<f64>,
}

impl NetHierarchy {
    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }
}

pub fn build_net_hierarchy(g: &WeightedGraph, mu: f64, eta: f64) -> NetHierarchy {
    let mut levels = vec![(0..g.n()).collect::<Vec<_>>()];
    let mut delta = vec![0.0];
    let mut i = 1;
    while levels.last().unwrap().len() > 1 {
        let t = mu.powi(i) / (6.0 * eta);
        let next = greedy_net(g, levels.last().unwrap(), &[], t);
        levels.push(next);
        delta.push(t);
        i += 1;
    }
    NetHierarchy { levels, delta }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubnetFamily {
    /// Number of subnet hierarchies (packing count from the pre-pass).
    pub sigma: usize,
    /// How many of the σ seed families received at least one point.
    pub used: usize,
    /// Top subnet level: every N^j_top is a single vertex.
    pub top: usize,
    /// Seeding output Ñ^j_i for i ≤ L.
    pub seeds: Vec<Vec<Vec<usize>>>,
    /// N^j_i for i in 0..=top.
    pub subnets: Vec<Vec<Vec<usize>>>,
}

fn packing_radius(mu: f64, i: usize) -> f64 {
    mu.powi(i as i32) / 3.0
}

/// max over p ∈ N_i of |B(p, μ^i/3) ∩ N_i|, over all levels.
pub fn packing_count(g: &WeightedGraph, nets: &NetHierarchy, mu: f64) -> usize {
    let mut sigma = 1;
    let mut member = vec![false; g.n()];
    for (i, level) in nets.levels.iter().enumerate() {
        member.iter_mut().for_each(|m| *m = false);
        for &p in level {
            member[p] = true;
        }
        let r = packing_radius(mu, i);
        for &p in level {
            let (t, _) = search(g, &[p], &Search { bound: r, ..Search::default() });
            let count = level.iter().filter(|&&q| t.dist[q] <= r + TOL).count();
            sigma = sigma.max(count);
        }
    }
    sigma
}

pub fn build_subnet_family(g: &WeightedGraph, nets: &NetHierarchy, mu: f64) -> Result<SubnetFamily, HpfError> {
    let sigma = packing_count(g, nets, mu);
    let l = nets.top();
    // Seeding, top-down. Only the first family starts from the root; the
    // families must stay pairwise disjoint for the packing argument.
    let mut seeds = vec![vec![Vec::new(); l + 1]; sigma];
    seeds[0][l] = nets.levels[l].clone();
    for i in (0..l).rev() {
        let mut carried = vec![false; g.n()];
        for fam in seeds.iter_mut() {
            fam[i] = fam[i + 1].clone();
            for &p in &fam[i] {
                carried[p] = true;
            }
        }
        let leftover: Vec<usize> = nets.levels[i].iter().copied().filter(|&p| !carried[p]).collect();
        let mut placed = vec![false; leftover.len()];
        let r = packing_radius(mu, i);
        for fam in seeds.iter_mut() {
            let mut cov = Coverage::new(g, r);
            for &p in &fam[i] {
                cov.add(p);
            }
            for (k, &p) in leftover.iter().enumerate() {
                if !placed[k] && cov.is_far(p) {
                    cov.add(p);
                    fam[i].push(p);
                    placed[k] = true;
                }
            }
            fam[i].sort_unstable();
        }
        let unplaced = placed.iter().filter(|&&b| !b).count();
        if unplaced > 0 {
            return Err(HpfError::SigmaInsufficient { level: i, unplaced });
        }
    }
    let used = seeds.iter().filter(|fam| fam.iter().any(|s| !s.is_empty())).count();

    // Growth, bottom-up; continue past L until every family is a singleton.
    let all: Vec<usize> = (0..g.n()).collect();
    let mut subnets: Vec<Vec<Vec<usize>>> = vec![vec![all]; sigma];
    let mut i = 1;
    while g.n() > 1 && (i <= l || subnets.iter().any(|s| s[i - 1].len() > 1)) {
        for (j, fam) in subnets.iter_mut().enumerate() {
            let base = &seeds[j][i.min(l)];
            let net = greedy_net(g, &fam[i - 1], base, packing_radius(mu, i));
            fam.push(net);
        }
        i += 1;
    }
    let top = subnets[0].len() - 1;
    Ok(SubnetFamily { sigma, used, top, seeds, subnets })
}

/// Checks the subnet-family invariants and returns one message per
/// violation. With `theory`, also checks the (5/12)μ^i cover radius.
pub fn check_subnet_family(g: &WeightedGraph, nets: &NetHierarchy, fam: &SubnetFamily, mu: f64, theory: bool) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, level) in nets.levels.iter().enumerate() {
        let mut covered = vec![false; g.n()];
        for s in &fam.subnets {
            if let Some(net) = s.get(i) {
                for &p in net {
                    covered[p] = true;
                }
            }
        }
        if let Some(p) = level.iter().find(|&&p| !covered[p]) {
            bad.push(format!("level {i}: net point {p} in no subnet"));
        }
    }
    for (j, s) in fam.subnets.iter().enumerate() {
        if s[0].len() != g.n() {
            bad.push(format!("subnet {j}: level 0 is not V"));
        }
        let mut radius = 0.0;
        for i in 1..s.len() {
            let r = packing_radius(mu, i);
            radius += r;
            let prev = &s[i - 1];
            let cur = &s[i];
            if cur.iter().any(|p| prev.binary_search(p).is_err()) {
                bad.push(format!("subnet {j} level {i}: not nested"));
            }
            let (t, _) = search(g, cur, &Search::default());
            for &p in cur {
                let (tp, _) = search(g, &[p], &Search { bound: r, ..Search::default() });
                if cur.iter().any(|&q| q != p && tp.dist[q] <= r + TOL) {
                    bad.push(format!("subnet {j} level {i}: {p} breaks packing"));
                }
            }
            if prev.iter().any(|&p| t.dist[p] > r + TOL) {
                bad.push(format!("subnet {j} level {i}: previous level not covered"));
            }
            let far = t.dist.iter().copied().fold(0.0, f64::max);
            if far > radius + TOL {
                bad.push(format!("subnet {j} level {i}: cover radius {far} > {radius}"));
            }
            if theory && far > 5.0 / 12.0 * mu.powi(i as i32) + TOL {
                bad.push(format!("subnet {j} level {i}: cover radius {far} exceeds 5/12 bound"));
            }
        }
    }
    bad
}
