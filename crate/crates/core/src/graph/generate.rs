//! Synthetic instances. Each generator also returns 2D coordinates so the
//! demo can draw the graph; the coordinates play no role in the weights
//! except for `random_geometric`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphError, WeightedGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Path,
    Grid,
    RandomGeometric,
    StarExponential,
    UniformLine,
}

impl GraphKind {
    pub const ALL: [GraphKind; 5] = [
        GraphKind::Path,
        GraphKind::Grid,
        GraphKind::RandomGeometric,
        GraphKind::StarExponential,
        GraphKind::UniformLine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Path => "path",
            GraphKind::Grid => "grid",
            GraphKind::RandomGeometric => "random_geometric",
            GraphKind::StarExponential => "star_exponential",
            GraphKind::UniformLine => "uniform_line",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GraphKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GraphError::Generator(format!("unknown kind `{s}`")))
    }
}

pub type Layout = Vec<[f64; 2]>;

/// `size` is the vertex count, except for grids where it is the side length.
pub fn generate(kind: GraphKind, size: usize, seed: u64) -> Result<WeightedGraph, GraphError> {
    generate_with_layout(kind, size, seed).map(|(g, _)| g)
}

pub fn generate_with_layout(kind: GraphKind, size: usize, seed: u64) -> Result<(WeightedGraph, Layout), GraphError> {
    if size == 0 {
        return Err(GraphError::Generator("size must be positive".into()));
    }
    match kind {
        GraphKind::Path => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Weights in [1, 4) on a 1/8 grid so they print exactly.
            let w: Vec<f64> = (1..size).map(|_| 1.0 + rng.random_range(0..24) as f64 / 8.0).collect();
            let mut x = 0.0;
            let mut layout = vec![[0.0, 0.0]];
            for &wi in &w {
                x += wi;
                layout.push([x, 0.0]);
            }
            let g = WeightedGraph::new(size, w.iter().enumerate().map(|(i, &wi)| (i, i + 1, wi)))?;
            Ok((g, layout))
        }
        GraphKind::UniformLine => Ok((uniform_line(size)?, (0..size).map(|i| [i as f64, 0.0]).collect())),
        GraphKind::Grid => {
            let layout = (0..size * size).map(|i| [(i % size) as f64, (i / size) as f64]).collect();
            Ok((grid(size)?, layout))
        }
        GraphKind::StarExponential => {
            let g = star_exponential(size)?;
            let mut layout = vec![[0.0, 0.0]];
            for k in 1..size {
                let a = std::f64::consts::TAU * k as f64 / (size - 1) as f64;
                let r = (k as f64).sqrt();
                layout.push([r * a.cos(), r * a.sin()]);
            }
            Ok((g, layout))
        }
        GraphKind::RandomGeometric => {
            let (g, pts) = random_geometric(size, 2, seed)?;
            Ok((g, pts.into_iter().map(|p| [p[0], p[1]]).collect()))
        }
    }
}

pub fn uniform_line(n: usize) -> Result<WeightedGraph, GraphError> {
    WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
}

/// k×k unit grid; vertex (r, c) has id r·k + c.
pub fn grid(k: usize) -> Result<WeightedGraph, GraphError> {
    let mut edges = Vec::new();
    for r in 0..k {
        for c in 0..k {
            let v = r * k + c;
            if c + 1 < k {
                edges.push((v, v + 1, 1.0));
            }
            if r + 1 < k {
                edges.push((v, v + k, 1.0));
            }
        }
    }
    WeightedGraph::new(k * k, edges)
}

/// Center 0; leaf k has weight 2^(k-1).
pub fn star_exponential(n: usize) -> Result<WeightedGraph, GraphError> {
    if n > 60 {
        return Err(GraphError::Generator("star_exponential supports n ≤ 60".into()));
    }
    WeightedGraph::new(n, (1..n).map(|k| (0, k, (1u64 << (k - 1)) as f64)))
}

/// Points uniform in [0,1]^dim joined when closer than a radius a bit
/// above the connectivity threshold; redrawn until connected.
pub fn random_geometric(n: usize, dim: usize, seed: u64) -> Result<(WeightedGraph, Vec<Vec<f64>>), GraphError> {
    if !(1..=3).contains(&dim) {
        return Err(GraphError::Generator("dim must be 1, 2 or 3".into()));
    }
    if n == 1 {
        return Ok((WeightedGraph::new(1, [])?, vec![vec![0.5; dim]]));
    }
    let ball = [2.0, std::f64::consts::PI, 4.0 * std::f64::consts::PI / 3.0][dim - 1];
    let radius = 1.6 * ((n as f64).ln().max(1.0) / (ball * n as f64)).powf(1.0 / dim as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let d = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if d <= radius && d > 0.0 {
                    edges.push((i, j, d));
                }
            }
        }
        match WeightedGraph::new(n, edges) {
            Ok(g) => return Ok((g, pts)),
            Err(GraphError::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GraphError::Generator("no connected sample after 1000 draws".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let g = grid(3).unwrap();
        assert_eq!((g.n(), g.m()), (9, 12));
        assert!(g.edges().iter().all(|e| e.w == 1.0));
    }

    #[test]
    fn star_weights() {
        let g = star_exponential(4).unwrap();
        let w: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
        assert_eq!(w, vec![1.0, 2.0, 4.0]);
        assert!(g.edges().iter().all(|e| e.u == 0));
    }

    #[test]
    fn uniform_line_is_unit_path() {
        let g = uniform_line(8).unwrap();
        assert_eq!((g.n(), g.m(), g.total_weight()), (8, 7, 7.0));
    }

    #[test]
    fn seeded_generators_repeat() {
        for kind in GraphKind::ALL {
            let a = generate(kind, 20, 9).unwrap();
            let b = generate(kind, 20, 9).unwrap();
            assert_eq!(super::super::io::write_graph(&a), super::super::io::write_graph(&b), "{kind}");
        }
    }

    #[test]
    fn random_geometric_connected_and_euclidean() {
        let (g, pts) = random_geometric(64, 2, 3).unwrap();
        for e in g.edges() {
            let d = ((pts[e.u][0] - pts[e.v][0]).powi(2) + (pts[e.u][1] - pts[e.v][1]).powi(2)).sqrt();
            assert!((d - e.w).abs() < 1e-12);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in GraphKind::ALL {
            assert_eq!(kind.name().parse::<GraphKind>().unwrap(), kind);
        }
        assert!("tree".parse::<GraphKind>().is_err());
        assert!(generate(GraphKind::Grid, 0, 1).is_err());
    }
}
