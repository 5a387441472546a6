//! Edge-list text format: `n m` header, then `u v w` per line. Lines
//! starting with `#` and blank lines are skipped.

use std::fmt::Write as _;

use super::{GraphError, WeightedGraph};

pub fn load_graph(text: &str) -> Result<WeightedGraph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(GraphError::Malformed { line: 0, reason: "missing header".into() })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(GraphError::Malformed { line: hline, reason: "header must be `n m`".into() });
    }
    let n = parse_usize(head[0], hline)?;
    let m = parse_usize(head[1], hline)?;
    let mut edges = Vec::with_capacity(m);
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(GraphError::Malformed { line: ln, reason: "edge line must be `u v w`".into() });
        }
        let u = parse_usize(f[0], ln)?;
        let v = parse_usize(f[1], ln)?;
        let w: f64 = f[2]
            .parse()
            .map_err(|_| GraphError::Malformed { line: ln, reason: format!("bad weight `{}`", f[2]) })?;
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(GraphError::Malformed {
            line: hline,
            reason: format!("header promises {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::new(n, edges)
}

fn parse_usize(s: &str, line: usize) -> Result<usize, GraphError> {
    s.parse().map_err(|_| GraphError::Malformed { line, reason: format!("bad integer `{s}`") })
}

/// Canonical form: edges sorted by (u, v) with u < v.
pub fn write_graph(g: &WeightedGraph) -> String {
    let mut edges = g.edges().to_vec();
    edges.sort_by_key(|e| (e.u, e.v));
    let mut out = format!("{} {}\n", g.n(), g.m());
    for e in edges {
        let _ = writeln!(out, "{} {} {}", e.u, e.v, e.w);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_path() {
        let g = load_graph("3 2\n0 1 1.0\n1 2 2.0").unwrap();
        assert_eq!((g.n(), g.total_weight()), (3, 3.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(load_graph("2 1\n0 1 -1"), Err(GraphError::NonPositiveWeight { .. })));
        assert!(matches!(load_graph("4 2\n0 1 1\n2 3 1"), Err(GraphError::Disconnected { .. })));
        assert!(matches!(load_graph("2 1\n0 1"), Err(GraphError::Malformed { line: 2, .. })));
        assert!(matches!(load_graph("2 2\n0 1 1\n1 0 1"), Err(GraphError::DuplicateEdge { .. })));
        assert!(matches!(load_graph("3 1\n0 1 x"), Err(GraphError::Malformed { .. })));
        assert!(matches!(load_graph("3 3\n0 1 1\n1 2 1"), Err(GraphError::Malformed { .. })));
    }

    #[test]
    fn comments_and_canonical_order() {
        let g = load_graph("# a triangle\n3 3\n2 1 1\n\n# x\n0 2 0.5\n1 0 2").unwrap();
        assert_eq!(write_graph(&g), "3 3\n0 1 2\n0 2 0.5\n1 2 1\n");
        let back = load_graph(&write_graph(&g)).unwrap();
        assert_eq!(write_graph(&back), write_graph(&g));
    }
}
