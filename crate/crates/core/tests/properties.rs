use proptest::prelude::*;
use treecover::cover::{cover_stretch, light_tree_cover, pair_gate_excess, span_tree_cover, verify_spanning, CoverConfig, PairSource};
use treecover::graph::io::{load_graph, write_graph};
use treecover::graph::{apsp, dijkstra};
use treecover::oracle::TreeOracle;
use treecover::routing::selection::{lca_condition, select_tree};
use treecover::routing::{build_routing_scheme, simulate_route};
use treecover::WeightedGraph;

/// Connected graph: a random tree plus extra edges, weights on a 1/8 grid.
fn connected_graph(max_n: usize) -> impl Strategy<Value = WeightedGraph> {
    (2..=max_n).prop_flat_map(|n| {
        let parents = (1..n).map(|v| 0..v).collect::<Vec<_>>();
        let extra = prop::collection::vec((0..n, 0..n, 8u32..64), 0..n);
        (Just(n), parents, prop::collection::vec(8u32..64, n - 1), extra).prop_map(|(n, parents, tw, extra)| {
            let mut edges: Vec<(usize, usize, f64)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1, tw[i] as f64 / 8.0)).collect();
            for (u, v, w) in extra {
                if u != v && !edges.iter().any(|&(a, b, _)| (a, b) == (u, v) || (a, b) == (v, u)) {
                    edges.push((u, v, w as f64 / 8.0));
                }
            }
            WeightedGraph::new(n, edges).unwrap()
        })
    })
}

fn tree_edges(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
    (2..=max_n).prop_flat_map(|n| {
        let parents = (1..n).map(|v| 0..v).collect::<Vec<_>>();
        (Just(n), parents, prop::collection::vec(1u32..1000, n - 1))
            .prop_map(|(n, p, w)| (n, p.iter().enumerate().map(|(i, &q)| (q, i + 1, w[i] as f64 / 7.0)).collect()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_format_round_trips(g in connected_graph(20)) {
        let again = load_graph(&write_graph(&g)).unwrap();
        prop_assert_eq!(write_graph(&again), write_graph(&g));
    }

    #[test]
    fn tree_oracle_matches_search((n, edges) in tree_edges(40), root in 0usize..40) {
        let root = root % n;
        let o = TreeOracle::new(n, &edges, root).unwrap();
        let g = WeightedGraph::new(n, edges.iter().copied()).unwrap();
        for u in 0..n {
            let t = dijkstra(&g, u, None).unwrap();
            for v in 0..n {
                prop_assert!((o.distance(u, v) - t.dist[v]).abs() <= 1e-9 * t.dist[v].max(1.0));
                prop_assert_eq!(o.path_distance(u, v), t.dist[v]);
                let p = o.path(u, v);
                prop_assert_eq!(p.first(), Some(&u));
                prop_assert_eq!(p.last(), Some(&v));
                prop_assert!(p.windows(2).all(|e| g.edge_id(e[0], e[1]).is_some()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covers_span_and_respect_the_gate(g in connected_graph(14), seed in 0u64..1000) {
        let config = CoverConfig { pairs: PairSource::All, seed, ..CoverConfig::default() };
        let b = span_tree_cover(&g, &config).unwrap();
        prop_assert!(verify_spanning(&g, &b.cover).is_empty());
        let st = cover_stretch(&b.scaled, &b.cover, &b.dist, &b.demanded).unwrap();
        prop_assert!(st.pairs.iter().all(|p| p.ratio >= 1.0 - 1e-9));
        prop_assert!(pair_gate_excess(&b, &st).iter().all(|e| e.2 <= 1e-9));
    }

    #[test]
    fn routing_terminates_and_selection_agrees(g in connected_graph(14), seed in 0u64..1000) {
        let eps = 0.25;
        let lc = light_tree_cover(&g, &CoverConfig { pairs: PairSource::All, seed, ..CoverConfig::default() }).unwrap();
        let sch = build_routing_scheme(&g, &lc, seed, None).unwrap();
        let n = g.n();
        for (k, t) in lc.build.cover.trees.iter().enumerate() {
            let o = TreeOracle::for_tree(&g, t).unwrap();
            for s in 0..n {
                for d in 0..n {
                    let r = simulate_route(&g, &sch.ports, &sch.trees[k], s, d);
                    prop_assert!(r.terminated);
                    prop_assert_eq!(r.vertices.last(), Some(&d));
                    prop_assert!(r.weight <= (1.0 + eps) * o.distance(s, d) + 1e-9);
                }
            }
        }
        for u in 0..n {
            for v in u + 1..n {
                let brute = sch.selection.subs.iter().position(|ct| lca_condition(ct, u, v));
                prop_assert_eq!(select_tree(&sch.selection.labels[u], &sch.selection.labels[v]).ok(), brute);
            }
        }
    }

    #[test]
    fn apsp_is_symmetric_with_triangle_inequality(g in connected_graph(16)) {
        let d = apsp(&g).unwrap();
        let n = g.n();
        for a in 0..n {
            prop_assert_eq!(d.get(a, a), 0.0);
            for b in 0..n {
                prop_assert_eq!(d.get(a, b), d.get(b, a));
                for c in 0..n {
                    prop_assert!(d.get(a, c) <= d.get(a, b) + d.get(b, c) + 1e-9);
                }
            }
        }
    }
}
