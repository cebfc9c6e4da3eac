//! Shared test oracles: exhaustive matching search and small random graphs.

use linktomo::graph::Network;
use rand::Rng;

/// Exhaustive maximum-matching cardinality by branching on every edge.
/// Only usable for tiny graphs; the independent reference for the blossom
/// implementation.
pub fn brute_force_max_matching(g: &Network) -> usize {
    assert!(g.vertex_count() <= 20, "oracle is exponential");
    fn rec(edges: &[(usize, usize)], used: u32, idx: usize) -> usize {
        if idx == edges.len() {
            return 0;
        }
        let mut best = rec(edges, used, idx + 1);
        let (u, v) = edges[idx];
        let mask = (1 << u) | (1 << v);
        if used & mask == 0 {
            best = best.max(1 + rec(edges, used | mask, idx + 1));
        }
        best
    }
    rec(g.edges(), 0, 0)
}

/// Random connected graph with 2..=max_n vertices and edge probability
/// around 0.4; resamples until connected.
pub fn random_connected_graph(max_n: usize, rng: &mut impl Rng) -> Network {
    loop {
        let n = rng.gen_range(2..=max_n);
        let p = rng.gen_range(0.25..0.7);
        let mut g = Network::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    g.add_edge(u, v).unwrap();
                }
            }
        }
        if g.edge_count() > 0 && g.is_connected() {
            return g;
        }
    }
}
