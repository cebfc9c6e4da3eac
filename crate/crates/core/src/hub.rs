//! Hub selection: grow a connected edge set around a maximum matching, or
//! fall back to the BFS non-leaf baseline, and certify either as a connected
//! dominating set of the line graph.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{bfs_tree, EdgeId, LineGraph, Network};
use crate::matching::Matching;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HubOrigin {
    MatchingBased,
    BfsBaseline,
}

impl HubOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            HubOrigin::MatchingBased => "matching_based",
            HubOrigin::BfsBaseline => "bfs_baseline",
        }
    }
}

/// A connected edge set of the network; its image in the line graph is the
/// hub (a connected dominating set).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HubSet {
    hub_edges: BTreeSet<EdgeId>,
    connector_edges: BTreeSet<EdgeId>,
    origin: HubOrigin,
}

impl HubSet {
    pub fn origin(&self) -> HubOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.hub_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hub_edges.is_empty()
    }

    pub fn contains(&self, e: EdgeId) -> bool {
        self.hub_edges.contains(&e)
    }

    /// Hub edge ids in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.hub_edges.iter().copied()
    }

    /// Edges added beyond the matching to make the set connected.
    pub fn connectors(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.connector_edges.iter().copied()
    }

    pub fn connector_count(&self) -> usize {
        self.connector_edges.len()
    }

    /// Line-graph nodes of the hub, ascending.
    pub fn nodes(&self, lg: &LineGraph) -> Vec<usize> {
        self.hub_edges.iter().map(|&e| lg.node_for_edge(e)).collect()
    }

    /// Renames edge `old` to `new` (after a deletion renumbered ids).
    pub fn remap_edge(&mut self, old: EdgeId, new: EdgeId) {
        if self.hub_edges.remove(&old) {
            self.hub_edges.insert(new);
        }
        if self.connector_edges.remove(&old) {
            self.connector_edges.insert(new);
        }
    }

    /// Text block: origin, sorted hub edge ids, sorted connector edge ids.
    pub fn to_text(&self) -> String {
        let join = |set: &BTreeSet<EdgeId>| {
            set.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
        };
        format!(
            "origin {}\nhub_edges {}\nconnector_edges {}\n",
            self.origin.as_str(),
            join(&self.hub_edges),
            join(&self.connector_edges),
        )
    }

    pub fn from_text(text: &str) -> Result<HubSet> {
        let mut origin = None;
        let mut hub_edges = BTreeSet::new();
        let mut connector_edges = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let mut parts = raw.split_whitespace();
            let Some(key) = parts.next() else { continue };
            match key {
                "origin" => {
                    origin = match parts.next() {
                        Some("matching_based") => Some(HubOrigin::MatchingBased),
                        Some("bfs_baseline") => Some(HubOrigin::BfsBaseline),
                        other => {
                            return Err(Error::Parse {
                                line,
                                message: format!("unknown origin {other:?}"),
                            })
                        }
                    };
                }
                "hub_edges" | "connector_edges" => {
                    let set = if key == "hub_edges" { &mut hub_edges } else { &mut connector_edges };
                    for tok in parts {
                        let e = tok
                            .parse::<EdgeId>()
                            .map_err(|e| Error::Parse { line, message: e.to_string() })?;
                        set.insert(e);
                    }
                }
                other => {
                    return Err(Error::Parse { line, message: format!("unknown key {other}") })
                }
            }
        }
        let origin = origin
            .ok_or_else(|| Error::Parse { line: 1, message: "missing origin line".into() })?;
        Ok(HubSet { hub_edges, connector_edges, origin })
    }
}

/// Why a candidate hub failed certification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CdsVerdict {
    Ok,
    /// `witness` is a line-graph node outside any connected hub component
    /// reachable from the first hub node.
    NotConnected { witness: usize },
    /// `witness` is a line-graph node neither in the hub nor adjacent to it.
    NotDominated { witness: usize },
    Empty,
}

impl CdsVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, CdsVerdict::Ok)
    }
}

/// Checks that the hub nodes induce a connected subgraph of `lg` and
/// dominate every other node.
pub fn cds_certify(hub: &HubSet, lg: &LineGraph) -> CdsVerdict {
    let nodes = hub.nodes(lg);
    if nodes.is_empty() {
        return CdsVerdict::Empty;
    }
    let mut in_hub = vec![false; lg.node_count()];
    for &v in &nodes {
        in_hub[v] = true;
    }
    let mut seen = vec![false; lg.node_count()];
    let mut stack = vec![nodes[0]];
    seen[nodes[0]] = true;
    while let Some(v) = stack.pop() {
        for &w in lg.neighbors(v) {
            if in_hub[w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if let Some(&witness) = nodes.iter().find(|&&v| !seen[v]) {
        return CdsVerdict::NotConnected { witness };
    }
    for v in 0..lg.node_count() {
        if in_hub[v] {
            continue;
        }
        if !lg.neighbors(v).iter().any(|&w| in_hub[w]) {
            return CdsVerdict::NotDominated { witness: v };
        }
    }
    CdsVerdict::Ok
}

/// True iff no two matched edges are adjacent in the line graph. Holds for
/// every valid matching, since vertex-disjoint edges share no endpoint.
pub fn independent_set_check(m: &Matching, g: &Network, lg: &LineGraph) -> bool {
    let ids = m.edge_ids(g);
    let mut in_set = vec![false; lg.node_count()];
    for &e in &ids {
        in_set[lg.node_for_edge(e)] = true;
    }
    for &e in &ids {
        let node = lg.node_for_edge(e);
        if lg.neighbors(node).iter().any(|&w| in_set[w]) {
            return false;
        }
    }
    true
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] != v {
            self.parent[v] = self.find(self.parent[v]);
        }
        self.parent[v]
    }

    /// Returns true when the union actually merged two sets.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Grows a connected edge set from a maximal matching. Components of the
/// current set are merged by a single edge between two matched vertices when
/// one exists, otherwise by a two-edge connector through an unmatched vertex
/// (whose neighbors are all matched, by maximality). Candidate connectors
/// are chosen lowest-edge-id-first, so hubs are deterministic.
pub fn connect_matching(g: &Network, m: &Matching) -> Result<HubSet> {
    if g.edge_count() == 0 {
        return Err(Error::InvalidParameter("graph has no edges".into()));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected { what: "network".into(), witness: None });
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if !m.is_matched(u) && !m.is_matched(v) {
            return Err(Error::DominationViolation { edge: e });
        }
    }

    let mut hub_edges: BTreeSet<EdgeId> = m.edge_ids(g).into_iter().collect();
    let mut connector_edges = BTreeSet::new();
    let mut dsu = Dsu::new(g.vertex_count());
    let mut components = 0;
    for &(u, v) in &m.pairs() {
        dsu.union(u, v);
        components += 1;
    }

    while components > 1 {
        // Rule 1: one edge whose endpoints are matched in different components.
        let mut single: Option<EdgeId> = None;
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if hub_edges.contains(&e) {
                continue;
            }
            if m.is_matched(u) && m.is_matched(v) && dsu.find(u) != dsu.find(v) {
                single = Some(e);
                break; // edge ids scanned ascending; first hit is minimal
            }
        }
        if let Some(e) = single {
            let (u, v) = g.endpoints(e);
            hub_edges.insert(e);
            connector_edges.insert(e);
            dsu.union(u, v);
            components -= 1;
            continue;
        }
        // Rule 2: a two-edge connector through an unmatched vertex.
        let mut pair: Option<(EdgeId, EdgeId, usize)> = None;
        for w in 0..g.vertex_count() {
            if m.is_matched(w) {
                continue;
            }
            let inc = g.incident(w);
            for i in 0..inc.len() {
                for j in 0..inc.len() {
                    if i == j {
                        continue;
                    }
                    let (u, eu) = inc[i];
                    let (v, ev) = inc[j];
                    if eu >= ev || dsu.find(u) == dsu.find(v) {
                        continue;
                    }
                    if pair.is_none_or(|(a, b, _)| (eu, ev) < (a, b)) {
                        pair = Some((eu, ev, w));
                    }
                }
            }
        }
        let Some((eu, ev, _w)) = pair else {
            // Unreachable on a connected graph with a maximal matching.
            return Err(Error::Disconnected {
                what: "hub component merge".into(),
                witness: None,
            });
        };
        for e in [eu, ev] {
            hub_edges.insert(e);
            connector_edges.insert(e);
            let (a, b) = g.endpoints(e);
            dsu.union(a, b);
        }
        components = recount_components(&mut dsu, m);
    }

    Ok(HubSet { hub_edges, connector_edges, origin: HubOrigin::MatchingBased })
}

fn recount_components(dsu: &mut Dsu, m: &Matching) -> usize {
    let mut roots: Vec<usize> = m.pairs().iter().map(|&(u, _)| dsu.find(u)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Baseline hub: non-leaf vertices of a BFS tree rooted at a line-graph
/// center. A single-node line graph yields the root itself.
pub fn bfs_baseline_hub(lg: &LineGraph) -> Result<HubSet> {
    Ok(bfs_baseline_hub_within(lg, None)?.expect("unbounded search cannot time out"))
}

/// [`bfs_baseline_hub`] with a wall-clock cap on the dominant all-pairs
/// radius computation; `Ok(None)` means the cap was hit.
pub fn bfs_baseline_hub_within(
    lg: &LineGraph,
    deadline: Option<std::time::Instant>,
) -> Result<Option<HubSet>> {
    let Some(root) = crate::graph::eccentricity_center_within(lg, deadline)? else {
        return Ok(None);
    };
    let tree = bfs_tree(lg, root)?;
    let mut hub_edges: BTreeSet<EdgeId> = tree.non_leaf_nodes().into_iter().collect();
    if hub_edges.is_empty() {
        hub_edges.insert(root);
    }
    Ok(Some(HubSet { hub_edges, connector_edges: BTreeSet::new(), origin: HubOrigin::BfsBaseline }))
}
