//! Undirected graph representation, the Barabasi-Albert generator, line-graph
//! construction, and the traversal primitives everything else is built on.
//!
//! Vertices and edges are dense integer ids. Edge ids are assigned in creation
//! order and stay dense under deletion: removing an edge moves the last edge id
//! into the freed slot (see [`EdgeRemap`]). All per-link quantities downstream
//! (delay signals, measurement matrix columns) are keyed by edge id.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Simple undirected graph: no self-loops, no parallel edges.
#[derive(Clone, Debug)]
pub struct Network {
    adj: Vec<Vec<(VertexId, EdgeId)>>,
    edges: Vec<(VertexId, VertexId)>,
    edge_index: HashMap<(VertexId, VertexId), EdgeId>,
}

/// Result of an edge deletion: the last edge id is moved into the freed slot
/// so that ids stay dense in `[0, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeRemap {
    /// `Some((old_id, new_id))` when an edge was renumbered, `None` when the
    /// deleted edge already held the largest id.
    pub moved: Option<(EdgeId, EdgeId)>,
}

fn norm(u: VertexId, v: VertexId) -> (VertexId, VertexId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
            edge_index: HashMap::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    /// Average vertex degree `2m / n`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.vertex_count() as f64
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Incident `(neighbor, edge id)` pairs of `v`.
    pub fn incident(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v]
    }

    pub fn edge_id(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.edge_index.get(&norm(u, v)).copied()
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edge_id(u, v).is_some()
    }

    /// Adds the edge `(u, v)` and returns its id.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId> {
        if u >= self.vertex_count() || v >= self.vertex_count() {
            return Err(Error::InvalidParameter(format!(
                "edge ({u}, {v}) references a vertex outside [0, {})",
                self.vertex_count()
            )));
        }
        if u == v {
            return Err(Error::InvalidParameter(format!("self-loop at vertex {u}")));
        }
        let key = norm(u, v);
        if self.edge_index.contains_key(&key) {
            return Err(Error::InvalidParameter(format!("duplicate edge ({u}, {v})")));
        }
        let id = self.edges.len();
        self.edges.push(key);
        self.edge_index.insert(key, id);
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        Ok(id)
    }

    /// Removes edge `e`, keeping ids dense by renumbering the last edge.
    pub fn remove_edge(&mut self, e: EdgeId) -> Result<EdgeRemap> {
        if e >= self.edges.len() {
            return Err(Error::InvalidParameter(format!("no edge with id {e}")));
        }
        let (u, v) = self.edges[e];
        self.edge_index.remove(&(u, v));
        self.adj[u].retain(|&(_, eid)| eid != e);
        self.adj[v].retain(|&(_, eid)| eid != e);

        let last = self.edges.len() - 1;
        self.edges.swap_remove(e);
        if e == last {
            return Ok(EdgeRemap { moved: None });
        }
        // Renumber the edge that moved from `last` into slot `e`.
        let (a, b) = self.edges[e];
        self.edge_index.insert((a, b), e);
        for w in [a, b] {
            for entry in &mut self.adj[w] {
                if entry.1 == last {
                    entry.1 = e;
                }
            }
        }
        Ok(EdgeRemap { moved: Some((last, e)) })
    }

    /// True iff the whole graph is connected (the empty graph with one vertex
    /// counts as connected).
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        reached == n
    }

    /// True iff the subgraph induced by `subset` is connected.
    pub fn is_connected_subset(&self, subset: &[VertexId]) -> Result<bool> {
        induced_connected(self.vertex_count(), subset, |v, f| {
            for &(w, _) in &self.adj[v] {
                f(w);
            }
        })
    }

    /// True iff removing edge `e` would disconnect the graph. Assumes the
    /// graph is currently connected.
    pub fn is_bridge(&self, e: EdgeId) -> bool {
        let (u, v) = self.edges[e];
        let mut seen = vec![false; self.vertex_count()];
        let mut queue = VecDeque::from([u]);
        seen[u] = true;
        while let Some(x) = queue.pop_front() {
            for &(w, eid) in &self.adj[x] {
                if eid == e || seen[w] {
                    continue;
                }
                if w == v {
                    return false;
                }
                seen[w] = true;
                queue.push_back(w);
            }
        }
        true
    }

    /// Sum of squared vertex degrees, used by the line-graph size identity
    /// `2 |E_L| = sum(d_i^2) - 2m`.
    pub fn degree_square_sum(&self) -> usize {
        self.adj.iter().map(|a| a.len() * a.len()).sum()
    }
}

/// Line graph of a [`Network`]: one node per edge of the source graph, with
/// nodes adjacent iff the corresponding edges share an endpoint. Node ids
/// coincide with source edge ids.
#[derive(Clone, Debug)]
pub struct LineGraph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl LineGraph {
    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Line-graph node carrying source edge `e`. The mapping is the identity;
    /// it is kept as a method so call sites say what they mean.
    pub fn node_for_edge(&self, e: EdgeId) -> usize {
        e
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn average_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.node_count() as f64
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count() <= 1 {
            return true;
        }
        self.bfs_distances(0).is_ok()
    }

    pub fn is_connected_subset(&self, subset: &[usize]) -> Result<bool> {
        induced_connected(self.node_count(), subset, |v, f| {
            for &w in &self.adj[v] {
                f(w);
            }
        })
    }

    fn bfs_distances(&self, root: usize) -> std::result::Result<Vec<usize>, usize> {
        let n = self.node_count();
        let mut dist = vec![usize::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if let Some(unreached) = dist.iter().position(|&d| d == usize::MAX) {
            return Err(unreached);
        }
        Ok(dist)
    }
}

/// BFS tree of a connected [`LineGraph`], with leaf/non-leaf flags.
#[derive(Clone, Debug)]
pub struct BfsTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    pub non_leaf: Vec<bool>,
}

impl BfsTree {
    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn non_leaf_nodes(&self) -> Vec<usize> {
        (0..self.non_leaf.len()).filter(|&v| self.non_leaf[v]).collect()
    }
}

/// Builds the line graph. `|E_L| = (sum(d_i^2) - 2m) / 2` since two distinct
/// edges of a simple graph share at most one endpoint.
pub fn line_graph(g: &Network) -> LineGraph {
    let m = g.edge_count();
    let mut adj = vec![Vec::new(); m];
    let mut edge_count = 0;
    for v in 0..g.vertex_count() {
        let inc = g.incident(v);
        for i in 0..inc.len() {
            for j in i + 1..inc.len() {
                let (a, b) = (inc[i].1, inc[j].1);
                adj[a].push(b);
                adj[b].push(a);
                edge_count += 1;
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    LineGraph { adj, edge_count }
}

/// BFS tree rooted at `root`; errors with an unreachable witness when the
/// graph is disconnected.
pub fn bfs_tree(g: &LineGraph, root: usize) -> Result<BfsTree> {
    let n = g.node_count();
    if root >= n {
        return Err(Error::InvalidParameter(format!("root {root} outside [0, {n})")));
    }
    let mut parent = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut non_leaf = vec![false; n];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if depth[w] == usize::MAX {
                depth[w] = depth[v] + 1;
                parent[w] = Some(v);
                non_leaf[v] = true;
                queue.push_back(w);
            }
        }
    }
    if let Some(unreached) = depth.iter().position(|&d| d == usize::MAX) {
        return Err(Error::Disconnected {
            what: "line graph".into(),
            witness: Some(unreached),
        });
    }
    Ok(BfsTree { root, parent, depth, non_leaf })
}

/// Vertex of minimum eccentricity (BFS from every node); ties break toward
/// the smallest id. Single-threaded so timed sections stay comparable.
pub fn eccentricity_center(g: &LineGraph) -> Result<usize> {
    Ok(eccentricity_center_within(g, None)?.expect("unbounded search cannot time out"))
}

/// [`eccentricity_center`] with a wall-clock cap for benchmark runs; returns
/// `Ok(None)` when the deadline passes before the all-pairs sweep finishes.
pub fn eccentricity_center_within(
    g: &LineGraph,
    deadline: Option<std::time::Instant>,
) -> Result<Option<usize>> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::InvalidParameter("empty line graph".into()));
    }
    let mut best = (usize::MAX, 0);
    for v in 0..n {
        if let Some(limit) = deadline {
            if std::time::Instant::now() >= limit {
                return Ok(None);
            }
        }
        let dist = g.bfs_distances(v).map_err(|witness| Error::Disconnected {
            what: "line graph".into(),
            witness: Some(witness),
        })?;
        let ecc = dist.into_iter().max().unwrap();
        if ecc < best.0 {
            best = (ecc, v);
        }
    }
    Ok(Some(best.1))
}

fn induced_connected<F>(n: usize, subset: &[usize], mut neighbors: F) -> Result<bool>
where
    F: FnMut(usize, &mut dyn FnMut(usize)),
{
    if subset.is_empty() {
        return Err(Error::InvalidParameter("empty vertex subset".into()));
    }
    let mut in_set = vec![false; n];
    for &v in subset {
        if v >= n {
            return Err(Error::InvalidParameter(format!("vertex {v} outside [0, {n})")));
        }
        in_set[v] = true;
    }
    let total = in_set.iter().filter(|&&b| b).count();
    let mut seen = vec![false; n];
    let start = subset[0];
    seen[start] = true;
    let mut reached = 1;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        neighbors(v, &mut |w| {
            if in_set[w] && !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push_back(w);
            }
        });
    }
    Ok(reached == total)
}

/// Barabasi-Albert generator parameters: `n` vertices, target average degree
/// `d` (even), optional seed-clique size override (default `d/2 + 1`).
#[derive(Clone, Copy, Debug)]
pub struct BaConfig {
    pub n: usize,
    pub d: usize,
    pub clique: Option<usize>,
    pub seed: u64,
}

/// Generates a connected scale-free network by preferential attachment:
/// start from a clique of `d/2 + 1` vertices, then attach each arriving
/// vertex to `d/2` distinct existing vertices sampled proportionally to
/// their current degree.
pub fn generate_ba(n: usize, d: usize, seed: u64) -> Result<Network> {
    generate_ba_with(BaConfig { n, d, clique: None, seed })
}

pub fn generate_ba_with(cfg: BaConfig) -> Result<Network> {
    let BaConfig { n, d, clique, seed } = cfg;
    if d < 2 || d % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "target average degree must be even and >= 2, got {d}"
        )));
    }
    let attach = d / 2;
    let m0 = clique.unwrap_or(attach + 1);
    if m0 < 2 || m0 <= attach {
        return Err(Error::InvalidParameter(format!(
            "seed clique of {m0} vertices cannot host {attach} distinct attachments"
        )));
    }
    if n <= m0 {
        return Err(Error::InvalidParameter(format!(
            "need n > {m0} (seed clique size) to grow a degree-{d} network, got n = {n}"
        )));
    }

    let mut g = Network::new(n);
    // Endpoint urn: each vertex appears once per unit of degree, so uniform
    // draws from the urn are degree-proportional.
    let mut urn: Vec<VertexId> = Vec::with_capacity(m0 * (m0 - 1) + 2 * (n - m0) * attach);
    for u in 0..m0 {
        for v in u + 1..m0 {
            g.add_edge(u, v)?;
            urn.push(u);
            urn.push(v);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = Vec::with_capacity(attach);
    for v in m0..n {
        targets.clear();
        while targets.len() < attach {
            let t = urn[rng.gen_range(0..urn.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            g.add_edge(v, t)?;
            urn.push(v);
            urn.push(t);
        }
    }
    Ok(g)
}

/// Writes the edge-list format: header `n m`, then one `u v` line per edge.
pub fn write_edge_list(g: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.vertex_count(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// Parses the edge-list format, rejecting self-loops and duplicates with the
/// offending line number.
pub fn read_edge_list(text: &str) -> Result<Network> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, message: "missing `n m` header".into() })?;
    let parse_usize = |tok: Option<&str>, line: usize| -> Result<usize> {
        tok.ok_or_else(|| Error::Parse { line, message: "expected two integers".into() })?
            .parse::<usize>()
            .map_err(|e| Error::Parse { line, message: e.to_string() })
    };
    let mut parts = header.split_whitespace();
    let n = parse_usize(parts.next(), 1)?;
    let m = parse_usize(parts.next(), 1)?;
    let mut g = Network::new(n);
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut parts = raw.split_whitespace();
        let u = parse_usize(parts.next(), line)?;
        let v = parse_usize(parts.next(), line)?;
        g.add_edge(u, v).map_err(|e| Error::Parse { line, message: e.to_string() })?;
    }
    if g.edge_count() != m {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares {m} edges, file contains {}", g.edge_count()),
        });
    }
    Ok(g)
}

pub fn read_edge_list_file(path: &Path) -> Result<Network> {
    read_edge_list(&std::fs::read_to_string(path)?)
}

pub fn write_edge_list_file(g: &Network, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, write_edge_list(g))?)
}
