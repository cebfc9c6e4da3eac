//! Maximum matching in general graphs via blossom contraction, plus the
//! single augmenting-path search used by the incremental update strategy.
//!
//! The search keeps an alternating tree per exposed root, contracting odd
//! cycles down to their base vertex. Augmenting paths are returned as
//! explicit vertex sequences so [`augment`] can validate and apply them by
//! symmetric difference.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Network, VertexId};

const UNSET: usize = usize::MAX;

/// A matching stored as a symmetric per-vertex partner table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    mate: Vec<Option<VertexId>>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Matching { mate: vec![None; n] }
    }

    /// Test-only escape hatch for building deliberately broken tables.
    #[cfg(test)]
    pub(crate) fn from_raw(mate: Vec<Option<VertexId>>) -> Self {
        Matching { mate }
    }

    pub fn vertex_count(&self) -> usize {
        self.mate.len()
    }

    pub fn mate(&self, v: VertexId) -> Option<VertexId> {
        self.mate[v]
    }

    pub fn is_matched(&self, v: VertexId) -> bool {
        self.mate[v].is_some()
    }

    pub fn cardinality(&self) -> usize {
        self.mate.iter().flatten().count() / 2
    }

    /// Exposed (unmatched) vertices in ascending order.
    pub fn exposed(&self) -> Vec<VertexId> {
        (0..self.mate.len()).filter(|&v| self.mate[v].is_none()).collect()
    }

    /// Matched pairs `(u, v)` with `u < v`, ascending.
    pub fn pairs(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.cardinality());
        for (v, m) in self.mate.iter().enumerate() {
            if let Some(w) = m {
                if v < *w {
                    out.push((v, *w));
                }
            }
        }
        out
    }

    /// Edge ids of the matched pairs in `g`, ascending.
    pub fn edge_ids(&self, g: &Network) -> Vec<EdgeId> {
        let mut ids: Vec<EdgeId> = self
            .pairs()
            .iter()
            .map(|&(u, v)| g.edge_id(u, v).expect("matched pair is not an edge"))
            .collect();
        ids.sort_unstable();
        ids
    }

    /// Drops the matched pair `(u, v)`; used when that edge is deleted.
    pub fn unmatch_pair(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        if self.mate[u] != Some(v) || self.mate[v] != Some(u) {
            return Err(Error::InvalidParameter(format!("({u}, {v}) is not a matched pair")));
        }
        self.mate[u] = None;
        self.mate[v] = None;
        Ok(())
    }

    /// Checks symmetry and that every matched pair is an edge of `g`.
    pub fn validate(&self, g: &Network) -> Result<()> {
        if self.mate.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: g.vertex_count(),
                got: self.mate.len(),
                what: "matching partner table".into(),
            });
        }
        for (v, m) in self.mate.iter().enumerate() {
            if let Some(w) = m {
                if self.mate[*w] != Some(v) {
                    return Err(Error::InvalidPath(format!("asymmetric partners at {v}")));
                }
                if !g.has_edge(v, *w) {
                    return Err(Error::InvalidPath(format!("pair ({v}, {w}) is not an edge")));
                }
            }
        }
        Ok(())
    }
}

/// An alternating path between two exposed vertices: odd edge count, edges
/// alternate unmatched/matched starting and ending unmatched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternatingPath(pub Vec<VertexId>);

impl AlternatingPath {
    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }
}

/// Alternating-tree search with blossom contraction, reusable across roots.
struct PathSearch<'a> {
    g: &'a Network,
    parent: Vec<usize>,
    base: Vec<usize>,
    in_queue: Vec<bool>,
    scratch: Vec<bool>,
}

impl<'a> PathSearch<'a> {
    fn new(g: &'a Network) -> Self {
        let n = g.vertex_count();
        PathSearch {
            g,
            parent: vec![UNSET; n],
            base: (0..n).collect(),
            in_queue: vec![false; n],
            scratch: vec![false; n],
        }
    }

    /// Tries to find an augmenting path starting at the exposed `root`.
    fn run(&mut self, mate: &[Option<VertexId>], root: VertexId) -> Option<Vec<VertexId>> {
        let n = self.g.vertex_count();
        self.parent.fill(UNSET);
        self.in_queue.fill(false);
        for (i, b) in self.base.iter_mut().enumerate() {
            *b = i;
        }
        self.in_queue[root] = true;
        let mut queue = VecDeque::from([root]);

        while let Some(v) = queue.pop_front() {
            for &(to, _) in self.g.incident(v) {
                if self.base[v] == self.base[to] || mate[v] == Some(to) {
                    continue;
                }
                let to_in_tree_even =
                    to == root || mate[to].is_some_and(|mt| self.parent[mt] != UNSET);
                if to_in_tree_even {
                    // (v, to) closes an odd cycle; contract it to its base.
                    let cur_base = self.lca(mate, v, to);
                    self.scratch.fill(false);
                    self.mark_path(mate, v, cur_base, to);
                    self.mark_path(mate, to, cur_base, v);
                    for i in 0..n {
                        if self.scratch[self.base[i]] {
                            self.base[i] = cur_base;
                            if !self.in_queue[i] {
                                self.in_queue[i] = true;
                                queue.push_back(i);
                            }
                        }
                    }
                } else if self.parent[to] == UNSET {
                    self.parent[to] = v;
                    match mate[to] {
                        None => return Some(self.build_path(mate, to)),
                        Some(mt) => {
                            if !self.in_queue[mt] {
                                self.in_queue[mt] = true;
                                queue.push_back(mt);
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn lca(&mut self, mate: &[Option<VertexId>], a: VertexId, b: VertexId) -> VertexId {
        let marked = &mut self.scratch;
        marked.fill(false);
        let mut v = a;
        loop {
            v = self.base[v];
            marked[v] = true;
            match mate[v] {
                None => break, // reached the root
                Some(mt) => v = self.parent[mt],
            }
        }
        let mut v = b;
        loop {
            v = self.base[v];
            if marked[v] {
                return v;
            }
            v = self.parent[mate[v].expect("non-root tree vertex must be matched")];
        }
    }

    fn mark_path(
        &mut self,
        mate: &[Option<VertexId>],
        mut v: VertexId,
        cur_base: VertexId,
        mut child: VertexId,
    ) {
        while self.base[v] != cur_base {
            let mt = mate[v].expect("blossom interior vertex must be matched");
            self.scratch[self.base[v]] = true;
            self.scratch[self.base[mt]] = true;
            self.parent[v] = child;
            child = mt;
            v = self.parent[mt];
        }
    }

    /// Unrolls the parent chain from the exposed endpoint back to the root.
    fn build_path(&self, mate: &[Option<VertexId>], end: VertexId) -> Vec<VertexId> {
        let mut path = vec![end];
        let mut v = end;
        loop {
            let pv = self.parent[v];
            path.push(pv);
            match mate[pv] {
                None => break,
                Some(next) => {
                    path.push(next);
                    v = next;
                }
            }
        }
        path
    }
}

fn flip(mate: &mut [Option<VertexId>], path: &[VertexId]) {
    let mut i = 0;
    while i + 1 < path.len() {
        mate[path[i]] = Some(path[i + 1]);
        mate[path[i + 1]] = Some(path[i]);
        i += 2;
    }
}

/// Maximum-cardinality matching. Greedy seeding, then one blossom search per
/// remaining exposed vertex in ascending order.
pub fn max_matching(g: &Network) -> Matching {
    let n = g.vertex_count();
    let mut mate: Vec<Option<VertexId>> = vec![None; n];
    for v in 0..n {
        if mate[v].is_none() {
            for &(w, _) in g.incident(v) {
                if mate[w].is_none() {
                    mate[v] = Some(w);
                    mate[w] = Some(v);
                    break;
                }
            }
        }
    }
    let mut search = PathSearch::new(g);
    for root in 0..n {
        if mate[root].is_none() {
            if let Some(path) = search.run(&mate, root) {
                flip(&mut mate, &path);
            }
        }
    }
    Matching { mate }
}

/// Searches for an augmenting path w.r.t. `m`. When `hint` names an edge,
/// its exposed endpoints are tried first; the search then falls back to all
/// remaining exposed vertices, so `None` certifies that `m` is maximum.
pub fn augmenting_path(
    g: &Network,
    m: &Matching,
    hint: Option<(VertexId, VertexId)>,
) -> Option<AlternatingPath> {
    let n = g.vertex_count();
    let mut search = PathSearch::new(g);
    let mut tried = vec![false; n];
    let mut roots: Vec<VertexId> = Vec::new();
    if let Some((u, v)) = hint {
        roots.extend([u, v].into_iter().filter(|&x| x < n && !m.is_matched(x)));
    }
    roots.extend((0..n).filter(|&x| !m.is_matched(x)));
    for root in roots {
        if tried[root] {
            continue;
        }
        tried[root] = true;
        if let Some(path) = search.run(&m.mate, root) {
            return Some(AlternatingPath(path));
        }
    }
    None
}

/// Applies an alternating path by symmetric difference, growing the matching
/// by exactly one edge. The path is validated structurally first.
pub fn augment(g: &Network, m: &Matching, path: &AlternatingPath) -> Result<Matching> {
    let verts = path.vertices();
    if verts.len() < 2 || verts.len() % 2 != 0 {
        return Err(Error::InvalidPath(format!(
            "alternating path needs an even vertex count >= 2, got {}",
            verts.len()
        )));
    }
    let mut seen = vec![false; g.vertex_count()];
    for &v in verts {
        if v >= g.vertex_count() {
            return Err(Error::InvalidPath(format!("vertex {v} out of range")));
        }
        if seen[v] {
            return Err(Error::InvalidPath(format!("vertex {v} repeats")));
        }
        seen[v] = true;
    }
    for endpoint in [verts[0], verts[verts.len() - 1]] {
        if m.is_matched(endpoint) {
            return Err(Error::InvalidPath(format!("endpoint {endpoint} is not exposed")));
        }
    }
    for i in 0..verts.len() - 1 {
        let (a, b) = (verts[i], verts[i + 1]);
        if !g.has_edge(a, b) {
            return Err(Error::InvalidPath(format!("({a}, {b}) is not an edge")));
        }
        let matched = m.mate(a) == Some(b);
        if i % 2 == 0 && matched {
            return Err(Error::InvalidPath(format!("edge ({a}, {b}) should be unmatched")));
        }
        if i % 2 == 1 && !matched {
            return Err(Error::InvalidPath(format!("edge ({a}, {b}) should be matched")));
        }
    }
    let mut out = m.clone();
    flip(&mut out.mate, verts);
    Ok(out)
}
