//! Graph loading and exact baselines.
//!
//! Graphs are stored as immutable CSR adjacency. Node ids are remapped to a
//! dense range in first-appearance order; original labels are kept for output.
//!
//! Betweenness here is normalized over ordered pairs for both directed and
//! undirected graphs:
//!
//! ```text
//! b(v) = 1/(n(n-1)) * sum_{s != v != t} sigma_st(v) / sigma_st
//! ```
//!
//! where `sigma_st` counts shortest s-t paths and `sigma_st(v)` those with v
//! as an internal node. Unreachable pairs contribute zero.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Immutable unweighted graph in CSR form with original node labels.
#[derive(Debug, Clone)]
pub struct Graph {
    directed: bool,
    n: usize,
    edges: usize,
    fwd_off: Vec<usize>,
    fwd: Vec<u32>,
    bwd_off: Vec<usize>,
    bwd: Vec<u32>,
    labels: Vec<u64>,
}

impl Graph {
    /// Number of nodes (including isolated nodes named in the input).
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of edges after dedup: unordered pairs if undirected, arcs if directed.
    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Out-neighbors of `v` (all neighbors when undirected).
    #[inline]
    pub fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.fwd[self.fwd_off[v as usize]..self.fwd_off[v as usize + 1]]
    }

    /// In-neighbors of `v` (all neighbors when undirected).
    #[inline]
    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        if self.directed {
            &self.bwd[self.bwd_off[v as usize]..self.bwd_off[v as usize + 1]]
        } else {
            self.out_neighbors(v)
        }
    }

    #[inline]
    pub fn out_degree(&self, v: u32) -> usize {
        self.fwd_off[v as usize + 1] - self.fwd_off[v as usize]
    }

    #[inline]
    pub fn in_degree(&self, v: u32) -> usize {
        if self.directed {
            self.bwd_off[v as usize + 1] - self.bwd_off[v as usize]
        } else {
            self.out_degree(v)
        }
    }

    /// Original label of dense node id `v`.
    pub fn label(&self, v: u32) -> u64 {
        self.labels[v as usize]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Build a graph directly from dense edge pairs (mainly for tests and
    /// generators). Self-loops and duplicates are dropped like in loading.
    pub fn from_edges(n: usize, edge_list: &[(u32, u32)], directed: bool) -> Result<Self> {
        let mut seen = HashSet::with_capacity(edge_list.len());
        let mut kept = Vec::with_capacity(edge_list.len());
        for &(u, v) in edge_list {
            if u == v {
                continue;
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::Parameter(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            let key = if directed || u < v { (u, v) } else { (v, u) };
            if seen.insert(key) {
                kept.push(key);
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let labels = (0..n as u64).collect();
        Ok(Self::assemble(n, &kept, directed, labels))
    }

    fn assemble(n: usize, edges: &[(u32, u32)], directed: bool, labels: Vec<u64>) -> Self {
        let mut fwd_deg = vec![0usize; n];
        let mut bwd_deg = vec![0usize; n];
        for &(u, v) in edges {
            fwd_deg[u as usize] += 1;
            if directed {
                bwd_deg[v as usize] += 1;
            } else {
                fwd_deg[v as usize] += 1;
            }
        }
        let mut fwd_off = vec![0usize; n + 1];
        for i in 0..n {
            fwd_off[i + 1] = fwd_off[i] + fwd_deg[i];
        }
        let mut fwd = vec![0u32; fwd_off[n]];
        let mut cursor = fwd_off.clone();
        for &(u, v) in edges {
            fwd[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            if !directed {
                fwd[cursor[v as usize]] = u;
                cursor[v as usize] += 1;
            }
        }
        let (bwd_off, bwd) = if directed {
            let mut off = vec![0usize; n + 1];
            for i in 0..n {
                off[i + 1] = off[i] + bwd_deg[i];
            }
            let mut adj = vec![0u32; off[n]];
            let mut cur = off.clone();
            for &(u, v) in edges {
                adj[cur[v as usize]] = u;
                cur[v as usize] += 1;
            }
            (off, adj)
        } else {
            (Vec::new(), Vec::new())
        };
        Graph {
            directed,
            n,
            edges: edges.len(),
            fwd_off,
            fwd,
            bwd_off,
            bwd,
            labels,
        }
    }
}

/// Parse a whitespace-separated edge list: one `u v` pair per line, `#`/`%`
/// comment lines and blank lines skipped. Node labels may be arbitrary u64;
/// they are remapped to dense ids in first-appearance order. Self-loops are
/// dropped; duplicate edges (either orientation when undirected) collapse.
pub fn load_edge_list<R: BufRead>(reader: R, directed: bool) -> Result<Graph> {
    let mut ids: HashMap<u64, u32> = HashMap::new();
    let mut labels: Vec<u64> = Vec::new();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    let mut intern = |label: u64, labels: &mut Vec<u64>| -> u32 {
        *ids.entry(label).or_insert_with(|| {
            labels.push(label);
            (labels.len() - 1) as u32
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tok = trimmed.split_whitespace();
        let a = tok.next();
        let b = tok.next();
        let extra = tok.next();
        let (a, b) = match (a, b, extra) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected exactly two fields, got {trimmed:?}"),
                })
            }
        };
        let ua: u64 = a.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid node id {a:?}"),
        })?;
        let ub: u64 = b.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("invalid node id {b:?}"),
        })?;
        let u = intern(ua, &mut labels);
        let v = intern(ub, &mut labels);
        if u == v {
            continue;
        }
        let key = if directed || u < v { (u, v) } else { (v, u) };
        if seen.insert(key) {
            edges.push(key);
        }
    }

    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = labels.len();
    Ok(Graph::assemble(n, &edges, directed, labels))
}

/// Per-node betweenness values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct CentralityMap {
    values: Vec<f64>,
}

impl CentralityMap {
    pub fn new(values: Vec<f64>) -> Self {
        CentralityMap { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, v: u32) -> f64 {
        self.values[v as usize]
    }

    /// Sum of all values; equals the mean internal-node count of a uniformly
    /// random shortest path times the reachable-pair fraction.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Dependency accumulation from a single source; returns the per-node
/// unnormalized dependency sums for ordered pairs (s, t).
fn brandes_source(g: &Graph, s: u32, dist: &mut [i32], sigma: &mut [f64], delta: &mut [f64], order: &mut Vec<u32>, acc: &mut [f64]) {
    let n = g.node_count();
    for i in 0..n {
        dist[i] = -1;
        sigma[i] = 0.0;
        delta[i] = 0.0;
    }
    order.clear();
    dist[s as usize] = 0;
    sigma[s as usize] = 1.0;
    let mut head = 0usize;
    order.push(s);
    while head < order.len() {
        let u = order[head];
        head += 1;
        let du = dist[u as usize];
        for &w in g.out_neighbors(u) {
            if dist[w as usize] < 0 {
                dist[w as usize] = du + 1;
                order.push(w);
            }
            if dist[w as usize] == du + 1 {
                sigma[w as usize] += sigma[u as usize];
            }
        }
    }
    for &w in order.iter().rev() {
        if w == s {
            continue;
        }
        let dw = dist[w as usize];
        let coeff = (1.0 + delta[w as usize]) / sigma[w as usize];
        for &u in g.in_neighbors(w) {
            if dist[u as usize] >= 0 && dist[u as usize] + 1 == dw {
                delta[u as usize] += sigma[u as usize] * coeff;
            }
        }
        acc[w as usize] += delta[w as usize];
    }
}

/// Exact betweenness by dependency accumulation, parallel over sources.
/// Partial sums are merged in fixed chunk order, so results do not depend on
/// thread scheduling.
pub fn brandes_exact(g: &Graph) -> Result<CentralityMap> {
    brandes_exact_within(g, None)
}

/// Same as [`brandes_exact`], but aborts with a budget error once
/// `max_seconds` of wall time have elapsed. All-or-nothing: a partial exact
/// result is never returned.
pub fn brandes_exact_within(g: &Graph, max_seconds: Option<f64>) -> Result<CentralityMap> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::DegenerateGraph(
            "betweenness needs at least two nodes".into(),
        ));
    }
    let start = std::time::Instant::now();
    let expired = std::sync::atomic::AtomicBool::new(false);
    let check = || -> bool {
        match max_seconds {
            Some(s) if start.elapsed().as_secs_f64() > s => {
                expired.store(true, std::sync::atomic::Ordering::Relaxed);
                true
            }
            _ => expired.load(std::sync::atomic::Ordering::Relaxed),
        }
    };
    let sources: Vec<u32> = (0..n as u32).collect();
    const CHUNK: usize = 64;
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; n];
            if check() {
                return acc;
            }
            let mut dist = vec![-1i32; n];
            let mut sigma = vec![0.0f64; n];
            let mut delta = vec![0.0f64; n];
            let mut order = Vec::with_capacity(n);
            for &s in chunk {
                brandes_source(g, s, &mut dist, &mut sigma, &mut delta, &mut order, &mut acc);
            }
            acc
        })
        .collect();
    if expired.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::Budget(format!(
            "exact betweenness on {n} nodes exceeded the wall-clock limit"
        )));
    }
    let mut total = vec![0.0f64; n];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part.iter()) {
            *t += p;
        }
    }
    let norm = 1.0 / (n as f64 * (n as f64 - 1.0));
    for t in total.iter_mut() {
        *t *= norm;
    }
    Ok(CentralityMap::new(total))
}

fn bfs_dist_into(g: &Graph, src: u32, forward: bool, dist: &mut [i32], queue: &mut Vec<u32>) -> u32 {
    for d in dist.iter_mut() {
        *d = -1;
    }
    queue.clear();
    queue.push(src);
    dist[src as usize] = 0;
    let mut head = 0usize;
    let mut depth = 0u32;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let du = dist[u as usize];
        depth = depth.max(du as u32);
        let neigh = if forward {
            g.out_neighbors(u)
        } else {
            g.in_neighbors(u)
        };
        for &w in neigh {
            if dist[w as usize] < 0 {
                dist[w as usize] = du + 1;
                queue.push(w);
            }
        }
    }
    depth
}

/// Result of the vertex-diameter upper bound computation. The bound counts
/// nodes, not edges: a shortest path on `d` edges has `d + 1` nodes.
#[derive(Debug, Clone, Copy)]
pub struct DiameterBound {
    pub bound: u32,
    /// True when the bound came from the directed heuristic, which is not
    /// guaranteed to dominate the true vertex diameter.
    pub heuristic: bool,
}

/// Upper bound on the vertex diameter (max number of nodes on any shortest
/// path).
///
/// Undirected: per connected component, a double sweep picks a far-away node
/// `u` and bounds every shortest path in the component by `2*ecc(u) + 1`
/// nodes, further capped at the component size (paths are simple); the best
/// of `pivots` attempts is kept and the max over components returned. This
/// always dominates the true vertex diameter.
///
/// Directed: max over pivots of forward BFS depth + backward BFS depth + 1,
/// capped at n. This is a heuristic (flagged), not a guaranteed bound.
pub fn vertex_diameter_upper_bound<R: Rng>(g: &Graph, pivots: usize, rng: &mut R) -> DiameterBound {
    let n = g.node_count();
    let attempts = pivots.max(1);
    let mut dist = vec![-1i32; n];
    let mut queue: Vec<u32> = Vec::with_capacity(n);
    if !g.is_directed() {
        let mut comp = vec![u32::MAX; n];
        let mut members: Vec<Vec<u32>> = Vec::new();
        for v in 0..n as u32 {
            if comp[v as usize] != u32::MAX {
                continue;
            }
            let cid = members.len() as u32;
            let mut mem = vec![v];
            comp[v as usize] = cid;
            let mut head = 0usize;
            while head < mem.len() {
                let u = mem[head];
                head += 1;
                for &w in g.out_neighbors(u) {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = cid;
                        mem.push(w);
                    }
                }
            }
            members.push(mem);
        }
        let mut bound = 1u32;
        for mem in &members {
            if mem.len() == 1 {
                continue;
            }
            let mut best = u32::MAX;
            for _ in 0..attempts {
                let start = mem[rng.gen_range(0..mem.len())];
                bfs_dist_into(g, start, true, &mut dist, &mut queue);
                let mut far = start;
                let mut far_d = -1i32;
                for &w in mem {
                    let dw = dist[w as usize];
                    if dw > far_d || (dw == far_d && w < far) {
                        far = w;
                        far_d = dw;
                    }
                }
                let ecc = bfs_dist_into(g, far, true, &mut dist, &mut queue);
                best = best.min(2 * ecc + 1);
            }
            // A shortest path never revisits a node, so the component size
            // is itself a valid bound.
            bound = bound.max(best.min(mem.len() as u32));
        }
        DiameterBound {
            bound,
            heuristic: false,
        }
    } else {
        let mut bound = 1u32;
        for _ in 0..attempts {
            let p = rng.gen_range(0..n) as u32;
            let df = bfs_dist_into(g, p, true, &mut dist, &mut queue);
            let db = bfs_dist_into(g, p, false, &mut dist, &mut queue);
            bound = bound.max(df + db + 1);
        }
        DiameterBound {
            bound: bound.min(n as u32),
            heuristic: true,
        }
    }
}

/// Exact vertex diameter by all-pairs BFS. Intended for tests and small
/// graphs; cost is O(n * (n + m)).
pub fn exact_vertex_diameter(g: &Graph) -> u32 {
    let n = g.node_count();
    let mut dist = vec![-1i32; n];
    let mut queue: Vec<u32> = Vec::with_capacity(n);
    let mut best = 0u32;
    for s in 0..n as u32 {
        let depth = bfs_dist_into(g, s, true, &mut dist, &mut queue);
        best = best.max(depth + 1);
    }
    best.max(1)
}
