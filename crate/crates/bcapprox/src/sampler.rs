//! Shortest-path sampling.
//!
//! A sample is drawn in three steps:
//!
//! 1. a uniform ordered pair (s, t), s != t;
//! 2. a balanced bidirectional BFS that meets in the middle and yields the
//!    exact distance and exact shortest-path count `sigma_st`, plus per-node
//!    path-count weights on both sides of the meeting cut;
//! 3. `ceil(alpha * sigma_st)` paths (capped) drawn uniformly at random with
//!    replacement from the set of shortest s-t paths, by weighted walks over
//!    the shortest-path DAG.
//!
//! With `alpha = ln(1/lambda)` the expected fraction of distinct shortest
//! paths missing from a bag is about `e^(-alpha) = lambda`.
//!
//! Every sample is generated from its own counter-based RNG stream derived
//! from (master seed, stream id), so any sample can be regenerated
//! independently of scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::graph::Graph;

/// Stream id base for phase-1 samples (phase-2 samples use ids from 0).
pub const PHASE1_STREAM_BASE: u64 = 1 << 62;
/// Stream id for diameter pivot selection.
pub const DIAMETER_STREAM: u64 = 1 << 63;
/// Stream id base for ad-hoc probe sampling (stats reporting).
pub const PROBE_STREAM_BASE: u64 = (1 << 62) | (1 << 61);

/// RNG for one sample: same key for the whole run, one counter stream per
/// sample index.
pub fn stream_rng(master_seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform ordered pair (s, t) with s != t.
pub fn sample_pair<R: Rng>(g: &Graph, rng: &mut R) -> (u32, u32) {
    let n = g.node_count();
    assert!(n >= 2, "pair sampling needs at least two nodes");
    let s = rng.gen_range(0..n) as u32;
    let mut t = rng.gen_range(0..n - 1) as u32;
    if t >= s {
        t += 1;
    }
    (s, t)
}

/// Reusable buffers for the bidirectional search, reset in O(1) per sample
/// via epoch stamps.
pub struct SearchWorkspace {
    epoch: u32,
    f_stamp: Vec<u32>,
    f_dist: Vec<u32>,
    f_sigma: Vec<f64>,
    f_touched: Vec<u32>,
    b_stamp: Vec<u32>,
    b_dist: Vec<u32>,
    b_sigma: Vec<f64>,
    b_touched: Vec<u32>,
    frontier: Vec<u32>,
    next: Vec<u32>,
    other_frontier: Vec<u32>,
}

impl SearchWorkspace {
    pub fn new(n: usize) -> Self {
        SearchWorkspace {
            epoch: 0,
            f_stamp: vec![0; n],
            f_dist: vec![0; n],
            f_sigma: vec![0.0; n],
            f_touched: Vec::new(),
            b_stamp: vec![0; n],
            b_dist: vec![0; n],
            b_sigma: vec![0.0; n],
            b_touched: Vec::new(),
            frontier: Vec::new(),
            next: Vec::new(),
            other_frontier: Vec::new(),
        }
    }
}

/// Sampled shortest-path DAG for one (s, t) pair: exact distance and path
/// count, per-node (distance, path count) weights from both BFS sides, and
/// the meeting cut with per-node products `sigma_fwd * sigma_bwd`.
#[derive(Debug, Clone)]
pub struct SpDag {
    pub s: u32,
    pub t: u32,
    /// Edge count of a shortest path; `None` when t is unreachable from s.
    pub dist: Option<u32>,
    /// Exact number of shortest s-t paths (0 when unreachable). Counted in
    /// f64; graphs with more than 2^53 paths lose exactness in the low bits.
    pub sigma: f64,
    /// Meeting cut: nodes w with dist_fwd(w) + dist_bwd(w) == dist, paired
    /// with sigma_fwd(w) * sigma_bwd(w).
    pub meet: Vec<(u32, f64)>,
    /// Forward-settled nodes: node -> (distance from s, path count from s).
    pub fwd: HashMap<u32, (u32, f64)>,
    /// Backward-settled nodes: node -> (distance to t, path count to t).
    pub bwd: HashMap<u32, (u32, f64)>,
}

impl SpDag {
    pub fn reachable(&self) -> bool {
        self.dist.is_some()
    }
}

/// Balanced bidirectional BFS from s and t. Alternates full-level expansions
/// of the frontier whose total out- (resp. in-) degree is smaller, forward on
/// ties, until the sides meet. Distances and path counts of settled levels
/// are exact, so `dist` and `sigma` match a single-sided BFS.
pub fn bidirectional_bfs(g: &Graph, s: u32, t: u32) -> SpDag {
    let mut ws = SearchWorkspace::new(g.node_count());
    bidirectional_bfs_with(g, s, t, &mut ws)
}

pub fn bidirectional_bfs_with(g: &Graph, s: u32, t: u32, ws: &mut SearchWorkspace) -> SpDag {
    assert_ne!(s, t, "pair endpoints must differ");
    ws.epoch = ws.epoch.wrapping_add(1);
    if ws.epoch == 0 {
        // Extremely rare wrap: clear stamps so stale epochs cannot collide.
        ws.f_stamp.iter_mut().for_each(|x| *x = u32::MAX);
        ws.b_stamp.iter_mut().for_each(|x| *x = u32::MAX);
        ws.epoch = 1;
    }
    let epoch = ws.epoch;
    ws.f_touched.clear();
    ws.b_touched.clear();

    ws.f_stamp[s as usize] = epoch;
    ws.f_dist[s as usize] = 0;
    ws.f_sigma[s as usize] = 1.0;
    ws.f_touched.push(s);
    ws.b_stamp[t as usize] = epoch;
    ws.b_dist[t as usize] = 0;
    ws.b_sigma[t as usize] = 1.0;
    ws.b_touched.push(t);

    let mut f_frontier = std::mem::take(&mut ws.frontier);
    let mut b_frontier = std::mem::take(&mut ws.other_frontier);
    let mut next = std::mem::take(&mut ws.next);
    f_frontier.clear();
    b_frontier.clear();
    f_frontier.push(s);
    b_frontier.push(t);
    let mut df = 0u32;
    let mut db = 0u32;

    let mut meet: Vec<(u32, f64)> = Vec::new();
    let mut dist: Option<u32> = None;

    while !f_frontier.is_empty() && !b_frontier.is_empty() {
        let f_cost: usize = f_frontier.iter().map(|&u| g.out_degree(u)).sum();
        let b_cost: usize = b_frontier.iter().map(|&u| g.in_degree(u)).sum();
        next.clear();
        if f_cost <= b_cost {
            // Expand forward one full level.
            for &u in &f_frontier {
                let su = ws.f_sigma[u as usize];
                for &w in g.out_neighbors(u) {
                    let wi = w as usize;
                    if ws.f_stamp[wi] != epoch {
                        ws.f_stamp[wi] = epoch;
                        ws.f_dist[wi] = df + 1;
                        ws.f_sigma[wi] = su;
                        ws.f_touched.push(w);
                        next.push(w);
                    } else if ws.f_dist[wi] == df + 1 {
                        ws.f_sigma[wi] += su;
                    }
                }
            }
            df += 1;
            std::mem::swap(&mut f_frontier, &mut next);
            let mut best = u32::MAX;
            for &w in &f_frontier {
                if ws.b_stamp[w as usize] == epoch {
                    best = best.min(df + ws.b_dist[w as usize]);
                }
            }
            if best != u32::MAX {
                debug_assert_eq!(best, df + db);
                for &w in &f_frontier {
                    let wi = w as usize;
                    if ws.b_stamp[wi] == epoch && df + ws.b_dist[wi] == best {
                        meet.push((w, ws.f_sigma[wi] * ws.b_sigma[wi]));
                    }
                }
                dist = Some(best);
                break;
            }
        } else {
            // Expand backward one full level.
            for &u in &b_frontier {
                let su = ws.b_sigma[u as usize];
                for &w in g.in_neighbors(u) {
                    let wi = w as usize;
                    if ws.b_stamp[wi] != epoch {
                        ws.b_stamp[wi] = epoch;
                        ws.b_dist[wi] = db + 1;
                        ws.b_sigma[wi] = su;
                        ws.b_touched.push(w);
                        next.push(w);
                    } else if ws.b_dist[wi] == db + 1 {
                        ws.b_sigma[wi] += su;
                    }
                }
            }
            db += 1;
            std::mem::swap(&mut b_frontier, &mut next);
            let mut best = u32::MAX;
            for &w in &b_frontier {
                if ws.f_stamp[w as usize] == epoch {
                    best = best.min(ws.f_dist[w as usize] + db);
                }
            }
            if best != u32::MAX {
                debug_assert_eq!(best, df + db);
                for &w in &b_frontier {
                    let wi = w as usize;
                    if ws.f_stamp[wi] == epoch && ws.f_dist[wi] + db == best {
                        meet.push((w, ws.f_sigma[wi] * ws.b_sigma[wi]));
                    }
                }
                dist = Some(best);
                break;
            }
        }
    }

    let sigma: f64 = meet.iter().map(|&(_, p)| p).sum();
    let mut fwd = HashMap::with_capacity(ws.f_touched.len());
    for &v in &ws.f_touched {
        fwd.insert(v, (ws.f_dist[v as usize], ws.f_sigma[v as usize]));
    }
    let mut bwd = HashMap::with_capacity(ws.b_touched.len());
    for &v in &ws.b_touched {
        bwd.insert(v, (ws.b_dist[v as usize], ws.b_sigma[v as usize]));
    }

    ws.frontier = f_frontier;
    ws.other_frontier = b_frontier;
    ws.next = next;

    SpDag {
        s,
        t,
        dist,
        sigma: if dist.is_some() { sigma } else { 0.0 },
        meet,
        fwd,
        bwd,
    }
}

/// A bag of shortest paths for one pair, stored as internal-node sequences
/// (endpoints excluded). Empty when the pair is unreachable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PathBag {
    pub s: u32,
    pub t: u32,
    pub paths: Vec<Vec<u32>>,
}

impl PathBag {
    pub fn size(&self) -> usize {
        self.paths.len()
    }
}

fn pick_weighted<R: Rng, F: Fn(usize) -> f64>(rng: &mut R, total: f64, k: usize, weight: F) -> usize {
    debug_assert!(k > 0);
    let mut r = rng.gen::<f64>() * total;
    let mut last = 0;
    for i in 0..k {
        let w = weight(i);
        if w <= 0.0 {
            continue;
        }
        last = i;
        if r < w {
            return i;
        }
        r -= w;
    }
    // Floating-point slack can walk past the final positive weight.
    last
}

/// Draw `min(ceil(alpha * sigma), bag_cap)` shortest paths uniformly with
/// replacement from the DAG. Each path is sampled by picking a meeting node
/// with probability proportional to `sigma_fwd * sigma_bwd`, then walking to
/// s (resp. t) choosing each predecessor (successor) with probability
/// proportional to its path count, so every shortest path has probability
/// exactly `1/sigma`.
pub fn sample_bag<R: Rng>(
    g: &Graph,
    dag: &SpDag,
    alpha: f64,
    bag_cap: usize,
    rng: &mut R,
) -> PathBag {
    if !dag.reachable() {
        return PathBag {
            s: dag.s,
            t: dag.t,
            paths: Vec::new(),
        };
    }
    let want = (alpha * dag.sigma).ceil();
    let size = if want >= bag_cap as f64 {
        bag_cap
    } else {
        (want as usize).max(1)
    };
    let mut paths = Vec::with_capacity(size);
    for _ in 0..size {
        let mi = pick_weighted(rng, dag.sigma, dag.meet.len(), |i| dag.meet[i].1);
        let w = dag.meet[mi].0;
        // Walk w -> s through the forward tree.
        let mut front: Vec<u32> = Vec::new();
        let mut cur = w;
        loop {
            let (d, _) = dag.fwd[&cur];
            if d == 0 {
                break;
            }
            let neigh = g.in_neighbors(cur);
            let total = dag.fwd[&cur].1;
            let pick = pick_weighted(rng, total, neigh.len(), |i| {
                match dag.fwd.get(&neigh[i]) {
                    Some(&(pd, ps)) if pd + 1 == d => ps,
                    _ => 0.0,
                }
            });
            cur = neigh[pick];
            if dag.fwd[&cur].0 != 0 {
                front.push(cur);
            }
        }
        // Walk w -> t through the backward tree.
        let mut back: Vec<u32> = Vec::new();
        cur = w;
        loop {
            let (d, _) = dag.bwd[&cur];
            if d == 0 {
                break;
            }
            let neigh = g.out_neighbors(cur);
            let total = dag.bwd[&cur].1;
            let pick = pick_weighted(rng, total, neigh.len(), |i| {
                match dag.bwd.get(&neigh[i]) {
                    Some(&(pd, ps)) if pd + 1 == d => ps,
                    _ => 0.0,
                }
            });
            cur = neigh[pick];
            if dag.bwd[&cur].0 != 0 {
                back.push(cur);
            }
        }
        // Internal sequence from s-side to t-side.
        let mut path = Vec::with_capacity(front.len() + back.len() + 1);
        path.extend(front.iter().rev());
        if w != dag.s && w != dag.t {
            path.push(w);
        }
        path.extend(back.iter());
        paths.push(path);
    }
    PathBag {
        s: dag.s,
        t: dag.t,
        paths,
    }
}

/// One replayable sample: the path bag plus the Rademacher signs drawn from
/// the same stream (after the bag), one per estimator trial.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SampleRecord {
    pub bag: PathBag,
    pub signs: Vec<i8>,
}

/// Sampling parameters shared by the engines.
#[derive(Debug, Clone, Copy)]
pub struct SampleParams {
    pub alpha: f64,
    pub bag_cap: usize,
    pub trials: usize,
}

/// Draw one full sample from its dedicated stream: pair, bag, then signs.
pub fn draw_sample(g: &Graph, params: &SampleParams, master_seed: u64, stream_id: u64) -> SampleRecord {
    let mut ws = SearchWorkspace::new(g.node_count());
    draw_sample_with(g, params, master_seed, stream_id, &mut ws)
}

pub fn draw_sample_with(
    g: &Graph,
    params: &SampleParams,
    master_seed: u64,
    stream_id: u64,
    ws: &mut SearchWorkspace,
) -> SampleRecord {
    let mut rng = stream_rng(master_seed, stream_id);
    let (s, t) = sample_pair(g, &mut rng);
    let dag = bidirectional_bfs_with(g, s, t, ws);
    let bag = sample_bag(g, &dag, params.alpha, params.bag_cap, &mut rng);
    let signs = (0..params.trials)
        .map(|_| if rng.gen::<bool>() { 1i8 } else { -1i8 })
        .collect();
    SampleRecord { bag, signs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use std::collections::HashSet;

    fn diamond() -> Graph {
        // 0 -> {1, 2} -> 3: two shortest paths of length 2.
        Graph::from_edges(4, &[(0, 1), (0, 2), (1, 3), (2, 3)], false).unwrap()
    }

    /// Plain single-sided BFS oracle for distance and path count.
    fn bfs_oracle(g: &Graph, s: u32, t: u32) -> (Option<u32>, f64) {
        let n = g.node_count();
        let mut dist = vec![-1i64; n];
        let mut sigma = vec![0.0f64; n];
        let mut q = vec![s];
        dist[s as usize] = 0;
        sigma[s as usize] = 1.0;
        let mut head = 0;
        while head < q.len() {
            let u = q[head];
            head += 1;
            for &w in g.out_neighbors(u) {
                if dist[w as usize] < 0 {
                    dist[w as usize] = dist[u as usize] + 1;
                    q.push(w);
                }
                if dist[w as usize] == dist[u as usize] + 1 {
                    sigma[w as usize] += sigma[u as usize];
                }
            }
        }
        if dist[t as usize] < 0 {
            (None, 0.0)
        } else {
            (Some(dist[t as usize] as u32), sigma[t as usize])
        }
    }

    #[test]
    fn pair_sampling_covers_all_ordered_pairs() {
        let g = diamond();
        let mut rng = stream_rng(1, 0);
        let mut seen = HashSet::new();
        for _ in 0..2000 {
            let (s, t) = sample_pair(&g, &mut rng);
            assert_ne!(s, t);
            seen.insert((s, t));
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn diamond_sigma() {
        let g = diamond();
        let dag = bidirectional_bfs(&g, 0, 3);
        assert_eq!(dag.dist, Some(2));
        assert_eq!(dag.sigma, 2.0);
    }

    #[test]
    fn adjacent_pair() {
        let g = diamond();
        let dag = bidirectional_bfs(&g, 0, 1);
        assert_eq!(dag.dist, Some(1));
        assert_eq!(dag.sigma, 1.0);
        let mut rng = stream_rng(9, 0);
        let bag = sample_bag(&g, &dag, 2.3, 64, &mut rng);
        assert!(bag.paths.iter().all(|p| p.is_empty()));
    }

    #[test]
    fn unreachable_pair_empty_bag() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)], true).unwrap();
        let dag = bidirectional_bfs(&g, 0, 2);
        assert!(!dag.reachable());
        assert_eq!(dag.sigma, 0.0);
        let mut rng = stream_rng(9, 1);
        let bag = sample_bag(&g, &dag, 2.3, 64, &mut rng);
        assert_eq!(bag.size(), 0);
    }

    #[test]
    fn agrees_with_single_sided_bfs_on_random_graphs() {
        use rand::Rng;
        for seed in 0..30u64 {
            let mut rng = stream_rng(1000 + seed, 0);
            let n = rng.gen_range(5..60);
            let directed = rng.gen::<bool>();
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in 0..n as u32 {
                    if u != v && rng.gen::<f64>() < 2.5 / n as f64 {
                        edges.push((u, v));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            let g = Graph::from_edges(n, &edges, directed).unwrap();
            let mut ws = SearchWorkspace::new(n);
            for _ in 0..40 {
                let (s, t) = sample_pair(&g, &mut rng);
                let dag = bidirectional_bfs_with(&g, s, t, &mut ws);
                let (od, os) = bfs_oracle(&g, s, t);
                assert_eq!(dag.dist, od, "dist mismatch seed={seed} s={s} t={t}");
                assert_eq!(dag.sigma, os, "sigma mismatch seed={seed} s={s} t={t}");
            }
        }
    }

    #[test]
    fn bag_size_follows_alpha_and_cap() {
        let g = diamond();
        let dag = bidirectional_bfs(&g, 0, 3);
        let mut rng = stream_rng(5, 0);
        // sigma = 2, alpha = 2.3026 -> ceil(4.605) = 5 paths.
        let bag = sample_bag(&g, &dag, (10.0f64).ln(), 65536, &mut rng);
        assert_eq!(bag.size(), 5);
        let capped = sample_bag(&g, &dag, (10.0f64).ln(), 3, &mut rng);
        assert_eq!(capped.size(), 3);
        for p in &bag.paths {
            assert_eq!(p.len(), 1);
            assert!(p[0] == 1 || p[0] == 2);
        }
    }

    #[test]
    fn paths_are_valid_shortest_paths() {
        use rand::Rng;
        let mut rng = stream_rng(77, 0);
        for seed in 0..10u64 {
            let mut grng = stream_rng(2000 + seed, 0);
            let n = 30usize;
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in (u + 1)..n as u32 {
                    if grng.gen::<f64>() < 0.12 {
                        edges.push((u, v));
                    }
                }
            }
            let g = match Graph::from_edges(n, &edges, false) {
                Ok(g) => g,
                Err(_) => continue,
            };
            for _ in 0..30 {
                let (s, t) = sample_pair(&g, &mut rng);
                let dag = bidirectional_bfs(&g, s, t);
                if !dag.reachable() {
                    continue;
                }
                let d = dag.dist.unwrap() as usize;
                let bag = sample_bag(&g, &dag, 1.0, 16, &mut rng);
                for p in &bag.paths {
                    assert_eq!(p.len() + 1, d.max(1), "internal count = dist - 1");
                    let mut full = vec![s];
                    full.extend(p.iter().copied());
                    full.push(t);
                    for pair in full.windows(2) {
                        assert!(
                            g.out_neighbors(pair[0]).contains(&pair[1]),
                            "non-edge on sampled path"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn draw_sample_is_replayable() {
        let g = diamond();
        let params = SampleParams {
            alpha: (10.0f64).ln(),
            bag_cap: 65536,
            trials: 25,
        };
        let a = draw_sample(&g, &params, 99, 7);
        let b = draw_sample(&g, &params, 99, 7);
        assert_eq!(a, b);
        assert_eq!(a.signs.len(), 25);
    }
}
