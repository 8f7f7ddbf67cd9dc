//! Shared oracles and generators for the integration suites. Everything
//! here is deliberately naive: correctness by obviousness, cross-checked
//! against hand results and against the library's independent
//! implementations.

#![allow(dead_code)]

use bcapprox::graph::Graph;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// All shortest s-t paths as full node sequences (endpoints included), by
/// BFS layering plus depth-first expansion of predecessor lists. Worst case
/// exponential; fine at oracle scale.
pub fn all_shortest_paths(g: &Graph, s: u32, t: u32) -> Option<(u32, Vec<Vec<u32>>)> {
    let n = g.node_count();
    let mut dist = vec![-1i64; n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut queue = vec![s];
    dist[s as usize] = 0;
    let mut head = 0usize;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let du = dist[u as usize];
        for &w in g.out_neighbors(u) {
            if dist[w as usize] < 0 {
                dist[w as usize] = du + 1;
                queue.push(w);
            }
            if dist[w as usize] == du + 1 {
                preds[w as usize].push(u);
            }
        }
    }
    if dist[t as usize] < 0 {
        return None;
    }
    let mut paths = Vec::new();
    let mut stack = vec![t];
    expand(&preds, s, &mut stack, &mut paths);
    for p in paths.iter_mut() {
        p.reverse();
    }
    paths.sort();
    Some((dist[t as usize] as u32, paths))
}

fn expand(preds: &[Vec<u32>], s: u32, stack: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let last = *stack.last().unwrap();
    if last == s {
        out.push(stack.clone());
        return;
    }
    for &p in &preds[last as usize] {
        stack.push(p);
        expand(preds, s, stack, out);
        stack.pop();
    }
}

/// Shortest-path count by BFS accumulation: (distance if reachable, sigma).
pub fn count_shortest(g: &Graph, s: u32, t: u32) -> (Option<u32>, f64) {
    let n = g.node_count();
    let mut dist = vec![-1i64; n];
    let mut sigma = vec![0.0f64; n];
    let mut queue = vec![s];
    dist[s as usize] = 0;
    sigma[s as usize] = 1.0;
    let mut head = 0usize;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        let du = dist[u as usize];
        for &w in g.out_neighbors(u) {
            if dist[w as usize] < 0 {
                dist[w as usize] = du + 1;
                queue.push(w);
            }
            if dist[w as usize] == du + 1 {
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

/// Exact betweenness by full enumeration over all ordered pairs; quadratic
/// in paths, usable only on tiny graphs.
pub fn bc_by_enumeration(g: &Graph) -> Vec<f64> {
    let n = g.node_count();
    let mut acc = vec![0.0f64; n];
    for s in 0..n as u32 {
        for t in 0..n as u32 {
            if s == t {
                continue;
            }
            let Some((_, paths)) = all_shortest_paths(g, s, t) else {
                continue;
            };
            let total = paths.len() as f64;
            for path in &paths {
                for &v in &path[1..path.len() - 1] {
                    acc[v as usize] += 1.0 / total;
                }
            }
        }
    }
    let norm = 1.0 / (n as f64 * (n as f64 - 1.0));
    for a in acc.iter_mut() {
        *a *= norm;
    }
    acc
}

/// Full node sequence of a sampled path: endpoints around the stored
/// internal nodes.
pub fn full_path(s: u32, t: u32, internal: &[u32]) -> Vec<u32> {
    let mut p = Vec::with_capacity(internal.len() + 2);
    p.push(s);
    p.extend_from_slice(internal);
    p.push(t);
    p
}

/// Erdos-Renyi graph; guaranteed nonempty (falls back to a single edge).
pub fn gnp(n: usize, p: f64, directed: bool, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            if i == j || (!directed && i > j) {
                continue;
            }
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    Graph::from_edges(n, &edges, directed).unwrap()
}

/// Preferential-attachment graph: a seed clique, then each node attaches to
/// `attach` distinct earlier nodes chosen proportional to degree.
pub fn preferential(n: usize, attach: usize, seed: u64) -> Graph {
    assert!(n > attach + 1 && attach >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // Repeats in `targets` implement the degree proportionality.
    let mut targets: Vec<u32> = Vec::new();
    for i in 0..=attach as u32 {
        for j in 0..i {
            edges.push((j, i));
            targets.push(i);
            targets.push(j);
        }
    }
    for v in (attach + 1) as u32..n as u32 {
        let mut picked = Vec::with_capacity(attach);
        while picked.len() < attach {
            let t = targets[rng.gen_range(0..targets.len())];
            if !picked.contains(&t) {
                picked.push(t);
            }
        }
        for &t in &picked {
            edges.push((t, v));
            targets.push(t);
            targets.push(v);
        }
    }
    Graph::from_edges(n, &edges, false).unwrap()
}

/// Upper-tail p-value of the chi-square statistic for observed counts
/// against expected cell probabilities.
pub fn chi_square_p(observed: &[u64], probabilities: &[f64]) -> f64 {
    assert_eq!(observed.len(), probabilities.len());
    assert!(observed.len() >= 2);
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0f64;
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = p * total as f64;
        assert!(e > 0.0, "chi-square cell with zero expectation");
        stat += (o as f64 - e) * (o as f64 - e) / e;
    }
    let dof = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(dof).unwrap();
    1.0 - dist.cdf(stat)
}

pub fn sup_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
