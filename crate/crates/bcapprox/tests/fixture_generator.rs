//! Regenerates `data/ca_grqc_like.txt`, a deterministic collaboration-style
//! fixture: 5242 nodes, 14395 edges, exact vertex diameter 17 (nodes on the
//! longest shortest path). Run explicitly:
//!
//! ```text
//! cargo test -p bcapprox --test fixture_generator -- --ignored
//! ```
//!
//! Construction: a preferential-attachment core (seed clique of 4, then a
//! deterministic mix of 2- and 3-edge attachments chosen so the edge count
//! lands exactly), plus a path tail grafted to a peripheral node, sized so
//! the longest shortest path has exactly 16 edges. Labels are shuffled and
//! spread out so they look like arbitrary ids, not insertion order.

mod common;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use bcapprox::graph::{exact_vertex_diameter, load_edge_list, Graph};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NODES: usize = 5242;
const EDGES: usize = 14_395;
const TARGET_PATH_EDGES: u32 = 16;
const SEED: u64 = 20_240_817;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ca_grqc_like.txt")
}

/// Preferential-attachment core on `n` nodes with exactly `three_count`
/// 3-edge attachers spread evenly among the attachers.
fn build_core(n: usize, three_count: usize, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let attachers = n - 4;
    assert!(three_count <= attachers);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(6 + 2 * attachers + three_count);
    let mut targets: Vec<u32> = Vec::new();
    for i in 0..4u32 {
        for j in 0..i {
            edges.push((j, i));
            targets.push(i);
            targets.push(j);
        }
    }
    let mut err = 0usize;
    for v in 4..n as u32 {
        err += three_count;
        let attach = if err >= attachers {
            err -= attachers;
            3
        } else {
            2
        };
        let mut picked: Vec<u32> = Vec::with_capacity(attach);
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
    edges
}

/// Eccentricity (in edges) of `src`, assuming a connected graph.
fn ecc(adj: &[Vec<u32>], src: u32) -> (u32, u32) {
    let mut dist = vec![-1i32; adj.len()];
    let mut queue = vec![src];
    dist[src as usize] = 0;
    let mut head = 0;
    let mut far = src;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for &w in &adj[u as usize] {
            if dist[w as usize] < 0 {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push(w);
                far = w;
            }
        }
    }
    assert_eq!(queue.len(), adj.len(), "core must be connected");
    (dist[far as usize] as u32, far)
}

fn adjacency(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    adj
}

#[test]
#[ignore = "writes data/ca_grqc_like.txt; run on purpose"]
fn regenerate_collaboration_fixture() {
    // The tail length and the peripheral node's eccentricity depend on each
    // other through the core size, so iterate to the fixed point.
    let mut tail = 6usize;
    let mut core_edges = Vec::new();
    let mut graft = 0u32;
    for round in 0..12 {
        let n_core = NODES - tail;
        let three_count = EDGES - tail - 6 - 2 * (n_core - 4);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let edges = build_core(n_core, three_count, &mut rng);
        assert_eq!(edges.len(), EDGES - tail);
        let adj = adjacency(n_core, &edges);
        // Double sweep: a BFS endpoint is peripheral; its exact
        // eccentricity comes from the second sweep.
        let (_, far) = ecc(&adj, 0);
        let (ecc_far, _) = ecc(&adj, far);
        let need = (TARGET_PATH_EDGES - ecc_far) as usize;
        assert!(ecc_far < TARGET_PATH_EDGES, "core already too deep");
        if need == tail {
            core_edges = edges;
            graft = far;
            break;
        }
        tail = need;
        assert!(round < 11, "tail length failed to converge");
    }
    assert!(!core_edges.is_empty());

    let n_core = NODES - tail;
    let mut edges = core_edges;
    let mut prev = graft;
    for t in 0..tail as u32 {
        let node = (n_core as u32) + t;
        edges.push((prev, node));
        prev = node;
    }
    assert_eq!(edges.len(), EDGES);

    // Arbitrary-looking external labels: a shuffled spread over ~5x the
    // node range.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x5157);
    let mut perm: Vec<u64> = (0..NODES as u64).collect();
    perm.shuffle(&mut rng);
    let label = |v: u32| perm[v as usize] * 5 + 3;
    let mut lines: Vec<(u64, u64)> = edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (label(a), label(b));
            if x < y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    lines.sort_unstable();

    let g = Graph::from_edges(
        NODES,
        &edges,
        false,
    )
    .unwrap();
    assert_eq!(g.node_count(), NODES);
    assert_eq!(g.edge_count(), EDGES);
    assert_eq!(exact_vertex_diameter(&g), TARGET_PATH_EDGES + 1);

    let path = fixture_path();
    let mut out = File::create(&path).unwrap();
    writeln!(out, "# Undirected collaboration-style fixture graph").unwrap();
    writeln!(out, "# Nodes: {NODES} Edges: {EDGES}").unwrap();
    writeln!(out, "# FromNodeId\tToNodeId").unwrap();
    for (a, b) in &lines {
        writeln!(out, "{a}\t{b}").unwrap();
    }
    drop(out);

    // Reload through the public parser and confirm the advertised shape.
    let reloaded = load_edge_list(BufReader::new(File::open(&path).unwrap()), false).unwrap();
    assert_eq!(reloaded.node_count(), NODES);
    assert_eq!(reloaded.edge_count(), EDGES);
    assert_eq!(exact_vertex_diameter(&reloaded), TARGET_PATH_EDGES + 1);
}
