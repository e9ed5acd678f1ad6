//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid library helpers: connectivity is a plain
//! DFS over an adjacency list, cluster counts come from that DFS, and FK
//! weights are rebuilt from the defining product formula.
#![allow(dead_code)]

use rcm_core::{lattice_box, BoundaryPartition, Configuration, Graph};

pub fn triangle() -> Graph {
    Graph::new(3, vec![(0, 1), (1, 2), (2, 0)], [0, 1]).unwrap()
}

pub fn square() -> Graph {
    Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], [0, 2]).unwrap()
}

/// Two poles joined by a direct edge and two paths of length two.
pub fn theta() -> Graph {
    Graph::new(4, vec![(0, 1), (0, 2), (2, 1), (0, 3), (3, 1)], [0, 1]).unwrap()
}

pub fn box2() -> Graph {
    lattice_box(2, 2, false).unwrap()
}

pub fn box3() -> Graph {
    lattice_box(2, 3, false).unwrap()
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (0..n - 1).map(|i| (i, i + 1)).collect(), [0, n - 1]).unwrap()
}

/// Fixtures with at most 8 edges, by name.
pub fn small_fixtures() -> Vec<(&'static str, Graph)> {
    vec![
        ("triangle", triangle()),
        ("square", square()),
        ("theta", theta()),
        ("box2", box2()),
    ]
}

/// The two standard partitions of a graph.
pub fn partitions(g: &Graph) -> Vec<(&'static str, BoundaryPartition)> {
    vec![
        ("free", BoundaryPartition::free(g)),
        ("wired", BoundaryPartition::wired(g)),
    ]
}

/// Edge list of g with extra edges chaining each block of α (the wiring).
pub fn wired_edges(g: &Graph, alpha: &BoundaryPartition) -> Vec<(usize, usize)> {
    let mut edges = g.edges().to_vec();
    for block in alpha.blocks() {
        for w in block.windows(2) {
            edges.push((w[0], w[1]));
        }
    }
    edges
}

/// Components of the graph (n vertices, given edges) as a vertex labelling.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        label[s] = next;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

pub fn component_count(n: usize, edges: &[(usize, usize)]) -> usize {
    components(n, edges).into_iter().max().map_or(0, |m| m + 1)
}

/// Open edges of ω plus the wiring of α.
pub fn open_wired_edges(
    g: &Graph,
    alpha: &BoundaryPartition,
    omega: &Configuration,
    skip: Option<usize>,
) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (0..g.edge_count())
        .filter(|&e| omega.get(e) && Some(e) != skip)
        .map(|e| g.endpoints(e))
        .collect();
    for block in alpha.blocks() {
        for w in block.windows(2) {
            edges.push((w[0], w[1]));
        }
    }
    edges
}

/// k(ω, α): clusters of the open subgraph after wiring.
pub fn oracle_clusters(g: &Graph, alpha: &BoundaryPartition, omega: &Configuration) -> usize {
    component_count(g.vertex_count(), &open_wired_edges(g, alpha, omega, None))
}

/// Normalised FK table rebuilt from p^o (1-p)^c q^k.
pub fn oracle_fk(g: &Graph, alpha: &BoundaryPartition, p: f64, q: f64) -> Vec<f64> {
    let m = g.edge_count();
    let mut w: Vec<f64> = (0..1u64 << m)
        .map(|i| {
            let omega = Configuration::from_index(i, m);
            let o = omega.count_open() as i32;
            p.powi(o)
                * (1.0 - p).powi(m as i32 - o)
                * q.powi(oracle_clusters(g, alpha, &omega) as i32)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= z);
    w
}

/// Product table with per-edge parameters.
pub fn oracle_product(probs: &[f64]) -> Vec<f64> {
    let m = probs.len();
    (0..1u64 << m)
        .map(|i| {
            (0..m)
                .map(|e| {
                    if i >> e & 1 == 1 {
                        probs[e]
                    } else {
                        1.0 - probs[e]
                    }
                })
                .product()
        })
        .collect()
}

/// K^α_e from scratch.
pub fn oracle_k(g: &Graph, alpha: &BoundaryPartition, omega: &Configuration, e: usize) -> bool {
    let (a, b) = g.endpoints(e);
    let label = components(
        g.vertex_count(),
        &open_wired_edges(g, alpha, omega, Some(e)),
    );
    label[a] == label[b]
}

/// SplitMix64 stream for test-side randomness.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
