//! Finite multigraphs with a boundary, boundary partitions, edge
//! configurations and connectivity queries.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{check_len, Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Finite multigraph with a distinguished boundary vertex set.
///
/// Parallel edges and self-loops are allowed. Edge ids are positions in the
/// edge list and never change.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<(VertexId, VertexId)>,
    boundary: Vec<VertexId>,
    is_boundary: Vec<bool>,
    adjacency: Vec<Vec<(EdgeId, VertexId)>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("vertex_count", &self.vertex_count)
            .field("edges", &self.edges)
            .field("boundary", &self.boundary)
            .finish()
    }
}

impl Graph {
    pub fn new(
        vertex_count: usize,
        edges: Vec<(VertexId, VertexId)>,
        boundary: impl IntoIterator<Item = VertexId>,
    ) -> Result<Self> {
        for (id, &(u, v)) in edges.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {id} = ({u}, {v}) has an endpoint outside 0..{vertex_count}"
                )));
            }
        }
        let boundary: BTreeSet<VertexId> = boundary.into_iter().collect();
        if let Some(&v) = boundary.iter().find(|&&v| v >= vertex_count) {
            return Err(Error::InvalidGraph(format!(
                "boundary vertex {v} outside 0..{vertex_count}"
            )));
        }
        let mut is_boundary = vec![false; vertex_count];
        for &v in &boundary {
            is_boundary[v] = true;
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (id, &(u, v)) in edges.iter().enumerate() {
            adjacency[u].push((id, v));
            if u != v {
                adjacency[v].push((id, u));
            }
        }
        Ok(Self {
            vertex_count,
            edges,
            boundary: boundary.into_iter().collect(),
            is_boundary,
            adjacency,
        })
    }

    /// Same vertices and edges, different boundary.
    pub fn with_boundary(&self, boundary: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        Graph::new(self.vertex_count, self.edges.clone(), boundary)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.is_boundary[v]
    }

    /// Incident `(edge, other endpoint)` pairs; a self-loop is listed once.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, VertexId)] {
        &self.adjacency[v]
    }

    /// Degree with self-loops counted twice.
    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v]
            .iter()
            .map(|&(_, w)| if w == v { 2 } else { 1 })
            .sum()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.vertex_count)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn is_self_loop(&self, e: EdgeId) -> bool {
        let (u, v) = self.edges[e];
        u == v
    }

    /// Whether the graph with all edges present is connected.
    pub fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.vertex_count);
        for &(u, v) in &self.edges {
            uf.union(u, v);
        }
        uf.set_count() == 1
    }

    /// Stable structural hash used to detect measures built on different graphs.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.vertex_count as u64);
        feed(self.edges.len() as u64);
        for &(u, v) in &self.edges {
            feed(u as u64);
            feed(v as u64);
        }
        feed(u64::MAX);
        for &b in &self.boundary {
            feed(b as u64);
        }
        h
    }
}

/// Partition of the boundary into wired blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryPartition {
    blocks: Vec<Vec<VertexId>>,
}

impl BoundaryPartition {
    /// All boundary vertices in singleton blocks.
    pub fn free(g: &Graph) -> Self {
        Self {
            blocks: g.boundary().iter().map(|&v| vec![v]).collect(),
        }
    }

    /// One block holding the whole boundary (no block if the boundary is empty).
    pub fn wired(g: &Graph) -> Self {
        let blocks = if g.boundary().is_empty() {
            Vec::new()
        } else {
            vec![g.boundary().to_vec()]
        };
        Self { blocks }
    }

    pub fn from_blocks(g: &Graph, blocks: Vec<Vec<VertexId>>) -> Result<Self> {
        let mut blocks: Vec<Vec<VertexId>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        blocks.sort();
        let partition = Self { blocks };
        partition.validate(g)?;
        Ok(partition)
    }

    pub fn blocks(&self) -> &[Vec<VertexId>] {
        &self.blocks
    }

    pub fn is_free(&self) -> bool {
        self.blocks.iter().all(|b| b.len() == 1)
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        let mut seen = vec![false; g.vertex_count()];
        for block in &self.blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &v in block {
                if v >= g.vertex_count() || !g.is_boundary(v) {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {v} is not a boundary vertex"
                    )));
                }
                if seen[v] {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {v} appears in two blocks"
                    )));
                }
                seen[v] = true;
            }
        }
        if let Some(&v) = g.boundary().iter().find(|&&v| !seen[v]) {
            return Err(Error::InvalidPartition(format!(
                "boundary vertex {v} is not covered"
            )));
        }
        Ok(())
    }
}

/// Wired graph G ∪ α together with the vertex map G → G ∪ α.
pub fn contract_with_map(g: &Graph, alpha: &BoundaryPartition) -> Result<(Graph, Vec<VertexId>)> {
    alpha.validate(g)?;
    let mut block_of = vec![usize::MAX; g.vertex_count()];
    for (b, block) in alpha.blocks().iter().enumerate() {
        for &v in block {
            block_of[v] = b;
        }
    }
    let mut block_image = vec![usize::MAX; alpha.blocks().len()];
    let mut map = vec![0; g.vertex_count()];
    let mut next = 0;
    for v in 0..g.vertex_count() {
        let b = block_of[v];
        if b == usize::MAX {
            map[v] = next;
            next += 1;
        } else {
            if block_image[b] == usize::MAX {
                block_image[b] = next;
                next += 1;
            }
            map[v] = block_image[b];
        }
    }
    let edges = g.edges().iter().map(|&(u, v)| (map[u], map[v])).collect();
    let boundary: Vec<VertexId> = block_image.clone();
    Ok((Graph::new(next, edges, boundary)?, map))
}

/// G ∪ α: one merged vertex per block, every edge kept with its id.
pub fn contract(g: &Graph, alpha: &BoundaryPartition) -> Result<Graph> {
    contract_with_map(g, alpha).map(|(h, _)| h)
}

/// k(ω, α): number of open clusters of G ∪ α, isolated vertices included.
pub fn cluster_count(g: &Graph, alpha: &BoundaryPartition, omega: &Configuration) -> Result<usize> {
    check_len(g.edge_count(), omega.len())?;
    let wired = contract(g, alpha)?;
    Ok(open_cluster_count(&wired, omega))
}

/// Number of open clusters of `g` itself (no wiring).
pub fn open_cluster_count(g: &Graph, omega: &Configuration) -> usize {
    let mut uf = UnionFind::new(g.vertex_count());
    for e in omega.iter_open() {
        let (u, v) = g.endpoints(e);
        uf.union(u, v);
    }
    uf.set_count()
}

/// Whether `u` and `v` are joined by an open path of `omega` in `g`.
pub fn connected_in(g: &Graph, omega: &Configuration, u: VertexId, v: VertexId) -> Result<bool> {
    check_len(g.edge_count(), omega.len())?;
    for x in [u, v] {
        if x >= g.vertex_count() {
            return Err(Error::InvalidGraph(format!("vertex {x} out of range")));
        }
    }
    let mut uf = UnionFind::new(g.vertex_count());
    for e in omega.iter_open() {
        let (a, b) = g.endpoints(e);
        uf.union(a, b);
    }
    Ok(uf.same(u, v))
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.size.fill(1);
        self.sets = self.parent.len();
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if two different sets were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sets -= 1;
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }

    pub fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    pub fn largest_set(&mut self) -> usize {
        (0..self.parent.len())
            .filter(|&i| self.parent[i] == i)
            .map(|i| self.size[i])
            .max()
            .unwrap_or(0)
    }
}

/// Reusable scratch for s-t reachability over an edge filter.
#[derive(Clone, Debug, Default)]
pub struct PathFinder {
    mark: Vec<u32>,
    stamp: u32,
    stack: Vec<VertexId>,
}

impl PathFinder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Depth-first search from `s` for `t` over edges accepted by `usable`.
    pub fn connected(
        &mut self,
        g: &Graph,
        s: VertexId,
        t: VertexId,
        mut usable: impl FnMut(EdgeId) -> bool,
    ) -> bool {
        if s == t {
            return true;
        }
        if self.mark.len() < g.vertex_count() {
            self.mark.resize(g.vertex_count(), 0);
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.fill(0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.stack.clear();
        self.stack.push(s);
        self.mark[s] = stamp;
        while let Some(v) = self.stack.pop() {
            for &(e, w) in g.incident(v) {
                if self.mark[w] == stamp || !usable(e) {
                    continue;
                }
                if w == t {
                    return true;
                }
                self.mark[w] = stamp;
                self.stack.push(w);
            }
        }
        false
    }
}

/// Open/closed flag per edge id, packed in 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({})", self.to_bitstring())
    }
}

impl Configuration {
    pub fn closed(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn open(len: usize) -> Self {
        let mut c = Self::closed(len);
        for e in 0..len {
            c.set(e, true);
        }
        c
    }

    /// Bit `e` of `index` is the state of edge `e`. Requires `len <= 64`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "index encoding needs at most 64 edges");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        let mut c = Self::closed(len);
        if len > 0 {
            c.words[0] = index & mask;
        }
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::closed(bits.len());
        for (e, &b) in bits.iter().enumerate() {
            c.set(e, b);
        }
        c
    }

    /// Parses `0`/`1` characters, edge 0 first.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let bits: Result<Vec<bool>> = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect();
        Ok(Self::from_bools(&bits?))
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "index encoding needs at most 64 edges");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, e: EdgeId) -> bool {
        debug_assert!(e < self.len);
        self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: EdgeId, open: bool) {
        debug_assert!(e < self.len);
        let bit = 1u64 << (e % 64);
        if open {
            self.words[e / 64] |= bit;
        } else {
            self.words[e / 64] &= !bit;
        }
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_open(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Complemented configuration.
    pub fn complement(&self) -> Configuration {
        let mut c = Configuration::closed(self.len);
        for e in 0..self.len {
            c.set(e, !self.get(e));
        }
        c
    }

    /// Fixed-width hexadecimal word; edge 0 is the least significant bit.
    pub fn to_hex(&self) -> String {
        let digits = self.len.div_ceil(4).max(1);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let mut nibble = 0u8;
            for b in 0..4 {
                let e = d * 4 + b;
                if e < self.len && self.get(e) {
                    nibble |= 1 << b;
                }
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let s = s.trim();
        let mut c = Configuration::closed(len);
        for (d, ch) in s.chars().rev().enumerate() {
            let nibble = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let e = d * 4 + b;
                    if e >= len {
                        return Err(Error::Parse(format!("hex word sets edge {e} >= {len}")));
                    }
                    c.set(e, true);
                }
            }
        }
        Ok(c)
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len)
            .map(|e| if self.get(e) { '1' } else { '0' })
            .collect()
    }
}

/// Hypercubic box {0..n-1}^d with nearest-neighbour edges.
#[derive(Clone, Debug)]
pub struct LatticeBox {
    graph: Graph,
    dim: usize,
    side: usize,
    torus: bool,
    wrap: Vec<bool>,
}

impl LatticeBox {
    pub fn new(dim: usize, side: usize, torus: bool) -> Result<Self> {
        if dim == 0 || side == 0 {
            return Err(Error::Parameter(
                "lattice box needs d >= 1 and n >= 1".into(),
            ));
        }
        let vertex_count = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .filter(|&v| v <= u32::MAX as usize)
            .ok_or_else(|| Error::Size(format!("{side}^{dim} vertices")))?;
        let edge_total = vertex_count
            .checked_mul(dim)
            .ok_or_else(|| Error::Size(format!("{dim}*{side}^{dim} edges")))?;
        let mut edges = Vec::with_capacity(edge_total);
        let mut wrap = Vec::with_capacity(edge_total);
        let mut stride = vec![1usize; dim];
        for i in 1..dim {
            stride[i] = stride[i - 1] * side;
        }
        for v in 0..vertex_count {
            for &s in &stride {
                let c = (v / s) % side;
                if c + 1 < side {
                    edges.push((v, v + s));
                    wrap.push(false);
                } else if torus {
                    edges.push((v, v - (side - 1) * s));
                    wrap.push(true);
                }
            }
        }
        let boundary: Vec<VertexId> = if torus {
            Vec::new()
        } else {
            (0..vertex_count)
                .filter(|&v| {
                    (0..dim).any(|i| {
                        let c = (v / stride[i]) % side;
                        c == 0 || c == side - 1
                    })
                })
                .collect()
        };
        Ok(Self {
            graph: Graph::new(vertex_count, edges, boundary)?,
            dim,
            side,
            torus,
            wrap,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn is_torus(&self) -> bool {
        self.torus
    }

    /// Whether edge `e` is a wraparound edge of the torus.
    pub fn is_wrap(&self, e: EdgeId) -> bool {
        self.wrap[e]
    }

    pub fn coords(&self, v: VertexId) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim);
        let mut rest = v;
        for _ in 0..self.dim {
            out.push(rest % self.side);
            rest /= self.side;
        }
        out
    }

    pub fn vertex(&self, coords: &[usize]) -> VertexId {
        coords.iter().rev().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Edge id joining `v` to its `+` neighbour along axis `axis`, if present.
    pub fn edge_towards(&self, v: VertexId, axis: usize) -> Option<EdgeId> {
        self.graph.incident(v).iter().find_map(|&(e, w)| {
            let (a, _) = self.graph.endpoints(e);
            let c = self.coords(v);
            let mut target = c.clone();
            target[axis] = (c[axis] + 1) % self.side;
            (a == v && w == self.vertex(&target) && (self.torus || c[axis] + 1 < self.side))
                .then_some(e)
        })
    }

    /// Recognises a graph produced by `lattice_box(2, n, false)` and returns `n`.
    pub fn recognize_square(g: &Graph) -> Result<LatticeBox> {
        let n = (g.vertex_count() as f64).sqrt().round() as usize;
        if n == 0 || n * n != g.vertex_count() {
            return Err(Error::Plan(
                "graph is not a two-dimensional lattice box".into(),
            ));
        }
        let candidate = LatticeBox::new(2, n, false)?;
        if candidate.graph.edges() != g.edges() {
            return Err(Error::Plan(
                "graph is not a two-dimensional lattice box".into(),
            ));
        }
        Ok(candidate)
    }
}

/// Box {0..n-1}^d; the boundary is the set of vertices with a neighbour outside.
pub fn lattice_box(dim: usize, side: usize, torus: bool) -> Result<Graph> {
    LatticeBox::new(dim, side, torus).map(LatticeBox::into_graph)
}
