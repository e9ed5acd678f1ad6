//! Nested boxes Λ ⊆ Δ ⊆ Σ in a finite host graph, the exploration coupling of
//! the FK measures on Σ and Δ with a dominating product configuration, and the
//! exact disagreement bound.

use std::collections::HashMap;

use crate::error::{check_len, Error, Result};
use crate::graph::{BoundaryPartition, Configuration, EdgeId, Graph, UnionFind, VertexId};
use crate::measure::{exact_fk, ExactMeasure, FkParams, ENUMERATION_CAP};
use crate::reliability;
use crate::rng::CounterRng;

/// Subgraph induced by a vertex set, relabelled to local ids.
#[derive(Clone, Debug)]
pub struct InducedBox {
    /// Local graph; its boundary is the set of vertices with a host neighbour outside.
    pub graph: Graph,
    /// Local vertex to host vertex.
    pub vertices: Vec<VertexId>,
    /// Local edge to host edge, ascending.
    pub edges: Vec<EdgeId>,
    local_vertex: Vec<Option<usize>>,
}

impl InducedBox {
    pub fn new(host: &Graph, set: &[VertexId]) -> Result<Self> {
        let mut inside = vec![false; host.vertex_count()];
        for &v in set {
            if v >= host.vertex_count() {
                return Err(Error::Nesting(format!("vertex {v} is not in the host")));
            }
            inside[v] = true;
        }
        let vertices: Vec<VertexId> = (0..host.vertex_count()).filter(|&v| inside[v]).collect();
        let mut local_vertex = vec![None; host.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            local_vertex[v] = Some(i);
        }
        let mut edges = Vec::new();
        let mut local_edges = Vec::new();
        for (e, &(a, b)) in host.edges().iter().enumerate() {
            if let (Some(x), Some(y)) = (local_vertex[a], local_vertex[b]) {
                edges.push(e);
                local_edges.push((x, y));
            }
        }
        let boundary: Vec<usize> = vertices
            .iter()
            .enumerate()
            .filter(|&(_, &v)| host.incident(v).iter().any(|&(_, w)| !inside[w]))
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            graph: Graph::new(vertices.len(), local_edges, boundary)?,
            vertices,
            edges,
            local_vertex,
        })
    }

    pub fn local_vertex(&self, v: VertexId) -> Option<usize> {
        self.local_vertex[v]
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.local_vertex[v].is_some()
    }

    /// Host ids of the boundary vertices.
    pub fn boundary_host(&self) -> Vec<VertexId> {
        self.graph
            .boundary()
            .iter()
            .map(|&i| self.vertices[i])
            .collect()
    }

    /// Boundary partition induced by the open exterior edges of `outside`
    /// (a host configuration; bits of edges inside the box are ignored).
    pub fn exterior_partition(
        &self,
        host: &Graph,
        outside: &Configuration,
    ) -> Result<BoundaryPartition> {
        check_len(host.edge_count(), outside.len())?;
        let mut uf = UnionFind::new(host.vertex_count());
        for (e, &(a, b)) in host.edges().iter().enumerate() {
            let interior = self.contains_vertex(a) && self.contains_vertex(b);
            if !interior && outside.get(e) {
                uf.union(a, b);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for &i in self.graph.boundary() {
            groups.entry(uf.find(self.vertices[i])).or_default().push(i);
        }
        BoundaryPartition::from_blocks(&self.graph, groups.into_values().collect())
    }
}

/// Λ ⊆ Δ ⊆ Σ inside a host graph, with exterior configurations ξ (outside Σ) and τ
/// (outside Δ), both given as full host configurations.
#[derive(Clone, Debug)]
pub struct NestedBoxes {
    pub host: Graph,
    pub lambda: InducedBox,
    pub delta: InducedBox,
    pub sigma: InducedBox,
    pub xi: Configuration,
    pub tau: Configuration,
}

impl NestedBoxes {
    pub fn new(
        host: Graph,
        lambda: &[VertexId],
        delta: &[VertexId],
        sigma: &[VertexId],
        xi: Configuration,
        tau: Configuration,
    ) -> Result<Self> {
        check_len(host.edge_count(), xi.len())?;
        check_len(host.edge_count(), tau.len())?;
        if lambda.is_empty() {
            return Err(Error::Nesting("Λ is empty".into()));
        }
        let l = InducedBox::new(&host, lambda)?;
        let d = InducedBox::new(&host, delta)?;
        let s = InducedBox::new(&host, sigma)?;
        if let Some(&v) = l.vertices.iter().find(|&&v| !d.contains_vertex(v)) {
            return Err(Error::Nesting(format!("vertex {v} of Λ is outside Δ")));
        }
        if let Some(&v) = d.vertices.iter().find(|&&v| !s.contains_vertex(v)) {
            return Err(Error::Nesting(format!("vertex {v} of Δ is outside Σ")));
        }
        Ok(Self {
            host,
            lambda: l,
            delta: d,
            sigma: s,
            xi,
            tau,
        })
    }

    /// φ^ξ_Σ on the local edges of Σ.
    pub fn sigma_measure(&self, params: FkParams) -> Result<ExactMeasure> {
        let alpha = self.sigma.exterior_partition(&self.host, &self.xi)?;
        exact_fk(&self.sigma.graph, &alpha, params)
    }

    /// φ^τ_Δ on the local edges of Δ.
    pub fn delta_measure(&self, params: FkParams) -> Result<ExactMeasure> {
        let alpha = self.delta.exterior_partition(&self.host, &self.tau)?;
        exact_fk(&self.delta.graph, &alpha, params)
    }
}

/// Event depending only on a few host edges, given by its truth table
/// (bit i of the index is the state of `edges[i]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderEvent {
    edges: Vec<EdgeId>,
    truth: Vec<bool>,
}

impl CylinderEvent {
    pub fn new(edges: Vec<EdgeId>, truth: Vec<bool>) -> Result<Self> {
        if edges.len() > 16 {
            return Err(Error::Size(
                "cylinder events are limited to 16 edges".into(),
            ));
        }
        check_len(1 << edges.len(), truth.len())?;
        Ok(Self { edges, truth })
    }

    pub fn from_fn(edges: Vec<EdgeId>, f: impl Fn(u64) -> bool) -> Result<Self> {
        let truth = (0..1u64 << edges.len()).map(f).collect();
        Self::new(edges, truth)
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    /// Probability under a measure on the local edges of `boxed`.
    fn probability(&self, boxed: &InducedBox, m: &ExactMeasure) -> Result<f64> {
        let positions: Vec<usize> = self
            .edges
            .iter()
            .map(|&e| {
                boxed
                    .edges
                    .binary_search(&e)
                    .map_err(|_| Error::Nesting(format!("event edge {e} lies outside the box")))
            })
            .collect::<Result<_>>()?;
        Ok(m.probability(|i| {
            let key = positions.iter().enumerate().fold(0usize, |acc, (k, &pos)| {
                acc | ((i >> pos & 1) as usize) << k
            });
            self.truth[key]
        }))
    }
}

/// Exact |φ^ξ_Σ(A) − φ^τ_Δ(A)| and P_max(∂Λ ↔ ∂Δ inside Σ).
pub fn disagreement_check(
    nb: &NestedBoxes,
    params: FkParams,
    event: &CylinderEvent,
) -> Result<(f64, f64)> {
    for &e in event.edges() {
        if nb.lambda.edges.binary_search(&e).is_err() {
            return Err(Error::Nesting(format!(
                "event edge {e} is not an edge of Λ"
            )));
        }
    }
    let a_sigma = event.probability(&nb.sigma, &nb.sigma_measure(params)?)?;
    let a_delta = event.probability(&nb.delta, &nb.delta_measure(params)?)?;
    let lhs = (a_sigma - a_delta).abs();
    Ok((lhs, connection_bound(nb, params)?))
}

/// Law of the edges of Λ (bit k is `nb.lambda.edges[k]`) under a measure on `boxed`.
fn lambda_marginal(nb: &NestedBoxes, boxed: &InducedBox, m: &ExactMeasure) -> Result<Vec<f64>> {
    let positions: Vec<usize> = nb
        .lambda
        .edges
        .iter()
        .map(|e| {
            boxed
                .edges
                .binary_search(e)
                .expect("Λ is nested in the box")
        })
        .collect();
    let mut law = vec![0.0; 1 << positions.len()];
    for (i, w) in m.weights().iter().enumerate() {
        let key = positions
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &pos)| acc | (i >> pos & 1) << k);
        law[key] += w;
    }
    Ok(law)
}

/// Supremum of |φ^ξ_Σ(A) − φ^τ_Δ(A)| over every event A on the edges of Λ,
/// together with the bound of [`connection_bound`].
pub fn disagreement_sup(nb: &NestedBoxes, params: FkParams) -> Result<(f64, f64)> {
    if nb.lambda.edges.len() > 16 {
        return Err(Error::Size("Λ has more than 16 edges".into()));
    }
    let a = lambda_marginal(nb, &nb.sigma, &nb.sigma_measure(params)?)?;
    let b = lambda_marginal(nb, &nb.delta, &nb.delta_measure(params)?)?;
    let tv = 0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    Ok((tv, connection_bound(nb, params)?))
}

/// P_max(∂Λ ↔ ∂Δ) using the edges of Σ.
pub fn connection_bound(nb: &NestedBoxes, params: FkParams) -> Result<f64> {
    let inner = nb.lambda.boundary_host();
    let outer = nb.delta.boundary_host();
    if inner.iter().any(|v| outer.contains(v)) {
        return Ok(1.0);
    }
    let local = |vs: &[VertexId]| -> Vec<usize> {
        vs.iter()
            .map(|&v| nb.sigma.local_vertex(v).expect("nested"))
            .collect()
    };
    let probs = vec![params.max(); nb.sigma.graph.edge_count()];
    reliability::connection_probability(&nb.sigma.graph, &local(&inner), &local(&outer), &probs)
}

/// One draw of the exploration coupling; configurations are indexed by the local
/// edges of Σ (ω₂ is closed outside Δ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingSample {
    pub omega1: Configuration,
    pub omega2: Configuration,
    pub omega3: Configuration,
    /// The explored cluster of ∂Δ never met Λ.
    pub separated: bool,
    /// Host ids of the closed edges bounding the explored cluster.
    pub cutset: Vec<EdgeId>,
    /// Host ids of the edges of Δ left unexplored.
    pub unexplored: Vec<EdgeId>,
}

/// Conditional open probabilities of an exact table, memoised by revealed set.
struct Conditionals {
    table: ExactMeasure,
    memo: HashMap<(u64, u64, usize), f64>,
}

impl Conditionals {
    fn new(table: ExactMeasure) -> Self {
        Self {
            table,
            memo: HashMap::new(),
        }
    }

    fn open_given(&mut self, mask: u64, values: u64, f: usize) -> f64 {
        let table = &self.table;
        *self.memo.entry((mask, values, f)).or_insert_with(|| {
            let (mut all, mut open) = (0.0, 0.0);
            for (i, &w) in table.weights().iter().enumerate() {
                if (i as u64) & mask == values {
                    all += w;
                    if i >> f & 1 == 1 {
                        open += w;
                    }
                }
            }
            if all > 0.0 {
                open / all
            } else {
                0.0
            }
        })
    }
}

/// Sampler for the exploration coupling of φ^ξ_Σ, φ^τ_Δ and the product measure
/// with parameter max(p, p').
///
/// Edges of Σ outside Δ are revealed first in id order. The cluster of ∂Δ is
/// then explored inside Δ, always revealing the first unrevealed edge of Δ with
/// an endpoint in the cluster. Each revealed edge uses one uniform for all three
/// configurations. The unexplored part of Δ is finally drawn from its free FK
/// measure, identically for ω₁ and ω₂.
pub struct ExplorationCoupling {
    nb: NestedBoxes,
    params: FkParams,
    rng: CounterRng,
    phi1: Conditionals,
    phi2: Conditionals,
    /// Σ position of each Δ edge.
    delta_pos: Vec<usize>,
    /// Δ position of each Σ edge.
    in_delta: Vec<Option<usize>>,
    free_tables: HashMap<u64, Conditionals>,
}

impl ExplorationCoupling {
    pub fn new(nb: NestedBoxes, params: FkParams, seed: u64) -> Result<Self> {
        let m = nb.sigma.edges.len();
        if m > ENUMERATION_CAP.min(63) {
            return Err(Error::EnumerationCap {
                what: "coupling box edges",
                needed: m,
                cap: ENUMERATION_CAP,
            });
        }
        let phi1 = Conditionals::new(nb.sigma_measure(params)?);
        let phi2 = Conditionals::new(nb.delta_measure(params)?);
        let delta_pos: Vec<usize> = nb
            .delta
            .edges
            .iter()
            .map(|e| nb.sigma.edges.binary_search(e).expect("Δ edges lie in Σ"))
            .collect();
        let mut in_delta = vec![None; m];
        for (j, &pos) in delta_pos.iter().enumerate() {
            in_delta[pos] = Some(j);
        }
        Ok(Self {
            nb,
            params,
            rng: CounterRng::new(seed),
            phi1,
            phi2,
            delta_pos,
            in_delta,
            free_tables: HashMap::new(),
        })
    }

    pub fn boxes(&self) -> &NestedBoxes {
        &self.nb
    }

    /// Draw number `index`; draws are independent across indices and reproducible.
    pub fn sample(&mut self, index: u64) -> Result<CouplingSample> {
        let sigma = &self.nb.sigma;
        let m = sigma.edges.len();
        let top = self.params.max();
        let mut w1 = Configuration::closed(m);
        let mut w2 = Configuration::closed(m);
        let mut w3 = Configuration::closed(m);
        let (mut mask1, mut vals1) = (0u64, 0u64);
        let (mut mask2, mut vals2) = (0u64, 0u64);
        let mut revealed = vec![false; m];

        for f in (0..m).filter(|&f| self.in_delta[f].is_none()) {
            let u = self.rng.uniform(index, f as u64);
            let c1 = self.phi1.open_given(mask1, vals1, f);
            w3.set(f, u < top);
            w1.set(f, u < c1);
            mask1 |= 1 << f;
            vals1 |= ((u < c1) as u64) << f;
            revealed[f] = true;
        }

        let g = &sigma.graph;
        let mut in_cluster = vec![false; g.vertex_count()];
        for &h in &self.nb.delta.boundary_host() {
            in_cluster[sigma.local_vertex(h).expect("nested")] = true;
        }
        loop {
            let next = self.delta_pos.iter().copied().find(|&f| {
                let (a, b) = g.endpoints(f);
                !revealed[f] && (in_cluster[a] || in_cluster[b])
            });
            let Some(f) = next else { break };
            let j = self.in_delta[f].expect("Δ edge");
            let u = self.rng.uniform(index, f as u64);
            let c1 = self.phi1.open_given(mask1, vals1, f);
            let c2 = self.phi2.open_given(mask2, vals2, j);
            let (o1, o2, o3) = (u < c1, u < c2, u < top);
            w1.set(f, o1);
            w2.set(f, o2);
            w3.set(f, o3);
            mask1 |= 1 << f;
            vals1 |= (o1 as u64) << f;
            mask2 |= 1 << j;
            vals2 |= (o2 as u64) << j;
            revealed[f] = true;
            if o3 {
                let (a, b) = g.endpoints(f);
                in_cluster[a] = true;
                in_cluster[b] = true;
            }
        }

        let unexplored: Vec<usize> = self
            .delta_pos
            .iter()
            .copied()
            .filter(|&f| !revealed[f])
            .collect();
        if !unexplored.is_empty() {
            let key = unexplored.iter().fold(0u64, |acc, &f| acc | 1 << f);
            if !self.free_tables.contains_key(&key) {
                let local: Vec<(usize, usize)> =
                    unexplored.iter().map(|&f| g.endpoints(f)).collect();
                let sub = Graph::new(g.vertex_count(), local, [])?;
                let table = exact_fk(&sub, &BoundaryPartition::free(&sub), self.params)?;
                self.free_tables.insert(key, Conditionals::new(table));
            }
            let free = self.free_tables.get_mut(&key).expect("inserted above");
            let (mut mask, mut vals) = (0u64, 0u64);
            for (k, &f) in unexplored.iter().enumerate() {
                let u = self.rng.uniform(index, f as u64);
                let c = free.open_given(mask, vals, k);
                let open = u < c;
                w1.set(f, open);
                w2.set(f, open);
                w3.set(f, u < top);
                mask |= 1 << k;
                vals |= (open as u64) << k;
            }
        }

        for w in [&w1, &w2] {
            if let Some(f) = (0..m).find(|&f| w.get(f) && !w3.get(f)) {
                return Err(Error::OrderingViolation {
                    step: index,
                    edge: sigma.edges[f],
                });
            }
        }

        let separated = !self
            .nb
            .lambda
            .vertices
            .iter()
            .any(|&h| in_cluster[sigma.local_vertex(h).expect("nested")]);
        let cutset = self
            .delta_pos
            .iter()
            .copied()
            .filter(|&f| {
                let (a, b) = g.endpoints(f);
                revealed[f] && !w3.get(f) && in_cluster[a] != in_cluster[b]
            })
            .map(|f| sigma.edges[f])
            .collect();
        Ok(CouplingSample {
            omega1: w1,
            omega2: w2,
            omega3: w3,
            separated,
            cutset,
            unexplored: unexplored.iter().map(|&f| sigma.edges[f]).collect(),
        })
    }
}
