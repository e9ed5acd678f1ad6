//! Exact FK and product measures by enumeration, conditional probabilities,
//! distances and Strassen domination.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::flow::FlowNetwork;
use crate::graph::{
    contract, BoundaryPartition, Configuration, EdgeId, Graph, PathFinder, UnionFind,
};

/// Largest edge count enumerated by default.
pub const ENUMERATION_CAP: usize = 20;
/// Largest edge count accepted by the domination solver.
pub const STRASSEN_CAP: usize = 12;
/// A flow short of the total mass by at most this much still certifies domination.
pub const FLOW_TOLERANCE: f64 = 1e-9;
/// Shortfalls above this (but within tolerance) are flagged as borderline.
const EXACT_SLACK: f64 = 1e-12;

/// Edge weight `p` and cluster weight `q`, with the derived `p'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FkParams {
    p: f64,
    q: f64,
    p_prime: f64,
}

impl FkParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let p_prime = derive_p_prime(p, q)?;
        Ok(Self { p, q, p_prime })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }

    pub fn min(&self) -> f64 {
        self.p.min(self.p_prime)
    }

    pub fn max(&self) -> f64 {
        self.p.max(self.p_prime)
    }

    /// |p' - p|
    pub fn gap(&self) -> f64 {
        (self.p_prime - self.p).abs()
    }

    /// Conditional probability that an edge is open given the rest:
    /// `p` when its endpoints are already connected, `p'` otherwise.
    #[inline]
    pub fn threshold(&self, connected: bool) -> f64 {
        if connected {
            self.p
        } else {
            self.p_prime
        }
    }
}

/// p / (p + q(1-p)).
pub fn derive_p_prime(p: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "q must be positive and finite, got {q}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(p / (p + q * (1.0 - p)))
}

pub(crate) fn check_probability(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{what} must lie in [0, 1], got {x}"
        )))
    }
}

/// Probability table over all configurations, indexed by their edge bits.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMeasure {
    edge_count: usize,
    weights: Vec<f64>,
    log_partition: f64,
    fingerprint: u64,
}

impl ExactMeasure {
    /// Wraps an explicit table; weights must be nonnegative and sum to 1 within 1e-9.
    pub fn from_weights(edge_count: usize, weights: Vec<f64>, fingerprint: u64) -> Result<Self> {
        let expected = 1usize
            .checked_shl(edge_count as u32)
            .filter(|_| edge_count < usize::BITS as usize)
            .ok_or_else(|| Error::Size(format!("2^{edge_count} configurations")))?;
        check_len(expected, weights.len())?;
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::Parameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            edge_count,
            weights,
            log_partition: 0.0,
            fingerprint,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, omega: &Configuration) -> f64 {
        self.weights[omega.to_index() as usize]
    }

    /// log Z of the unnormalised weights (0 for tables given explicitly).
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }

    /// Identifies the graph the table lives on.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Probability of the set of configuration indices accepted by `event`.
    pub fn probability(&self, mut event: impl FnMut(u64) -> bool) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|&(i, _)| event(i as u64))
            .map(|(_, w)| w)
            .sum()
    }

    fn same_graph(&self, other: &ExactMeasure) -> Result<()> {
        if self.edge_count != other.edge_count || self.fingerprint != other.fingerprint {
            Err(Error::GraphMismatch)
        } else {
            Ok(())
        }
    }
}

fn table_len(edges: usize, cap: usize, what: &'static str) -> Result<usize> {
    if edges > cap {
        return Err(Error::EnumerationCap {
            what,
            needed: edges,
            cap,
        });
    }
    Ok(1usize << edges)
}

/// FK measure with the default enumeration cap.
pub fn exact_fk(g: &Graph, alpha: &BoundaryPartition, params: FkParams) -> Result<ExactMeasure> {
    exact_fk_capped(g, alpha, params, ENUMERATION_CAP)
}

/// Weight ∝ p^open (1-p)^closed q^k(ω, α), normalised in one pass.
pub fn exact_fk_capped(
    g: &Graph,
    alpha: &BoundaryPartition,
    params: FkParams,
    cap: usize,
) -> Result<ExactMeasure> {
    let len = table_len(g.edge_count(), cap, "exact FK table edges")?;
    let wired = contract(g, alpha)?;
    let m = g.edge_count();
    let (lp, lq, lq1) = (params.p.ln(), params.q.ln(), (1.0 - params.p).ln());
    let log_weight = |uf: &mut UnionFind, idx: usize| -> f64 {
        uf.reset();
        let open = (idx as u64).count_ones() as usize;
        let mut bits = idx;
        while bits != 0 {
            let e = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let (u, v) = wired.endpoints(e);
            uf.union(u, v);
        }
        let k = uf.set_count() as f64;
        let mut lw = k * lq;
        if open > 0 {
            lw += open as f64 * lp;
        }
        if open < m {
            lw += (m - open) as f64 * lq1;
        }
        lw
    };
    let mut logs = vec![0.0; len];
    logs.par_chunks_mut(4096).enumerate().for_each_init(
        || UnionFind::new(wired.vertex_count()),
        |uf, (chunk, out)| {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = log_weight(uf, chunk * 4096 + i);
            }
        },
    );
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logs.par_iter().map(|&l| (l - top).exp()).collect();
    let sum: f64 = weights.iter().sum();
    weights.par_iter_mut().for_each(|w| *w /= sum);
    Ok(ExactMeasure {
        edge_count: m,
        weights,
        log_partition: top + sum.ln(),
        fingerprint: g.fingerprint(),
    })
}

/// Independent edges, edge `e` open with probability `probs[e]`.
pub fn product_measure(g: &Graph, probs: &[f64]) -> Result<ExactMeasure> {
    check_len(g.edge_count(), probs.len())?;
    for &x in probs {
        check_probability(x, "edge probability")?;
    }
    let len = table_len(probs.len(), ENUMERATION_CAP, "product table edges")?;
    let mut weights = Vec::with_capacity(len);
    weights.push(1.0);
    for &x in probs {
        // bit e is the most significant bit so far: closed half, then open half
        let closed: Vec<f64> = weights.iter().map(|w| w * (1.0 - x)).collect();
        let open: Vec<f64> = weights.iter().map(|w| w * x).collect();
        weights = closed;
        weights.extend(open);
    }
    Ok(ExactMeasure {
        edge_count: probs.len(),
        weights,
        log_partition: 0.0,
        fingerprint: g.fingerprint(),
    })
}

/// K^α_e on the wired graph: endpoints of `e` joined by open edges other than `e`.
pub(crate) fn k_event_wired(
    wired: &Graph,
    omega: &Configuration,
    e: EdgeId,
    finder: &mut PathFinder,
) -> bool {
    let (u, v) = wired.endpoints(e);
    u == v || finder.connected(wired, u, v, |f| f != e && omega.get(f))
}

/// Conditional probability that `e` is open given `rest`, the states of the other
/// edges listed in increasing edge order.
pub fn conditional_open_prob(
    g: &Graph,
    alpha: &BoundaryPartition,
    params: FkParams,
    e: EdgeId,
    rest: &Configuration,
) -> Result<f64> {
    if e >= g.edge_count() {
        return Err(Error::InvalidGraph(format!("edge {e} out of range")));
    }
    check_len(g.edge_count() - 1, rest.len())?;
    let mut omega = Configuration::closed(g.edge_count());
    for f in 0..rest.len() {
        let target = if f < e { f } else { f + 1 };
        omega.set(target, rest.get(f));
    }
    let wired = contract(g, alpha)?;
    let k = k_event_wired(&wired, &omega, e, &mut PathFinder::new());
    Ok(params.threshold(k))
}

/// Probability that edge `e` is open.
pub fn edge_marginal(m: &ExactMeasure, e: EdgeId) -> Result<f64> {
    if e >= m.edge_count {
        return Err(Error::InvalidGraph(format!(
            "edge {e} out of range for {} edges",
            m.edge_count
        )));
    }
    Ok(m.probability(|i| i >> e & 1 == 1))
}

/// Half the L1 distance between two tables on the same graph.
pub fn tv_distance(m1: &ExactMeasure, m2: &ExactMeasure) -> Result<f64> {
    m1.same_graph(m2)?;
    let l1: f64 = m1
        .weights
        .iter()
        .zip(&m2.weights)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

/// Outcome of a domination test.
#[derive(Clone, Debug, PartialEq)]
pub struct Domination {
    pub dominates: bool,
    /// Max-flow value; equals the total mass when a monotone coupling exists.
    pub flow: f64,
    pub total: f64,
    /// Certified only thanks to the flow tolerance.
    pub borderline: bool,
    /// Mass moved from lower configuration to upper configuration (indices), when certified.
    pub coupling: Vec<(u64, u64, f64)>,
}

/// Decides `lower ⪯ upper` by max-flow on the order network.
pub fn strassen_dominates(lower: &ExactMeasure, upper: &ExactMeasure) -> Result<Domination> {
    lower.same_graph(upper)?;
    let m = lower.edge_count;
    if m > STRASSEN_CAP {
        return Err(Error::EnumerationCap {
            what: "domination edges",
            needed: m,
            cap: STRASSEN_CAP,
        });
    }
    let n = 1usize << m;
    let full = (n - 1) as u64;
    let (source, sink) = (0, 1);
    let left = |w: usize| 2 + w;
    let right = |w: usize| 2 + n + w;
    let mut net = FlowNetwork::new(2 + 2 * n);
    let total: f64 = lower.weights.iter().sum();
    for w in 0..n {
        if lower.weights[w] > 0.0 {
            net.add_arc(source, left(w), lower.weights[w]);
        }
        if upper.weights[w] > 0.0 {
            net.add_arc(right(w), sink, upper.weights[w]);
        }
    }
    let mut middle = Vec::new();
    for w in 0..n {
        if lower.weights[w] <= 0.0 {
            continue;
        }
        let comp = full & !(w as u64);
        let mut sub = comp;
        loop {
            let sup = (w as u64 | sub) as usize;
            if upper.weights[sup] > 0.0 {
                let id = net.add_arc(left(w), right(sup), f64::INFINITY);
                middle.push((id, w as u64, sup as u64));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & comp;
        }
    }
    let flow = net.max_flow(source, sink);
    let shortfall = total - flow;
    let dominates = shortfall <= FLOW_TOLERANCE;
    let coupling = if dominates {
        middle
            .iter()
            .filter_map(|&(id, a, b)| {
                let f = net.flow_on(id);
                (f > 0.0).then_some((a, b, f))
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Domination {
        dominates,
        flow,
        total,
        borderline: dominates && shortfall > EXACT_SLACK,
        coupling,
    })
}
