//! Enhancement plans built from devices, and the enhancement values ε̂, ε̃.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dynamics::{EnhancementPlan, PlanKind};
use crate::error::{Error, Result};
use crate::graph::{
    contract_with_map, BoundaryPartition, EdgeId, Graph, LatticeBox, UnionFind, VertexId,
};
use crate::measure::FkParams;
use crate::reliability;
use crate::rng::CounterRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DeviceKind {
    /// All edges at one vertex.
    Star,
    /// A cycle through the enhanced edge.
    Cycle,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Star => "star",
            DeviceKind::Cycle => "cycle",
        }
    }

    /// Plan direction a device of this kind supports.
    pub fn plan_kind(self) -> PlanKind {
        match self {
            DeviceKind::Star => PlanKind::Below,
            DeviceKind::Cycle => PlanKind::Above,
        }
    }
}

impl std::str::FromStr for DeviceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(DeviceKind::Star),
            "cycle" | "square" => Ok(DeviceKind::Cycle),
            other => Err(Error::Parse(format!("unknown device kind {other:?}"))),
        }
    }
}

/// Edge set hosting one enhanced edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Device {
    pub enhanced: EdgeId,
    /// Sorted; contains `enhanced`.
    pub edges: Vec<EdgeId>,
}

impl Device {
    pub fn new(enhanced: EdgeId, mut edges: Vec<EdgeId>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self { enhanced, edges }
    }
}

/// Enhancement plan together with the devices that justify it.
#[derive(Clone, Debug, PartialEq)]
pub struct DevicePlan {
    pub plan: EnhancementPlan,
    pub devices: Vec<Device>,
    pub kind: DeviceKind,
    /// Δ, the largest star size, for star plans.
    pub max_degree: Option<usize>,
    /// L, the cycle length, for cycle plans.
    pub cycle_length: Option<usize>,
    /// Set when no device fits.
    pub warning: Option<String>,
}

impl DevicePlan {
    /// Device whose enhanced edge is `e`.
    pub fn device_of(&self, e: EdgeId) -> Option<&Device> {
        self.devices.iter().find(|d| d.enhanced == e)
    }
}

fn empty_warning(devices: &[Device]) -> Option<String> {
    devices
        .is_empty()
        .then(|| "box too small to host any device; plan is empty".to_string())
}

/// Star devices at the even interior vertices of a square box; the enhanced edge is
/// the +x edge of the centre.
pub fn star_plan_z2(boxed: &Graph) -> Result<DevicePlan> {
    let lb = LatticeBox::recognize_square(boxed)?;
    let n = lb.side();
    let mut devices = Vec::new();
    for v in 0..boxed.vertex_count() {
        let c = lb.coords(v);
        let (x, y) = (c[0], c[1]);
        if (x + y) % 2 != 0 || x < 1 || y < 1 || x + 2 > n || y + 2 > n {
            continue;
        }
        let edges: Vec<EdgeId> = boxed.incident(v).iter().map(|&(e, _)| e).collect();
        let east = lb
            .edge_towards(v, 0)
            .expect("interior vertex has an east edge");
        let (a, b) = boxed.endpoints(east);
        if boxed.is_boundary(a) && boxed.is_boundary(b) {
            continue;
        }
        devices.push(Device::new(east, edges));
    }
    let enhanced = devices.iter().map(|d| d.enhanced).collect();
    // valid under the wired partition means valid under every partition
    let plan = EnhancementPlan::new(
        boxed,
        &BoundaryPartition::wired(boxed),
        PlanKind::Below,
        enhanced,
    )?;
    let warning = empty_warning(&devices);
    Ok(DevicePlan {
        plan,
        devices,
        kind: DeviceKind::Star,
        max_degree: Some(4),
        cycle_length: None,
        warning,
    })
}

/// Unit squares with even lower-left corner; the enhanced edge is the bottom edge.
pub fn square_plan_z2(boxed: &Graph) -> Result<DevicePlan> {
    let lb = LatticeBox::recognize_square(boxed)?;
    let n = lb.side();
    let mut devices = Vec::new();
    for v in 0..boxed.vertex_count() {
        let c = lb.coords(v);
        let (x, y) = (c[0], c[1]);
        if (x + y) % 2 != 0 || x + 1 >= n || y + 1 >= n {
            continue;
        }
        let bottom = lb
            .edge_towards(v, 0)
            .expect("square corner has an east edge");
        let left = lb
            .edge_towards(v, 1)
            .expect("square corner has a north edge");
        let right = lb
            .edge_towards(lb.vertex(&[x + 1, y]), 1)
            .expect("square has a right side");
        let top = lb
            .edge_towards(lb.vertex(&[x, y + 1]), 0)
            .expect("square has a top side");
        devices.push(Device::new(bottom, vec![bottom, left, right, top]));
    }
    let enhanced = devices.iter().map(|d| d.enhanced).collect();
    // valid under the free partition means valid under every partition
    let plan = EnhancementPlan::new(
        boxed,
        &BoundaryPartition::free(boxed),
        PlanKind::Above,
        enhanced,
    )?;
    let warning = empty_warning(&devices);
    Ok(DevicePlan {
        plan,
        devices,
        kind: DeviceKind::Cycle,
        max_degree: None,
        cycle_length: Some(4),
        warning,
    })
}

/// Multi-source vertex distances over all edges.
fn vertex_distances(g: &Graph, sources: impl IntoIterator<Item = VertexId>) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &(_, w) in g.incident(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Distance from a set of edges to every edge: 0 on the set, otherwise one more than
/// the vertex distance from the set's endpoints to the nearer endpoint.
fn edge_distances(g: &Graph, from: &[EdgeId]) -> Vec<usize> {
    let dist = vertex_distances(
        g,
        from.iter().flat_map(|&e| {
            let (a, b) = g.endpoints(e);
            [a, b]
        }),
    );
    let mut out: Vec<usize> = g
        .edges()
        .iter()
        .map(|&(a, b)| dist[a].min(dist[b]).saturating_add(1))
        .collect();
    for &e in from {
        out[e] = 0;
    }
    out
}

/// Greedy packing outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Packing {
    pub plan: DevicePlan,
    /// Largest distance from an edge to the nearest selected enhanced edge
    /// (`None` when nothing was selected or some edge is unreachable).
    pub covering_radius: Option<usize>,
}

/// Selects pairwise-disjoint candidate devices in balls of radius K, 2K, ... around
/// `origin`, in candidate order within each ball.
pub fn greedy_packing(
    g: &Graph,
    origin: EdgeId,
    radius: usize,
    kind: DeviceKind,
    candidates: &[Device],
) -> Result<Packing> {
    if radius == 0 {
        return Err(Error::Parameter("packing radius K must be positive".into()));
    }
    if g.edge_count() > 0 && origin >= g.edge_count() {
        return Err(Error::InvalidCandidate(format!(
            "origin edge {origin} out of range"
        )));
    }
    for (i, d) in candidates.iter().enumerate() {
        if let Some(&e) = d.edges.iter().find(|&&e| e >= g.edge_count()) {
            return Err(Error::InvalidCandidate(format!(
                "candidate {i} lists unknown edge {e}"
            )));
        }
        if d.edges.binary_search(&d.enhanced).is_err() {
            return Err(Error::InvalidCandidate(format!(
                "candidate {i} does not contain its enhanced edge {}",
                d.enhanced
            )));
        }
    }
    let reach: Vec<usize> = if g.edge_count() == 0 {
        Vec::new()
    } else {
        let from_origin = edge_distances(g, &[origin]);
        candidates
            .iter()
            .map(|d| d.edges.iter().map(|&e| from_origin[e]).max().unwrap_or(0))
            .collect()
    };
    let mut used = vec![false; g.edge_count()];
    let mut considered = vec![false; candidates.len()];
    let mut selected: Vec<Device> = Vec::new();
    let finite_max = reach.iter().copied().filter(|&r| r != usize::MAX).max();
    let mut ball = radius;
    while let Some(max) = finite_max {
        for (i, d) in candidates.iter().enumerate() {
            if considered[i] || reach[i] > ball {
                continue;
            }
            considered[i] = true;
            if d.edges.iter().all(|&e| !used[e]) {
                d.edges.iter().for_each(|&e| used[e] = true);
                selected.push(d.clone());
            }
        }
        if ball >= max {
            break;
        }
        ball += radius;
    }
    let enhanced: Vec<EdgeId> = selected.iter().map(|d| d.enhanced).collect();
    let partition = match kind {
        DeviceKind::Star => BoundaryPartition::wired(g),
        DeviceKind::Cycle => BoundaryPartition::free(g),
    };
    let plan = EnhancementPlan::new(g, &partition, kind.plan_kind(), enhanced.clone())?;
    let covering_radius = if enhanced.is_empty() {
        None
    } else {
        let d = edge_distances(g, &enhanced);
        d.iter().copied().max().filter(|&r| r != usize::MAX)
    };
    let sizes = selected.iter().map(|d| d.edges.len()).max();
    let warning = empty_warning(&selected);
    Ok(Packing {
        plan: DevicePlan {
            plan,
            devices: selected,
            kind,
            max_degree: (kind == DeviceKind::Star).then_some(sizes).flatten(),
            cycle_length: (kind == DeviceKind::Cycle).then_some(sizes).flatten(),
            warning,
        },
        covering_radius,
    })
}

/// Exact evaluation or Monte Carlo estimate of an enhancement value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsilonMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// Value with its standard error (zero for exact values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// The connectivity problem behind ε̂ or ε̃ for one enhanced edge, on G ∪ α.
struct EpsilonProblem {
    wired: Graph,
    probs: Vec<f64>,
    s: VertexId,
    t: VertexId,
}

fn epsilon_problem(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    e: EdgeId,
    expected: PlanKind,
    aux_prob: f64,
) -> Result<EpsilonProblem> {
    crate::error::check_len(g.edge_count(), plan.edge_count())?;
    if plan.kind() != expected {
        return Err(Error::Plan(format!(
            "plan kind is {}, expected {}",
            plan.kind().as_str(),
            expected.as_str()
        )));
    }
    if e >= plan.edge_count() || !plan.is_enhanced(e) {
        return Err(Error::Plan(format!("edge {e} is not enhanced")));
    }
    let (wired, _) = contract_with_map(g, alpha)?;
    let other_enhanced = if expected == PlanKind::Below {
        1.0
    } else {
        0.0
    };
    let probs = (0..g.edge_count())
        .map(|f| {
            if f == e {
                0.0
            } else if plan.is_enhanced(f) {
                other_enhanced
            } else {
                aux_prob
            }
        })
        .collect();
    let (s, t) = wired.endpoints(e);
    Ok(EpsilonProblem { wired, probs, s, t })
}

fn connection(problem: &EpsilonProblem, mode: EpsilonMode) -> Result<Estimate> {
    match mode {
        EpsilonMode::Exact => Ok(Estimate {
            value: reliability::two_terminal(&problem.wired, problem.s, problem.t, &problem.probs)?,
            std_error: 0.0,
        }),
        EpsilonMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Parameter(
                    "Monte Carlo mode needs samples > 0".into(),
                ));
            }
            let rng = CounterRng::new(seed);
            let mut uf = UnionFind::new(problem.wired.vertex_count());
            let mut hits = 0u64;
            for k in 0..samples {
                uf.reset();
                for (f, &(a, b)) in problem.wired.edges().iter().enumerate() {
                    if rng.uniform(k, f as u64) < problem.probs[f] {
                        uf.union(a, b);
                    }
                }
                if uf.same(problem.s, problem.t) {
                    hits += 1;
                }
            }
            let mean = hits as f64 / samples as f64;
            Ok(Estimate {
                value: mean,
                std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
            })
        }
    }
}

/// ε̂ₑ = |p' − p| · P(closed auxiliary cutset for e), auxiliary edges open with
/// probability max(p, p') and the other enhanced edges counted as open.
pub fn epsilon_hat(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    e: EdgeId,
    params: FkParams,
    mode: EpsilonMode,
) -> Result<Estimate> {
    let problem = epsilon_problem(g, alpha, plan, e, PlanKind::Below, params.max())?;
    let joined = connection(&problem, mode)?;
    Ok(Estimate {
        value: params.gap() * (1.0 - joined.value),
        std_error: params.gap() * joined.std_error,
    })
}

/// ε̃ₑ = |p' − p| · P(open auxiliary path for e), auxiliary edges open with
/// probability min(p, p') and the other enhanced edges counted as closed.
pub fn epsilon_tilde(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    e: EdgeId,
    params: FkParams,
    mode: EpsilonMode,
) -> Result<Estimate> {
    let problem = epsilon_problem(g, alpha, plan, e, PlanKind::Above, params.min())?;
    let joined = connection(&problem, mode)?;
    Ok(Estimate {
        value: params.gap() * joined.value,
        std_error: params.gap() * joined.std_error,
    })
}

/// Enhancement value of every enhanced edge, in plan order, matching the plan kind.
pub fn epsilon_table(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    params: FkParams,
    mode: EpsilonMode,
) -> Result<Vec<(EdgeId, Estimate)>> {
    plan.enhanced()
        .par_iter()
        .map(|&e| {
            let est = match plan.kind() {
                PlanKind::Below => epsilon_hat(g, alpha, plan, e, params, mode),
                PlanKind::Above => epsilon_tilde(g, alpha, plan, e, params, mode),
            }?;
            Ok((e, est))
        })
        .collect()
}

/// Device lower bounds: |p' − p|(1 − max)^(Δ−1) and |p' − p| min^(L−1).
pub fn epsilon_bounds(
    params: FkParams,
    max_degree: usize,
    cycle_length: usize,
) -> Result<(f64, f64)> {
    if max_degree < 2 || cycle_length < 2 {
        return Err(Error::Parameter("bounds need Δ >= 2 and L >= 2".into()));
    }
    let gap = params.gap();
    Ok((
        gap * (1.0 - params.max()).powi(max_degree as i32 - 1),
        gap * params.min().powi(cycle_length as i32 - 1),
    ))
}

/// Per-edge probabilities of the enhanced product measure bounding φ.
///
/// Returns `(probs, is_lower)`: `is_lower` is true when the product lies below φ.
/// Below plans give `min + ε` on enhanced edges when q < 1 and `max − ε` when q > 1;
/// above plans the reverse.
pub fn enhanced_product(
    plan: &EnhancementPlan,
    params: FkParams,
    eps: &[(EdgeId, Estimate)],
) -> (Vec<f64>, bool) {
    let below_phi = (plan.kind() == PlanKind::Below) == (params.q() < 1.0);
    let base = if below_phi {
        params.min()
    } else {
        params.max()
    };
    let mut probs = vec![base; plan.edge_count()];
    for &(e, est) in eps {
        probs[e] = if below_phi {
            base + est.value
        } else {
            base - est.value
        };
        probs[e] = probs[e].clamp(0.0, 1.0);
    }
    (probs, below_phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::lattice_box;

    #[test]
    fn star_counts() {
        let b3 = lattice_box(2, 3, false).unwrap();
        let plan = star_plan_z2(&b3).unwrap();
        assert_eq!(plan.devices.len(), 1);
        assert_eq!(plan.devices[0].edges.len(), 4);
        let b2 = lattice_box(2, 2, false).unwrap();
        let plan = star_plan_z2(&b2).unwrap();
        assert!(plan.devices.is_empty());
        assert!(plan.warning.is_some());
    }

    #[test]
    fn square_counts() {
        let b3 = lattice_box(2, 3, false).unwrap();
        assert_eq!(square_plan_z2(&b3).unwrap().devices.len(), 2);
        let b2 = lattice_box(2, 2, false).unwrap();
        assert_eq!(square_plan_z2(&b2).unwrap().devices.len(), 1);
    }

    #[test]
    fn non_box_rejected() {
        let tri = Graph::new(3, vec![(0, 1), (1, 2), (2, 0)], []).unwrap();
        assert!(matches!(star_plan_z2(&tri), Err(Error::Plan(_))));
    }

    #[test]
    fn triangle_epsilons() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (2, 0)], []).unwrap();
        let free = BoundaryPartition::free(&g);
        let params = FkParams::new(0.2, 0.5).unwrap();
        let below = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
        let above = EnhancementPlan::new(&g, &free, PlanKind::Above, vec![0]).unwrap();
        let hat = epsilon_hat(&g, &free, &below, 0, params, EpsilonMode::Exact).unwrap();
        let want = params.gap() * (1.0 - params.max().powi(2));
        assert!((hat.value - want).abs() < 1e-15);
        let tilde = epsilon_tilde(&g, &free, &above, 0, params, EpsilonMode::Exact).unwrap();
        assert!((tilde.value - params.gap() * params.min().powi(2)).abs() < 1e-15);
        assert!(epsilon_hat(&g, &free, &above, 0, params, EpsilonMode::Exact).is_err());
    }

    #[test]
    fn bridge_epsilon_is_gap() {
        let g = Graph::new(3, vec![(0, 1), (1, 2)], []).unwrap();
        let free = BoundaryPartition::free(&g);
        let params = FkParams::new(0.4, 0.3).unwrap();
        let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![1]).unwrap();
        let hat = epsilon_hat(&g, &free, &plan, 1, params, EpsilonMode::Exact).unwrap();
        assert_eq!(hat.value, params.gap());
    }

    #[test]
    fn bounds_example() {
        let params = FkParams::new(0.2, 0.5).unwrap();
        let (hat, tilde) = epsilon_bounds(params, 4, 4).unwrap();
        let gap = 1.0 / 3.0 - 0.2;
        assert!((hat - gap * (2.0f64 / 3.0).powi(3)).abs() < 1e-15);
        assert!((tilde - gap * 0.2f64.powi(3)).abs() < 1e-15);
        let unit = FkParams::new(0.3, 1.0).unwrap();
        assert_eq!(epsilon_bounds(unit, 4, 4).unwrap(), (0.0, 0.0));
        assert!(epsilon_bounds(params, 1, 4).is_err());
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        let g = lattice_box(2, 3, false).unwrap();
        let dp = star_plan_z2(&g).unwrap();
        let free = BoundaryPartition::free(&g);
        let params = FkParams::new(0.25, 0.5).unwrap();
        let e = dp.plan.enhanced()[0];
        let exact = epsilon_hat(&g, &free, &dp.plan, e, params, EpsilonMode::Exact).unwrap();
        let mc = epsilon_hat(
            &g,
            &free,
            &dp.plan,
            e,
            params,
            EpsilonMode::MonteCarlo {
                samples: 40_000,
                seed: 5,
            },
        )
        .unwrap();
        assert!((mc.value - exact.value).abs() < 4.0 * mc.std_error + 1e-12);
    }

    #[test]
    fn packing_basics() {
        let g = lattice_box(2, 3, false).unwrap();
        let empty = greedy_packing(&g, 0, 2, DeviceKind::Star, &[]).unwrap();
        assert!(empty.plan.devices.is_empty());
        assert_eq!(empty.covering_radius, None);
        let star = star_plan_z2(&g).unwrap();
        let one = greedy_packing(&g, 0, 2, DeviceKind::Star, &star.devices).unwrap();
        assert_eq!(one.plan.devices, star.devices);
        let bad = Device {
            enhanced: 0,
            edges: vec![1, 2],
        };
        assert!(matches!(
            greedy_packing(&g, 0, 2, DeviceKind::Star, &[bad]),
            Err(Error::InvalidCandidate(_))
        ));
    }
}
