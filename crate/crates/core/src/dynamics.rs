//! Heat-bath Glauber dynamics, the enhanced chain with auxiliary resampling,
//! the monotone triple (Y, X, Z) and exact one-step kernels.
//!
//! Every chain is the embedded discrete-time chain: step `t >= 1` picks edge
//! `below(t, 0, |E|)`, uses `uniform(t, 1)` for the chosen edge and
//! `uniform(t, 2 + i)` for the i-th auxiliary edge. The auxiliary slots are
//! addressed whether or not they are consumed, so a trajectory is a function
//! of the seed and the step count only.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::graph::{contract, BoundaryPartition, Configuration, EdgeId, Graph, PathFinder};
use crate::measure::{k_event_wired, FkParams};
use crate::rng::CounterRng;

/// Graph, boundary condition and parameters of one FK measure.
#[derive(Clone, Debug)]
pub struct FkModel {
    graph: Graph,
    partition: BoundaryPartition,
    wired: Graph,
    params: FkParams,
}

impl FkModel {
    pub fn new(graph: &Graph, partition: &BoundaryPartition, params: FkParams) -> Result<Self> {
        let wired = contract(graph, partition)?;
        Ok(Self {
            graph: graph.clone(),
            partition: partition.clone(),
            wired,
            params,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn partition(&self) -> &BoundaryPartition {
        &self.partition
    }

    /// G ∪ α.
    pub fn wired(&self) -> &Graph {
        &self.wired
    }

    pub fn params(&self) -> FkParams {
        self.params
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    fn check(&self, omega: &Configuration) -> Result<()> {
        check_len(self.edge_count(), omega.len())
    }

    /// Sets `e` open iff `u` is below its conditional open probability.
    pub fn heat_bath(&self, omega: &mut Configuration, e: EdgeId, u: f64, finder: &mut PathFinder) {
        let params = self.params;
        let open = if u < params.min() {
            true
        } else if u >= params.max() {
            false
        } else {
            u < params.threshold(k_event_wired(&self.wired, omega, e, finder))
        };
        omega.set(e, open);
    }

    /// Number of open clusters of G ∪ α.
    pub fn clusters(&self, omega: &Configuration) -> usize {
        crate::graph::open_cluster_count(&self.wired, omega)
    }

    fn cutset_closed(
        &self,
        plan: &EnhancementPlan,
        z: &Configuration,
        e: EdgeId,
        finder: &mut PathFinder,
    ) -> bool {
        let (a, b) = self.wired.endpoints(e);
        a != b
            && !finder.connected(&self.wired, a, b, |f| {
                f != e && (plan.is_enhanced[f] || z.get(f))
            })
    }

    fn aux_path_open(
        &self,
        plan: &EnhancementPlan,
        y: &Configuration,
        e: EdgeId,
        finder: &mut PathFinder,
    ) -> bool {
        let (a, b) = self.wired.endpoints(e);
        a == b || finder.connected(&self.wired, a, b, |f| !plan.is_enhanced[f] && y.get(f))
    }
}

/// K^α_e: the endpoints of `e` are joined in G ∪ α by open edges other than `e`.
pub fn k_event(
    g: &Graph,
    alpha: &BoundaryPartition,
    omega: &Configuration,
    e: EdgeId,
) -> Result<bool> {
    check_len(g.edge_count(), omega.len())?;
    if e >= g.edge_count() {
        return Err(Error::InvalidGraph(format!("edge {e} out of range")));
    }
    let wired = contract(g, alpha)?;
    Ok(k_event_wired(&wired, omega, e, &mut PathFinder::new()))
}

/// State of a single chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainState {
    pub config: Configuration,
    pub step: u64,
    pub rng: CounterRng,
}

impl ChainState {
    pub fn new(config: Configuration, seed: u64) -> Self {
        Self {
            config,
            step: 0,
            rng: CounterRng::new(seed),
        }
    }
}

/// One heat-bath update of edge `e` with uniform `u`; other edges are untouched.
pub fn heat_bath_step(state: &mut ChainState, model: &FkModel, e: EdgeId, u: f64) -> Result<()> {
    model.check(&state.config)?;
    if e >= model.edge_count() {
        return Err(Error::InvalidGraph(format!("edge {e} out of range")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Parameter(format!(
            "uniform must lie in [0, 1), got {u}"
        )));
    }
    model.heat_bath(&mut state.config, e, u, &mut PathFinder::new());
    Ok(())
}

/// Snapshots of a plain chain: step 0, then every `thin` steps up to `steps`.
pub struct ChainRun<'a> {
    model: &'a FkModel,
    state: ChainState,
    steps: u64,
    thin: u64,
    finder: PathFinder,
    started: bool,
}

impl<'a> ChainRun<'a> {
    /// Current state (after the last emitted snapshot).
    pub fn state(&self) -> &ChainState {
        &self.state
    }

    fn advance(&mut self) {
        let t = self.state.step + 1;
        let m = self.model.edge_count() as u64;
        if m > 0 {
            let e = self.state.rng.below(t, 0, m) as usize;
            let u = self.state.rng.uniform(t, 1);
            self.model
                .heat_bath(&mut self.state.config, e, u, &mut self.finder);
        }
        self.state.step = t;
    }
}

impl<'a> Iterator for ChainRun<'a> {
    type Item = ChainState;

    fn next(&mut self) -> Option<ChainState> {
        if !self.started {
            self.started = true;
            return Some(self.state.clone());
        }
        if self.state.step >= self.steps {
            return None;
        }
        let target = (self.state.step + self.thin).min(self.steps);
        while self.state.step < target {
            self.advance();
        }
        Some(self.state.clone())
    }
}

/// Continues a chain from `state` for `steps` more steps; the first snapshot is `state`.
pub fn resume_chain(
    model: &FkModel,
    state: ChainState,
    steps: u64,
    thin: u64,
) -> Result<ChainRun<'_>> {
    model.check(&state.config)?;
    if thin == 0 {
        return Err(Error::Parameter("thinning stride must be positive".into()));
    }
    Ok(ChainRun {
        model,
        steps: state.step.saturating_add(steps),
        state,
        thin,
        finder: PathFinder::new(),
        started: false,
    })
}

/// Runs the plain heat-bath chain from `init`.
pub fn run_chain(
    model: &FkModel,
    init: Configuration,
    steps: u64,
    seed: u64,
    thin: u64,
) -> Result<ChainRun<'_>> {
    model.check(&init)?;
    if thin == 0 {
        return Err(Error::Parameter("thinning stride must be positive".into()));
    }
    Ok(ChainRun {
        model,
        state: ChainState::new(init, seed),
        steps,
        thin,
        finder: PathFinder::new(),
        started: false,
    })
}

/// Direction of the enhancement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanKind {
    /// Enhanced edges each admit a cutset of auxiliary edges.
    Below,
    /// Enhanced edges each admit a path of auxiliary edges.
    Above,
}

impl PlanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::Below => "below",
            PlanKind::Above => "above",
        }
    }
}

impl std::str::FromStr for PlanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "below" => Ok(PlanKind::Below),
            "above" => Ok(PlanKind::Above),
            other => Err(Error::Parse(format!("unknown plan kind {other:?}"))),
        }
    }
}

/// Enhanced edges plus the fixed resampling order of the auxiliary edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnhancementPlan {
    kind: PlanKind,
    enhanced: Vec<EdgeId>,
    aux_order: Vec<EdgeId>,
    is_enhanced: Vec<bool>,
}

impl EnhancementPlan {
    /// Builds and structurally validates a plan for `g` under `alpha`.
    pub fn new(
        g: &Graph,
        alpha: &BoundaryPartition,
        kind: PlanKind,
        enhanced: Vec<EdgeId>,
    ) -> Result<Self> {
        let plan = Self::unchecked(g.edge_count(), kind, enhanced)?;
        plan.validate(g, alpha)?;
        Ok(plan)
    }

    /// Checks ids only; structural validity is left to `validate`.
    pub fn unchecked(edge_count: usize, kind: PlanKind, mut enhanced: Vec<EdgeId>) -> Result<Self> {
        enhanced.sort_unstable();
        let before = enhanced.len();
        enhanced.dedup();
        if enhanced.len() != before {
            return Err(Error::Plan("enhanced edge listed twice".into()));
        }
        if let Some(&e) = enhanced.iter().find(|&&e| e >= edge_count) {
            return Err(Error::Plan(format!("enhanced edge {e} out of range")));
        }
        let mut is_enhanced = vec![false; edge_count];
        for &e in &enhanced {
            is_enhanced[e] = true;
        }
        let aux_order = (0..edge_count).filter(|&f| !is_enhanced[f]).collect();
        Ok(Self {
            kind,
            enhanced,
            aux_order,
            is_enhanced,
        })
    }

    pub fn kind(&self) -> PlanKind {
        self.kind
    }

    pub fn enhanced(&self) -> &[EdgeId] {
        &self.enhanced
    }

    pub fn aux_order(&self) -> &[EdgeId] {
        &self.aux_order
    }

    pub fn edge_count(&self) -> usize {
        self.is_enhanced.len()
    }

    pub fn is_enhanced(&self, e: EdgeId) -> bool {
        self.is_enhanced[e]
    }

    /// Below: with every auxiliary edge closed the endpoints of each enhanced edge are
    /// separated. Above: with only auxiliary edges open they are joined.
    pub fn validate(&self, g: &Graph, alpha: &BoundaryPartition) -> Result<()> {
        check_len(g.edge_count(), self.edge_count())?;
        let wired = contract(g, alpha)?;
        let mut finder = PathFinder::new();
        for &e in &self.enhanced {
            let (a, b) = wired.endpoints(e);
            match self.kind {
                PlanKind::Below => {
                    if a == b || finder.connected(&wired, a, b, |f| f != e && self.is_enhanced[f]) {
                        return Err(Error::Plan(format!(
                            "enhanced edge {e} has no cutset avoiding enhanced edges"
                        )));
                    }
                }
                PlanKind::Above => {
                    if a != b && !finder.connected(&wired, a, b, |f| !self.is_enhanced[f]) {
                        return Err(Error::Plan(format!(
                            "enhanced edge {e} has no path of auxiliary edges"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_enhanced(&self, e: EdgeId) -> Result<()> {
        if e < self.edge_count() && self.is_enhanced[e] {
            Ok(())
        } else {
            Err(Error::Plan(format!("edge {e} is not enhanced")))
        }
    }
}

/// Endpoints of enhanced `e` are disconnected in G ∪ α using the other enhanced
/// edges and the auxiliary edges open in `z`.
pub fn closed_aux_cutset(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    z: &Configuration,
    e: EdgeId,
) -> Result<bool> {
    check_len(g.edge_count(), z.len())?;
    check_len(g.edge_count(), plan.edge_count())?;
    plan.check_enhanced(e)?;
    let params = FkParams::new(0.5, 1.0)?;
    let model = FkModel::new(g, alpha, params)?;
    Ok(model.cutset_closed(plan, z, e, &mut PathFinder::new()))
}

/// Endpoints of enhanced `e` are joined in G ∪ α by auxiliary edges open in `y`.
/// With the free partition this is the plain auxiliary-path event.
pub fn open_aux_path(
    g: &Graph,
    alpha: &BoundaryPartition,
    plan: &EnhancementPlan,
    y: &Configuration,
    e: EdgeId,
) -> Result<bool> {
    check_len(g.edge_count(), y.len())?;
    check_len(g.edge_count(), plan.edge_count())?;
    plan.check_enhanced(e)?;
    let params = FkParams::new(0.5, 1.0)?;
    let model = FkModel::new(g, alpha, params)?;
    Ok(model.aux_path_open(plan, y, e, &mut PathFinder::new()))
}

/// Coupled configurations with `y <= x <= z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleState {
    pub y: Configuration,
    pub x: Configuration,
    pub z: Configuration,
    pub step: u64,
}

impl TripleState {
    pub fn new(init: Configuration) -> Self {
        Self {
            y: init.clone(),
            x: init.clone(),
            z: init,
            step: 0,
        }
    }

    /// First edge where the ordering fails, if any.
    pub fn ordering_violation(&self) -> Option<EdgeId> {
        if self.y.le(&self.x) && self.x.le(&self.z) {
            return None;
        }
        (0..self.x.len())
            .find(|&f| (self.y.get(f) && !self.x.get(f)) || (self.x.get(f) && !self.z.get(f)))
    }
}

/// Thresholds (Y, Z) for an update of `e` chosen from the pre-update states.
fn pair_thresholds(
    model: &FkModel,
    plan: &EnhancementPlan,
    y: &Configuration,
    z: &Configuration,
    e: EdgeId,
    finder: &mut PathFinder,
) -> (f64, f64) {
    let params = model.params;
    if plan.is_enhanced[e] {
        match plan.kind {
            PlanKind::Below if model.cutset_closed(plan, z, e, finder) => {
                return (params.p_prime(), params.p_prime())
            }
            PlanKind::Above if model.aux_path_open(plan, y, e, finder) => {
                return (params.p(), params.p())
            }
            _ => {}
        }
    }
    (params.min(), params.max())
}

/// Updates edge `e` in all three chains, then resamples the auxiliary edges when
/// `e` is enhanced. `aux_u[i]` drives the i-th auxiliary edge of `plan.aux_order()`.
pub fn triple_step(
    model: &FkModel,
    plan: &EnhancementPlan,
    state: &mut TripleState,
    e: EdgeId,
    u: f64,
    aux_u: &[f64],
    finder: &mut PathFinder,
) -> Result<()> {
    check_len(model.edge_count(), plan.edge_count())?;
    check_len(plan.aux_order.len(), aux_u.len())?;
    let params = model.params;
    let (ty, tz) = pair_thresholds(model, plan, &state.y, &state.z, e, finder);
    model.heat_bath(&mut state.x, e, u, finder);
    state.y.set(e, u < ty);
    state.z.set(e, u < tz);
    if plan.is_enhanced[e] {
        for (&f, &v) in plan.aux_order.iter().zip(aux_u) {
            model.heat_bath(&mut state.x, f, v, finder);
            state.y.set(f, v < params.min());
            state.z.set(f, v < params.max());
        }
    }
    match state.ordering_violation() {
        None => Ok(()),
        Some(edge) => Err(Error::OrderingViolation {
            step: state.step,
            edge,
        }),
    }
}

/// Snapshots of the triple chain, emitted like [`ChainRun`].
pub struct TripleRun<'a> {
    model: &'a FkModel,
    plan: &'a EnhancementPlan,
    state: TripleState,
    rng: CounterRng,
    steps: u64,
    thin: u64,
    finder: PathFinder,
    aux: Vec<f64>,
    started: bool,
    failed: bool,
}

impl<'a> TripleRun<'a> {
    fn advance(&mut self) -> Result<()> {
        let t = self.state.step + 1;
        self.state.step = t;
        let m = self.model.edge_count() as u64;
        if m == 0 {
            return Ok(());
        }
        let e = self.rng.below(t, 0, m) as usize;
        let u = self.rng.uniform(t, 1);
        if self.plan.is_enhanced[e] {
            for (i, slot) in self.aux.iter_mut().enumerate() {
                *slot = self.rng.uniform(t, 2 + i as u64);
            }
        }
        triple_step(
            self.model,
            self.plan,
            &mut self.state,
            e,
            u,
            &self.aux,
            &mut self.finder,
        )
    }
}

impl<'a> Iterator for TripleRun<'a> {
    type Item = Result<TripleState>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(Ok(self.state.clone()));
        }
        if self.state.step >= self.steps {
            return None;
        }
        let target = (self.state.step + self.thin).min(self.steps);
        while self.state.step < target {
            if let Err(err) = self.advance() {
                self.failed = true;
                return Some(Err(err));
            }
        }
        Some(Ok(self.state.clone()))
    }
}

/// Runs the triple chain with all three coordinates started at `init`.
pub fn run_triple<'a>(
    model: &'a FkModel,
    plan: &'a EnhancementPlan,
    init: Configuration,
    steps: u64,
    seed: u64,
    thin: u64,
) -> Result<TripleRun<'a>> {
    model.check(&init)?;
    check_len(model.edge_count(), plan.edge_count())?;
    if thin == 0 {
        return Err(Error::Parameter("thinning stride must be positive".into()));
    }
    Ok(TripleRun {
        model,
        plan,
        state: TripleState::new(init),
        rng: CounterRng::new(seed),
        steps,
        thin,
        finder: PathFinder::new(),
        aux: vec![0.0; plan.aux_order.len()],
        started: false,
        failed: false,
    })
}

/// Largest edge count for plain and enhanced kernels.
pub const KERNEL_CAP: usize = 12;
/// Largest edge count for the pair kernel.
pub const PAIR_KERNEL_CAP: usize = 7;

#[derive(Clone, Copy, Debug)]
pub enum KernelVariant<'a> {
    Plain,
    Enhanced(&'a EnhancementPlan),
    Pair(&'a EnhancementPlan),
}

/// Sparse row-stochastic one-step transition matrix.
///
/// Plain and enhanced kernels act on configuration indices; the pair kernel
/// acts on pairs `y <= z` encoded in base 3 (see [`pair_index`]).
#[derive(Clone, Debug)]
pub struct Kernel {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Base-3 code of a pair `y <= z`: digit 0 closed in both, 1 open in z only, 2 open in both.
pub fn pair_index(y: &Configuration, z: &Configuration) -> usize {
    (0..y.len()).rev().fold(0, |acc, e| {
        acc * 3
            + if y.get(e) {
                2
            } else if z.get(e) {
                1
            } else {
                0
            }
    })
}

pub fn pair_decode(index: usize, edge_count: usize) -> (Configuration, Configuration) {
    let mut y = Configuration::closed(edge_count);
    let mut z = Configuration::closed(edge_count);
    let mut rest = index;
    for e in 0..edge_count {
        let d = rest % 3;
        rest /= 3;
        y.set(e, d == 2);
        z.set(e, d >= 1);
    }
    (y, z)
}

/// Marginal probability that Y is open at each edge under a pair distribution.
pub fn pair_y_marginals(dist: &[f64], edge_count: usize) -> Vec<f64> {
    let mut out = vec![0.0; edge_count];
    for (i, &w) in dist.iter().enumerate() {
        let mut rest = i;
        for slot in out.iter_mut() {
            if rest % 3 == 2 {
                *slot += w;
            }
            rest /= 3;
        }
    }
    out
}

fn merge(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|a| a.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (s, w) in entries {
        if w == 0.0 {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += w,
            _ => out.push((s, w)),
        }
    }
    out
}

/// Exact one-step kernel of the discrete-time chain.
pub fn build_kernel(model: &FkModel, variant: KernelVariant<'_>) -> Result<Kernel> {
    let m = model.edge_count();
    let (cap, what) = match variant {
        KernelVariant::Pair(_) => (PAIR_KERNEL_CAP, "pair kernel edges"),
        _ => (KERNEL_CAP, "kernel edges"),
    };
    if m > cap {
        return Err(Error::EnumerationCap {
            what,
            needed: m,
            cap,
        });
    }
    if let KernelVariant::Enhanced(plan) | KernelVariant::Pair(plan) = variant {
        check_len(m, plan.edge_count())?;
    }
    if m == 0 {
        return Ok(Kernel {
            row_ptr: vec![0, 1],
            cols: vec![0],
            vals: vec![1.0],
        });
    }
    let rows: Vec<Vec<(usize, f64)>> = match variant {
        KernelVariant::Plain => {
            let k = k_table(model);
            (0..1usize << m)
                .into_par_iter()
                .map(|s| {
                    let mut row = Vec::with_capacity(2 * m);
                    for e in 0..m {
                        push_update(model, &k, s, e, 1.0 / m as f64, &mut row);
                    }
                    merge(row)
                })
                .collect()
        }
        KernelVariant::Enhanced(plan) => {
            let k = k_table(model);
            (0..1usize << m)
                .into_par_iter()
                .map(|s| {
                    let mut row = Vec::new();
                    for e in 0..m {
                        let mut dist = Vec::with_capacity(2);
                        push_update(model, &k, s, e, 1.0 / m as f64, &mut dist);
                        if plan.is_enhanced[e] {
                            for &f in &plan.aux_order {
                                let mut next = Vec::with_capacity(2 * dist.len());
                                for &(t, w) in &dist {
                                    push_update(model, &k, t, f, w, &mut next);
                                }
                                dist = merge(next);
                            }
                        }
                        row.extend(dist);
                    }
                    merge(row)
                })
                .collect()
        }
        KernelVariant::Pair(plan) => {
            let n = 3usize.pow(m as u32);
            (0..n)
                .into_par_iter()
                .map_init(PathFinder::new, |finder, s| {
                    pair_row(model, plan, s, finder)
                })
                .collect()
        }
    };
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            cols.push(c as u32);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(Kernel {
        row_ptr,
        cols,
        vals,
    })
}

/// K^α_e for every configuration index and edge, packed as one bit per edge.
fn k_table(model: &FkModel) -> Vec<u32> {
    let m = model.edge_count();
    (0..1usize << m)
        .into_par_iter()
        .map_init(PathFinder::new, |finder, s| {
            let omega = Configuration::from_index(s as u64, m);
            (0..m).fold(0u32, |acc, e| {
                if k_event_wired(&model.wired, &omega, e, finder) {
                    acc | 1 << e
                } else {
                    acc
                }
            })
        })
        .collect()
}

/// Heat-bath update of `e` from state `s`, weighted by `w`.
fn push_update(
    model: &FkModel,
    k: &[u32],
    s: usize,
    e: EdgeId,
    w: f64,
    out: &mut Vec<(usize, f64)>,
) {
    let thr = model.params.threshold(k[s] >> e & 1 == 1);
    out.push((s | 1 << e, w * thr));
    out.push((s & !(1 << e), w * (1.0 - thr)));
}

fn pair_row(
    model: &FkModel,
    plan: &EnhancementPlan,
    s: usize,
    finder: &mut PathFinder,
) -> Vec<(usize, f64)> {
    let m = model.edge_count();
    let params = model.params;
    let (y, z) = pair_decode(s, m);
    let pow3: Vec<usize> = (0..m).map(|e| 3usize.pow(e as u32)).collect();
    let digit = |state: usize, e: usize| state / pow3[e] % 3;
    let set = |state: usize, e: usize, d: usize| state - digit(state, e) * pow3[e] + d * pow3[e];
    let branch = |state: usize, e: usize, a: f64, b: f64, w: f64, out: &mut Vec<(usize, f64)>| {
        out.push((set(state, e, 2), w * a));
        out.push((set(state, e, 1), w * (b - a)));
        out.push((set(state, e, 0), w * (1.0 - b)));
    };
    let mut row = Vec::new();
    for e in 0..m {
        let (a, b) = pair_thresholds(model, plan, &y, &z, e, finder);
        let mut dist = Vec::with_capacity(3);
        branch(s, e, a, b, 1.0 / m as f64, &mut dist);
        if plan.is_enhanced[e] {
            for &f in &plan.aux_order {
                let mut next = Vec::with_capacity(3 * dist.len());
                for &(t, w) in &dist {
                    branch(t, f, params.min(), params.max(), w, &mut next);
                }
                dist = merge(next);
            }
        }
        row.extend(dist);
    }
    merge(row)
}

impl Kernel {
    pub fn states(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// Largest |row sum - 1|.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.states())
            .map(|i| (self.row(i).map(|(_, v)| v).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Row vector times the kernel.
    pub fn apply_left(&self, dist: &[f64]) -> Result<Vec<f64>> {
        check_len(self.states(), dist.len())?;
        let mut out = vec![0.0; self.states()];
        for (i, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (c, v) in self.row(i) {
                out[c] += w * v;
            }
        }
        Ok(out)
    }

    /// ‖dist·P − dist‖₁.
    pub fn residual(&self, dist: &[f64]) -> Result<f64> {
        let next = self.apply_left(dist)?;
        Ok(next.iter().zip(dist).map(|(a, b)| (a - b).abs()).sum())
    }

    /// Power iteration from the uniform distribution until the residual is at most `tol`.
    pub fn stationary(&self, tol: f64, max_iterations: usize) -> Result<Vec<f64>> {
        let n = self.states();
        let mut dist = vec![1.0 / n as f64; n];
        for _ in 0..max_iterations {
            let next = self.apply_left(&dist)?;
            let diff: f64 = next.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum();
            dist = next;
            if diff <= tol {
                let total: f64 = dist.iter().sum();
                dist.iter_mut().for_each(|w| *w /= total);
                return Ok(dist);
            }
        }
        Err(Error::Parameter(format!(
            "power iteration did not reach residual {tol} in {max_iterations} iterations"
        )))
    }
}
