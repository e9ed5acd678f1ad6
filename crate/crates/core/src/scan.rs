//! Parameter sweeps of the plain chain over a (p, q) grid.

use rayon::prelude::*;

use crate::dynamics::{resume_chain, run_chain, FkModel};
use crate::error::{Error, Result};
use crate::graph::{BoundaryPartition, Configuration, Graph, LatticeBox, UnionFind, VertexId};
use crate::measure::FkParams;
use crate::rng::CounterRng;

/// Graph swept by a scan.
#[derive(Clone, Debug)]
pub enum ScanGraph {
    /// Crossing means the face x = 0 joined to the face x = n − 1 without wraparound edges.
    Lattice {
        dim: usize,
        side: usize,
        torus: bool,
    },
    /// Crossing means `from` joined to `to`; without them, all boundary vertices in one cluster.
    Custom {
        graph: Graph,
        crossing: Option<(Vec<VertexId>, Vec<VertexId>)>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryChoice {
    Free,
    Wired,
}

impl BoundaryChoice {
    pub fn partition(self, g: &Graph) -> BoundaryPartition {
        match self {
            BoundaryChoice::Free => BoundaryPartition::free(g),
            BoundaryChoice::Wired => BoundaryPartition::wired(g),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryChoice::Free => "free",
            BoundaryChoice::Wired => "wired",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub graph: ScanGraph,
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub boundary: BoundaryChoice,
    /// Steps discarded before the first sample.
    pub burn_in: u64,
    pub samples: u64,
    /// Steps between samples.
    pub thin: u64,
    pub seed: u64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p_grid.is_empty() || self.q_grid.is_empty() {
            return Err(Error::Parameter("p and q grids must be nonempty".into()));
        }
        for &p in &self.p_grid {
            crate::measure::check_probability(p, "p")?;
        }
        for &q in &self.q_grid {
            FkParams::new(0.5, q)?;
        }
        if self.samples == 0 || self.thin == 0 {
            return Err(Error::Parameter("samples and thin must be positive".into()));
        }
        Ok(())
    }
}

/// One grid point of a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub p: f64,
    pub q: f64,
    pub p_prime: f64,
    /// Mean fraction of open edges.
    pub density: f64,
    /// Mean size of the largest open cluster of G (no wiring) over |V|.
    pub largest_frac: f64,
    /// Fraction of samples with a crossing.
    pub crossing: f64,
    pub n_samples: u64,
    pub seed: u64,
}

pub const SCAN_COLUMNS: &str = "p,q,p_prime,density,largest_frac,crossing,n_samples,seed";

impl ScanRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.p,
            self.q,
            self.p_prime,
            self.density,
            self.largest_frac,
            self.crossing,
            self.n_samples,
            self.seed
        )
    }
}

struct Observer {
    graph: Graph,
    /// Edges usable for crossings.
    crossing_edges: Vec<bool>,
    from: Vec<VertexId>,
    to: Vec<VertexId>,
}

impl Observer {
    fn new(source: &ScanGraph) -> Result<Self> {
        match source {
            ScanGraph::Lattice { dim, side, torus } => {
                let lb = LatticeBox::new(*dim, *side, *torus)?;
                let g = lb.graph();
                let crossing_edges = (0..g.edge_count()).map(|e| !lb.is_wrap(e)).collect();
                let face = |x: usize| -> Vec<VertexId> {
                    (0..g.vertex_count())
                        .filter(|&v| lb.coords(v)[0] == x)
                        .collect()
                };
                Ok(Self {
                    from: face(0),
                    to: face(side - 1),
                    crossing_edges,
                    graph: lb.into_graph(),
                })
            }
            ScanGraph::Custom { graph, crossing } => {
                let (from, to) = match crossing {
                    Some((a, b)) => (a.clone(), b.clone()),
                    None => (graph.boundary().to_vec(), graph.boundary().to_vec()),
                };
                if let Some(&v) = from.iter().chain(&to).find(|&&v| v >= graph.vertex_count()) {
                    return Err(Error::Parameter(format!(
                        "crossing vertex {v} out of range"
                    )));
                }
                Ok(Self {
                    crossing_edges: vec![true; graph.edge_count()],
                    graph: graph.clone(),
                    from,
                    to,
                })
            }
        }
    }

    fn largest_and_crossing(&self, omega: &Configuration, uf: &mut UnionFind) -> (usize, bool) {
        uf.reset();
        for e in omega.iter_open() {
            let (a, b) = self.graph.endpoints(e);
            uf.union(a, b);
        }
        let largest = uf.largest_set();
        uf.reset();
        for e in omega.iter_open() {
            if self.crossing_edges[e] {
                let (a, b) = self.graph.endpoints(e);
                uf.union(a, b);
            }
        }
        let crossing = if self.from.is_empty() || self.to.is_empty() {
            false
        } else if self.from == self.to {
            let r = uf.find(self.from[0]);
            self.from.iter().all(|&v| uf.find(v) == r)
        } else {
            let mut roots: Vec<usize> = self.from.iter().map(|&v| uf.find(v)).collect();
            roots.sort_unstable();
            self.to
                .iter()
                .any(|&v| roots.binary_search(&uf.find(v)).is_ok())
        };
        (largest, crossing)
    }
}

/// Seed used for grid point `index`.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    CounterRng::new(seed).split(index).seed()
}

/// Runs the plain chain at every grid point (p outer, q inner), in parallel,
/// returning rows in grid order.
pub fn scan_phase_diagram(cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let observer = Observer::new(&cfg.graph)?;
    let g = &observer.graph;
    let alpha = cfg.boundary.partition(g);
    let points: Vec<(usize, f64, f64)> = cfg
        .p_grid
        .iter()
        .flat_map(|&p| cfg.q_grid.iter().map(move |&q| (p, q)))
        .enumerate()
        .map(|(i, (p, q))| (i, p, q))
        .collect();
    points
        .par_iter()
        .map(|&(index, p, q)| {
            let params = FkParams::new(p, q)?;
            let model = FkModel::new(g, &alpha, params)?;
            let seed = point_seed(cfg.seed, index as u64);
            let init = Configuration::closed(g.edge_count());
            let warm = run_chain(&model, init, cfg.burn_in, seed, cfg.burn_in.max(1))?
                .last()
                .expect("at least the initial state");
            let mut uf = UnionFind::new(g.vertex_count());
            let (mut open, mut largest, mut crossings) = (0.0, 0.0, 0u64);
            let m = g.edge_count().max(1) as f64;
            for state in resume_chain(&model, warm, cfg.samples * cfg.thin, cfg.thin)?.skip(1) {
                open += state.config.count_open() as f64 / m;
                let (big, cross) = observer.largest_and_crossing(&state.config, &mut uf);
                largest += big as f64 / g.vertex_count().max(1) as f64;
                crossings += cross as u64;
            }
            let n = cfg.samples as f64;
            Ok(ScanRow {
                p,
                q,
                p_prime: params.p_prime(),
                density: open / n,
                largest_frac: largest / n,
                crossing: crossings as f64 / n,
                n_samples: cfg.samples,
                seed,
            })
        })
        .collect()
}
