//! Planar duality for FK measures on plane graphs with empty boundary.

use crate::error::{check_len, Error, Result};
use crate::graph::{BoundaryPartition, Configuration, EdgeId, Graph};
use crate::measure::{derive_p_prime, exact_fk, FkParams};
use crate::plane::PlaneGraph;

/// Dual parameter p* = q(1−p) / (p + q(1−p)), so that p/(1−p) · p*/(1−p*) = q.
pub fn dual_p(p: f64, q: f64) -> Result<f64> {
    derive_p_prime(p, q)?;
    Ok(q * (1.0 - p) / (p + q * (1.0 - p)))
}

/// Self-dual point √q / (1 + √q).
pub fn self_dual_point(q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Parameter(format!(
            "q must be positive and finite, got {q}"
        )));
    }
    Ok(q.sqrt() / (1.0 + q.sqrt()))
}

/// Primal plane graph, its face dual, and the edge bijection.
#[derive(Clone, Debug)]
pub struct DualPair {
    pub primal: PlaneGraph,
    pub dual: PlaneGraph,
    /// Primal edge id to dual edge id.
    pub bijection: Vec<EdgeId>,
    inverse: Vec<EdgeId>,
}

impl DualPair {
    pub fn new(primal: PlaneGraph) -> Result<Self> {
        let fd = primal.face_dual()?;
        let mut inverse = vec![usize::MAX; fd.bijection.len()];
        for (e, &d) in fd.bijection.iter().enumerate() {
            inverse[d] = e;
        }
        Ok(Self {
            primal,
            dual: fd.dual,
            bijection: fd.bijection,
            inverse,
        })
    }

    pub fn dual_graph(&self) -> &Graph {
        self.dual.graph()
    }

    /// Dual edge id back to the primal edge id.
    pub fn inverse(&self) -> &[EdgeId] {
        &self.inverse
    }
}

/// ω*(e*) = 1 − ω(e).
pub fn dual_config(pair: &DualPair, omega: &Configuration) -> Result<Configuration> {
    check_len(pair.bijection.len(), omega.len())?;
    let mut out = Configuration::closed(omega.len());
    for (e, &d) in pair.bijection.iter().enumerate() {
        out.set(d, !omega.get(e));
    }
    Ok(out)
}

/// Maps a dual configuration back to the primal graph.
pub fn primal_config(pair: &DualPair, omega_star: &Configuration) -> Result<Configuration> {
    check_len(pair.inverse.len(), omega_star.len())?;
    let mut out = Configuration::closed(omega_star.len());
    for (d, &e) in pair.inverse.iter().enumerate() {
        out.set(e, !omega_star.get(d));
    }
    Ok(out)
}

/// max over ω of |φ_{G,p,q}(ω) − φ_{G*,p*,q}(ω*)|, both with free boundary.
pub fn duality_check(pair: &DualPair, params: FkParams) -> Result<f64> {
    let g = pair.primal.graph();
    if !g.boundary().is_empty() {
        return Err(Error::UnsupportedBoundary);
    }
    let dual_params = FkParams::new(dual_p(params.p(), params.q())?, params.q())?;
    let dual = pair.dual_graph();
    let phi = exact_fk(g, &BoundaryPartition::free(g), params)?;
    let phi_star = exact_fk(dual, &BoundaryPartition::free(dual), dual_params)?;
    let m = g.edge_count();
    let mut worst: f64 = 0.0;
    for index in 0..1u64 << m {
        let omega = Configuration::from_index(index, m);
        let star = dual_config(pair, &omega)?;
        worst = worst.max((phi.weight(&omega) - phi_star.weight(&star)).abs());
    }
    Ok(worst)
}
