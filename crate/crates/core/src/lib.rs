//! Random-cluster (FK) model toolkit: exact enumeration on small graphs,
//! heat-bath dynamics with enhanced coupled chains, device-based enhancement
//! plans, Strassen domination certificates, planar duality and the
//! exploration coupling between nested boxes.

pub mod certify;
pub mod coupling;
pub mod devices;
pub mod duality;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod graph;
pub mod io;
pub mod measure;
pub mod plane;
pub mod reliability;
pub mod rng;
pub mod scan;

pub use error::{Error, Result};
pub use graph::{
    cluster_count, connected_in, contract, lattice_box, BoundaryPartition, Configuration, EdgeId,
    Graph, LatticeBox, VertexId,
};
pub use measure::{derive_p_prime, exact_fk, product_measure, ExactMeasure, FkParams};
pub use rng::CounterRng;
