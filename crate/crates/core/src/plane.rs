//! Plane graphs given by rotation systems, and face tracing.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, UnionFind, VertexId};

/// One end of an edge: `end` 0 is the first listed endpoint, 1 the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeEnd {
    pub edge: EdgeId,
    pub end: u8,
}

impl EdgeEnd {
    pub fn new(edge: EdgeId, end: u8) -> Self {
        Self { edge, end }
    }

    fn dart(self) -> usize {
        2 * self.edge + self.end as usize
    }

    fn from_dart(d: usize) -> Self {
        Self {
            edge: d / 2,
            end: (d % 2) as u8,
        }
    }
}

/// Graph with a cyclic order of edge-ends around every vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneGraph {
    graph: Graph,
    rotation: Vec<Vec<EdgeEnd>>,
    /// successor of each dart in the rotation at its vertex
    next: Vec<usize>,
}

impl PlaneGraph {
    pub fn new(graph: Graph, rotation: Vec<Vec<EdgeEnd>>) -> Result<Self> {
        if rotation.len() != graph.vertex_count() {
            return Err(Error::InvalidEmbedding(format!(
                "rotation lists {} vertices, graph has {}",
                rotation.len(),
                graph.vertex_count()
            )));
        }
        let darts = 2 * graph.edge_count();
        let mut seen = vec![false; darts];
        let mut next = vec![usize::MAX; darts];
        for (v, cycle) in rotation.iter().enumerate() {
            for (i, ee) in cycle.iter().enumerate() {
                if ee.edge >= graph.edge_count() || ee.end > 1 {
                    return Err(Error::InvalidEmbedding(format!(
                        "vertex {v} lists unknown edge end {}:{}",
                        ee.edge, ee.end
                    )));
                }
                let (a, b) = graph.endpoints(ee.edge);
                let at = if ee.end == 0 { a } else { b };
                if at != v {
                    return Err(Error::InvalidEmbedding(format!(
                        "edge end {}:{} belongs to vertex {at}, listed at {v}",
                        ee.edge, ee.end
                    )));
                }
                let d = ee.dart();
                if seen[d] {
                    return Err(Error::InvalidEmbedding(format!(
                        "edge end {}:{} listed twice",
                        ee.edge, ee.end
                    )));
                }
                seen[d] = true;
                next[d] = cycle[(i + 1) % cycle.len()].dart();
            }
        }
        if let Some(d) = seen.iter().position(|s| !s) {
            let ee = EdgeEnd::from_dart(d);
            return Err(Error::InvalidEmbedding(format!(
                "edge end {}:{} missing from the rotation",
                ee.edge, ee.end
            )));
        }
        Ok(Self {
            graph,
            rotation,
            next,
        })
    }

    /// Rotation where every non-loop edge is named by its id alone.
    pub fn from_edge_lists(graph: Graph, rotation: Vec<Vec<EdgeId>>) -> Result<Self> {
        let mut ends = Vec::with_capacity(rotation.len());
        for (v, list) in rotation.iter().enumerate() {
            let mut cycle = Vec::with_capacity(list.len());
            for &e in list {
                if e >= graph.edge_count() {
                    return Err(Error::InvalidEmbedding(format!("unknown edge {e}")));
                }
                let (a, b) = graph.endpoints(e);
                if a == b {
                    return Err(Error::InvalidEmbedding(format!(
                        "self-loop {e} needs explicit ends"
                    )));
                }
                let end = if a == v {
                    0
                } else if b == v {
                    1
                } else {
                    return Err(Error::InvalidEmbedding(format!(
                        "edge {e} is not incident to vertex {v}"
                    )));
                };
                cycle.push(EdgeEnd::new(e, end));
            }
            ends.push(cycle);
        }
        PlaneGraph::new(graph, ends)
    }

    /// Standard embedding of the n×n square box (edges from `lattice_box(2, n, false)`),
    /// with an empty boundary so it can be used for duality.
    pub fn square_box(n: usize) -> Result<Self> {
        let lb = crate::graph::LatticeBox::new(2, n, false)?;
        let g = lb.graph().with_boundary([])?;
        let mut rotation = Vec::with_capacity(g.vertex_count());
        for v in 0..g.vertex_count() {
            let c = lb.coords(v);
            let mut cycle = Vec::new();
            // counterclockwise: east, north, west, south
            let dirs: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
            for (dx, dy) in dirs {
                let (x, y) = (c[0] as i64 + dx, c[1] as i64 + dy);
                if x < 0 || y < 0 || x >= n as i64 || y >= n as i64 {
                    continue;
                }
                let w = lb.vertex(&[x as usize, y as usize]);
                let e = g
                    .incident(v)
                    .iter()
                    .find(|&&(_, u)| u == w)
                    .map(|&(e, _)| e)
                    .expect("grid neighbour");
                cycle.push(e);
            }
            rotation.push(cycle);
        }
        PlaneGraph::from_edge_lists(g, rotation)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn rotation(&self) -> &[Vec<EdgeEnd>] {
        &self.rotation
    }

    /// Faces as dart orbits of `d -> next(opposite(d))`, each starting at its smallest dart.
    pub fn faces(&self) -> Vec<Vec<EdgeEnd>> {
        let darts = self.next.len();
        let mut visited = vec![false; darts];
        let mut faces = Vec::new();
        for start in 0..darts {
            if visited[start] {
                continue;
            }
            let mut orbit = Vec::new();
            let mut d = start;
            while !visited[d] {
                visited[d] = true;
                orbit.push(EdgeEnd::from_dart(d));
                d = self.next[d ^ 1];
            }
            faces.push(orbit);
        }
        faces
    }

    /// Dual graph with one vertex per face; dual edge `e` crosses primal edge `e`.
    pub fn face_dual(&self) -> Result<FaceDual> {
        let g = &self.graph;
        let mut uf = UnionFind::new(g.vertex_count());
        for &(u, v) in g.edges() {
            uf.union(u, v);
        }
        if g.vertex_count() == 0 || uf.set_count() != 1 {
            return Err(Error::InvalidEmbedding(
                "face duals are only built for connected plane graphs".into(),
            ));
        }
        let faces = if g.edge_count() == 0 {
            // a lone vertex bounds a single face
            vec![Vec::new()]
        } else {
            self.faces()
        };
        let v = g.vertex_count() as i64;
        let e = g.edge_count() as i64;
        let f = faces.len() as i64;
        if v - e + f != 2 {
            return Err(Error::InvalidEmbedding(format!(
                "rotation system has Euler characteristic {} (V={v}, E={e}, F={f}); not planar",
                v - e + f
            )));
        }
        let mut face_of = vec![0; 2 * g.edge_count()];
        for (i, orbit) in faces.iter().enumerate() {
            for ee in orbit {
                face_of[ee.dart()] = i;
            }
        }
        let edges: Vec<(VertexId, VertexId)> = (0..g.edge_count())
            .map(|k| (face_of[2 * k], face_of[2 * k + 1]))
            .collect();
        let dual_graph = Graph::new(faces.len(), edges, [])?;
        let dual = PlaneGraph::new(dual_graph, faces.clone())?;
        Ok(FaceDual {
            dual,
            faces,
            bijection: (0..g.edge_count()).collect(),
        })
    }
}

/// Result of face tracing.
#[derive(Clone, Debug)]
pub struct FaceDual {
    /// Dual plane graph; its rotation at face `f` is the orbit of `f`.
    pub dual: PlaneGraph,
    /// Primal darts bounding each face.
    pub faces: Vec<Vec<EdgeEnd>>,
    /// Primal edge id to dual edge id.
    pub bijection: Vec<EdgeId>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_cycle() -> PlaneGraph {
        let g = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], []).unwrap();
        PlaneGraph::from_edge_lists(g, vec![vec![0, 3], vec![1, 0], vec![2, 1], vec![3, 2]])
            .unwrap()
    }

    #[test]
    fn four_cycle_dual() {
        let fd = square_cycle().face_dual().unwrap();
        let d = fd.dual.graph();
        assert_eq!(d.vertex_count(), 2);
        assert_eq!(d.edge_count(), 4);
        let first = d.endpoints(0);
        assert_ne!(first.0, first.1);
        for e in 0..4 {
            let (a, b) = d.endpoints(e);
            assert_eq!(
                (a.min(b), a.max(b)),
                (first.0.min(first.1), first.0.max(first.1))
            );
        }
    }

    #[test]
    fn loop_dual_is_an_edge() {
        let g = Graph::new(1, vec![(0, 0)], []).unwrap();
        let pg = PlaneGraph::new(g, vec![vec![EdgeEnd::new(0, 0), EdgeEnd::new(0, 1)]]).unwrap();
        let fd = pg.face_dual().unwrap();
        assert_eq!(fd.dual.graph().vertex_count(), 2);
        assert_eq!(fd.dual.graph().edges(), &[(0, 1)]);
    }

    #[test]
    fn lone_vertex_dual() {
        let g = Graph::new(1, vec![], []).unwrap();
        let fd = PlaneGraph::new(g, vec![vec![]])
            .unwrap()
            .face_dual()
            .unwrap();
        assert_eq!(fd.dual.graph().vertex_count(), 1);
    }

    #[test]
    fn bad_rotations_rejected() {
        let g = Graph::new(2, vec![(0, 1)], []).unwrap();
        let missing = PlaneGraph::new(g.clone(), vec![vec![EdgeEnd::new(0, 0)], vec![]]);
        assert!(matches!(missing, Err(Error::InvalidEmbedding(_))));
        let wrong_vertex = PlaneGraph::new(
            g.clone(),
            vec![vec![EdgeEnd::new(0, 1)], vec![EdgeEnd::new(0, 0)]],
        );
        assert!(matches!(wrong_vertex, Err(Error::InvalidEmbedding(_))));
    }

    #[test]
    fn nonplanar_rotation_rejected() {
        // K4 with a rotation of genus one
        let g = Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], []).unwrap();
        let pg = PlaneGraph::from_edge_lists(
            g,
            vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 3, 5], vec![2, 4, 5]],
        )
        .unwrap();
        assert_eq!(pg.faces().len(), 2);
        assert!(matches!(pg.face_dual(), Err(Error::InvalidEmbedding(_))));
    }

    #[test]
    fn square_box_is_planar() {
        for n in 1..5 {
            let pg = PlaneGraph::square_box(n).unwrap();
            let fd = pg.face_dual().unwrap();
            let inner = (n - 1) * (n - 1);
            assert_eq!(fd.dual.graph().vertex_count(), inner + 1);
        }
    }
}
