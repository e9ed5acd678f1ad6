//! File formats: graphs and plans as JSON, measure tables as CSV.
//!
//! Graph file:
//! ```json
//! {"vertices": 4, "edges": [[0,1],[1,2],[2,3],[3,0]], "boundary": [],
//!  "rotation": [[0,3],[1,0],[2,1],[3,2]]}
//! ```
//! Rotation entries name an edge id, or `[edge, end]` (needed for self-loops).
//!
//! Measure CSV: comment lines starting with `#`, then `config,weight` rows
//! where `config` is the hexadecimal configuration word (edge 0 in the least
//! significant bit). The first comment carries `graph=<fingerprint>` and
//! `edges=<count>`.

use serde::{Deserialize, Serialize};

use crate::devices::{Device, DeviceKind, DevicePlan};
use crate::dynamics::{EnhancementPlan, PlanKind};
use crate::error::{Error, Result};
use crate::graph::{BoundaryPartition, Configuration, Graph, VertexId};
use crate::measure::ExactMeasure;
use crate::plane::{EdgeEnd, PlaneGraph};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RotationEntry {
    Edge(usize),
    End(usize, u8),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<(VertexId, VertexId)>,
    #[serde(default)]
    pub boundary: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<RotationEntry>>>,
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

/// Graph and, when a rotation is present, its plane embedding.
pub fn read_graph(text: &str) -> Result<(Graph, Option<PlaneGraph>)> {
    let file: GraphFile = parse_json(text, "graph file")?;
    let g = Graph::new(file.vertices, file.edges, file.boundary)?;
    let plane = match file.rotation {
        None => None,
        Some(rotation) => {
            let mut ends = Vec::with_capacity(rotation.len());
            for (v, list) in rotation.iter().enumerate() {
                let mut cycle = Vec::with_capacity(list.len());
                for entry in list {
                    cycle.push(match *entry {
                        RotationEntry::End(edge, end) => EdgeEnd::new(edge, end),
                        RotationEntry::Edge(edge) => {
                            if edge >= g.edge_count() {
                                return Err(Error::InvalidEmbedding(format!(
                                    "unknown edge {edge}"
                                )));
                            }
                            let (a, b) = g.endpoints(edge);
                            if a == b {
                                return Err(Error::InvalidEmbedding(format!(
                                    "self-loop {edge} needs [edge, end] entries"
                                )));
                            }
                            EdgeEnd::new(edge, if a == v { 0 } else { 1 })
                        }
                    });
                }
                ends.push(cycle);
            }
            Some(PlaneGraph::new(g.clone(), ends)?)
        }
    };
    Ok((g, plane))
}

pub fn write_graph(g: &Graph, plane: Option<&PlaneGraph>) -> String {
    let rotation = plane.map(|pg| {
        pg.rotation()
            .iter()
            .map(|cycle| {
                cycle
                    .iter()
                    .map(|ee| {
                        if pg.graph().is_self_loop(ee.edge) {
                            RotationEntry::End(ee.edge, ee.end)
                        } else {
                            RotationEntry::Edge(ee.edge)
                        }
                    })
                    .collect()
            })
            .collect()
    });
    let file = GraphFile {
        vertices: g.vertex_count(),
        edges: g.edges().to_vec(),
        boundary: g.boundary().to_vec(),
        rotation,
    };
    serde_json::to_string_pretty(&file).expect("graph serialises")
}

/// Blocks file: a JSON list of vertex lists.
pub fn read_blocks(text: &str, g: &Graph) -> Result<BoundaryPartition> {
    let blocks: Vec<Vec<VertexId>> = parse_json(text, "blocks file")?;
    BoundaryPartition::from_blocks(g, blocks)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DeviceEntry {
    pub enhanced: usize,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    /// "below" or "above".
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_kind: Option<String>,
    pub edges: usize,
    pub enhanced: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_order: Option<Vec<usize>>,
    #[serde(default)]
    pub devices: Vec<DeviceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

pub fn write_plan(dp: &DevicePlan) -> String {
    let file = PlanFile {
        kind: dp.plan.kind().as_str().to_string(),
        device_kind: Some(dp.kind.as_str().to_string()),
        edges: dp.plan.edge_count(),
        enhanced: dp.plan.enhanced().to_vec(),
        aux_order: Some(dp.plan.aux_order().to_vec()),
        devices: dp
            .devices
            .iter()
            .map(|d| DeviceEntry {
                enhanced: d.enhanced,
                edges: d.edges.clone(),
            })
            .collect(),
        max_degree: dp.max_degree,
        cycle_length: dp.cycle_length,
        warning: dp.warning.clone(),
    };
    serde_json::to_string_pretty(&file).expect("plan serialises")
}

/// Reads a plan without structural validation (callers validate against their α).
pub fn read_plan(text: &str) -> Result<(EnhancementPlan, Vec<Device>, Option<DeviceKind>)> {
    let file: PlanFile = parse_json(text, "plan file")?;
    let kind: PlanKind = file.kind.parse()?;
    let plan = EnhancementPlan::unchecked(file.edges, kind, file.enhanced)?;
    if let Some(order) = &file.aux_order {
        if order.as_slice() != plan.aux_order() {
            return Err(Error::Plan(
                "aux_order must list the non-enhanced edges in increasing order".into(),
            ));
        }
    }
    let device_kind = file.device_kind.as_deref().map(str::parse).transpose()?;
    let devices = file
        .devices
        .into_iter()
        .map(|d| Device::new(d.enhanced, d.edges))
        .collect();
    Ok((plan, devices, device_kind))
}

/// `# key=value ...` comment line.
pub fn comment_line(fields: &[(&str, String)]) -> String {
    let body: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}", body.join(" "))
}

/// Body of a measure CSV (header and rows) without comment lines.
pub fn measure_rows(m: &ExactMeasure) -> String {
    let mut out = String::from("config,weight\n");
    for (i, w) in m.weights().iter().enumerate() {
        let c = Configuration::from_index(i as u64, m.edge_count());
        out.push_str(&format!("{},{}\n", c.to_hex(), w));
    }
    out
}

pub fn read_measure(text: &str) -> Result<ExactMeasure> {
    let mut fingerprint = None;
    let mut edges = None;
    let mut rows = Vec::new();
    let mut header = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for field in comment.split_whitespace() {
                if let Some(v) = field.strip_prefix("graph=") {
                    fingerprint = Some(
                        u64::from_str_radix(v, 16)
                            .map_err(|e| Error::Parse(format!("graph fingerprint: {e}")))?,
                    );
                } else if let Some(v) = field.strip_prefix("edges=") {
                    edges = Some(
                        v.parse::<usize>()
                            .map_err(|e| Error::Parse(format!("edge count: {e}")))?,
                    );
                }
            }
            continue;
        }
        if !header {
            if line != "config,weight" {
                return Err(Error::Parse(format!(
                    "expected header config,weight, got {line:?}"
                )));
            }
            header = true;
            continue;
        }
        rows.push(line.to_string());
    }
    let fingerprint = fingerprint.ok_or_else(|| Error::Parse("missing graph= comment".into()))?;
    let edges = edges.ok_or_else(|| Error::Parse("missing edges= comment".into()))?;
    if edges > crate::measure::ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            what: "measure file edges",
            needed: edges,
            cap: crate::measure::ENUMERATION_CAP,
        });
    }
    let mut weights = vec![f64::NAN; 1 << edges];
    for row in rows {
        let (cfg, w) = row
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad row {row:?}")))?;
        let idx = Configuration::from_hex(cfg, edges)?.to_index() as usize;
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("weight {w:?}: {e}")))?;
        weights[idx] = w;
    }
    if weights.iter().any(|w| w.is_nan()) {
        return Err(Error::Parse(
            "measure file does not list every configuration".into(),
        ));
    }
    ExactMeasure::from_weights(edges, weights, fingerprint)
}
