//! Exact probability that two vertex sets are joined by open edges when
//! edges are open independently.
//!
//! Small instances are enumerated; larger ones use a frontier dynamic
//! program that sweeps edges in id order while tracking how the active
//! vertices are partitioned into open clusters.

use std::collections::BTreeMap;

use crate::error::{check_len, Error, Result};
use crate::graph::{Graph, UnionFind, VertexId};

/// Above this many uncertain edges the frontier sweep is used.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Auto,
    Enumerate,
    Frontier,
}

/// Instance after merging certain edges, sources and targets.
struct Reduced {
    vertex_count: usize,
    edges: Vec<(usize, usize, f64)>,
    s: usize,
    t: usize,
}

fn reduce(
    g: &Graph,
    sources: &[VertexId],
    targets: &[VertexId],
    probs: &[f64],
) -> Result<Option<Reduced>> {
    check_len(g.edge_count(), probs.len())?;
    for &v in sources.iter().chain(targets) {
        if v >= g.vertex_count() {
            return Err(Error::InvalidGraph(format!("vertex {v} out of range")));
        }
    }
    for &x in probs {
        crate::measure::check_probability(x, "edge probability")?;
    }
    if sources.is_empty() || targets.is_empty() {
        return Ok(None);
    }
    let mut uf = UnionFind::new(g.vertex_count());
    for w in sources.windows(2) {
        uf.union(w[0], w[1]);
    }
    for w in targets.windows(2) {
        uf.union(w[0], w[1]);
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if probs[e] >= 1.0 {
            uf.union(u, v);
        }
    }
    let mut label = vec![usize::MAX; g.vertex_count()];
    let mut count = 0;
    for v in 0..g.vertex_count() {
        let r = uf.find(v);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
    }
    let rep = |uf: &mut UnionFind, v: usize| label[uf.find(v)];
    let s = rep(&mut uf, sources[0]);
    let t = rep(&mut uf, targets[0]);
    let mut edges = Vec::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let x = probs[e];
        if x > 0.0 && x < 1.0 {
            let (a, b) = (rep(&mut uf, u), rep(&mut uf, v));
            if a != b {
                edges.push((a, b, x));
            }
        }
    }
    Ok(Some(Reduced {
        vertex_count: count,
        edges,
        s,
        t,
    }))
}

/// Probability that some source and some target lie in one open cluster.
pub fn connection_probability(
    g: &Graph,
    sources: &[VertexId],
    targets: &[VertexId],
    probs: &[f64],
) -> Result<f64> {
    connection_probability_with(Route::Auto, g, sources, targets, probs)
}

pub fn two_terminal(g: &Graph, s: VertexId, t: VertexId, probs: &[f64]) -> Result<f64> {
    connection_probability(g, &[s], &[t], probs)
}

pub fn connection_probability_with(
    route: Route,
    g: &Graph,
    sources: &[VertexId],
    targets: &[VertexId],
    probs: &[f64],
) -> Result<f64> {
    let Some(r) = reduce(g, sources, targets, probs)? else {
        return Ok(0.0);
    };
    if r.s == r.t {
        return Ok(1.0);
    }
    let route = match route {
        Route::Auto if r.edges.len() <= ENUMERATION_LIMIT => Route::Enumerate,
        Route::Auto => Route::Frontier,
        other => other,
    };
    match route {
        Route::Enumerate => enumerate(&r),
        _ => frontier(&r),
    }
}

fn enumerate(r: &Reduced) -> Result<f64> {
    let k = r.edges.len();
    if k > ENUMERATION_LIMIT {
        return Err(Error::EnumerationCap {
            what: "reliability edges",
            needed: k,
            cap: ENUMERATION_LIMIT,
        });
    }
    let mut uf = UnionFind::new(r.vertex_count);
    let mut total = 0.0;
    for mask in 0u64..1 << k {
        uf.reset();
        let mut w = 1.0;
        for (i, &(a, b, x)) in r.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w *= x;
                uf.union(a, b);
            } else {
                w *= 1.0 - x;
            }
        }
        if uf.same(r.s, r.t) {
            total += w;
        }
    }
    Ok(total)
}

/// Relabels so that labels appear in first-occurrence order.
fn canonical(labels: &mut [u8]) {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    for l in labels.iter_mut() {
        if map[*l as usize] == u8::MAX {
            map[*l as usize] = next;
            next += 1;
        }
        *l = map[*l as usize];
    }
}

fn frontier(r: &Reduced) -> Result<f64> {
    const NONE: usize = usize::MAX;
    let mut last = vec![NONE; r.vertex_count];
    for (i, &(a, b, _)) in r.edges.iter().enumerate() {
        last[a] = i;
        last[b] = i;
    }
    // s and t occupy slots 0 and 1 for the whole sweep
    let mut slots: Vec<usize> = vec![r.s, r.t];
    let mut slot_of = vec![NONE; r.vertex_count];
    slot_of[r.s] = 0;
    slot_of[r.t] = 1;
    let mut states: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
    states.insert(vec![0, 1], 1.0);
    let mut hit = 0.0;
    for (i, &(a, b, x)) in r.edges.iter().enumerate() {
        for v in [a, b] {
            if slot_of[v] == NONE {
                if slots.len() >= 255 {
                    return Err(Error::Size("reliability frontier wider than 255".into()));
                }
                slot_of[v] = slots.len();
                slots.push(v);
                let fresh = slots.len() as u8;
                states = states
                    .into_iter()
                    .map(|(mut k, w)| {
                        k.push(fresh);
                        canonical(&mut k);
                        (k, w)
                    })
                    .collect();
            }
        }
        let (sa, sb) = (slot_of[a], slot_of[b]);
        let mut next: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
        for (key, w) in states {
            *next.entry(key.clone()).or_insert(0.0) += w * (1.0 - x);
            let (la, lb) = (key[sa], key[sb]);
            let mut merged = key;
            if la != lb {
                for l in merged.iter_mut() {
                    if *l == lb {
                        *l = la;
                    }
                }
            }
            if merged[0] == merged[1] {
                hit += w * x;
            } else {
                canonical(&mut merged);
                *next.entry(merged).or_insert(0.0) += w * x;
            }
        }
        states = next;
        // retire vertices whose edges are all processed
        let retire: Vec<usize> = (2..slots.len()).filter(|&j| last[slots[j]] == i).collect();
        if !retire.is_empty() {
            for &j in retire.iter().rev() {
                slot_of[slots[j]] = NONE;
                slots.remove(j);
            }
            for (j, &v) in slots.iter().enumerate() {
                slot_of[v] = j;
            }
            let mut merged: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
            for (mut key, w) in states {
                for &j in retire.iter().rev() {
                    key.remove(j);
                }
                canonical(&mut key);
                *merged.entry(key).or_insert(0.0) += w;
            }
            states = merged;
        }
    }
    Ok(hit)
}
