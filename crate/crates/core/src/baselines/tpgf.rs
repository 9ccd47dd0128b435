//! TPGF: offline discovery of node-disjoint paths by greedy depth-first
//! exploration with step-back-and-mark, followed by shortcut optimization.

use serde::{Deserialize, Serialize};

use crate::geometry::distance;
use crate::topology::{Deployment, NodeId};

/// Per-node marks shared by successive explorations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    /// Interior nodes of paths already found.
    pub consumed: Vec<bool>,
    /// Dead ends found while exploring.
    pub blocked: Vec<bool>,
}

impl Labels {
    pub fn new(n: usize) -> Self {
        Self {
            consumed: vec![false; n],
            blocked: vec![false; n],
        }
    }

    fn usable(&self, v: NodeId) -> bool {
        !self.consumed[v.idx()] && !self.blocked[v.idx()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpgfPathSet {
    pub paths: Vec<Vec<NodeId>>,
    pub labels: Labels,
}

impl TpgfPathSet {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path set serializes")
    }
}

/// Walks greedily toward `sink`, always moving to the usable neighbor
/// closest to it. A node with nowhere to go is marked blocked and the walk
/// steps back one hop. Returns `None` once the source itself is blocked.
pub fn tpgf_explore(
    dep: &Deployment,
    adj: &[Vec<NodeId>],
    src: NodeId,
    sink: NodeId,
    labels: &mut Labels,
) -> Option<Vec<NodeId>> {
    let sink_pos = dep.pos(sink);
    let mut path = vec![src];
    let mut on_path = vec![false; dep.len()];
    on_path[src.idx()] = true;
    while let Some(&x) = path.last() {
        if x == sink {
            return Some(path);
        }
        let next = if adj[x.idx()].contains(&sink) {
            Some(sink)
        } else {
            adj[x.idx()]
                .iter()
                .copied()
                .filter(|&v| v != src && !on_path[v.idx()] && labels.usable(v))
                .map(|v| (distance(dep.pos(v), sink_pos), v))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, v)| v)
        };
        match next {
            Some(v) => {
                on_path[v.idx()] = true;
                path.push(v);
            }
            None => {
                labels.blocked[x.idx()] = true;
                path.pop();
                // stepped-back nodes stay off this walk via `blocked`
            }
        }
    }
    None
}

/// Removes detours: whenever path[i] can reach a later path[k] directly, the
/// nodes between them are cut. Repeats to a fixpoint.
pub fn tpgf_optimize(path: &[NodeId], dep: &Deployment) -> Vec<NodeId> {
    let mut p = path.to_vec();
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 2 < p.len() {
            if let Some(k) = (i + 2..p.len()).rev().find(|&k| dep.in_range(p[i], p[k])) {
                p.drain(i + 1..k);
                changed = true;
            }
            i += 1;
        }
        if !changed {
            return p;
        }
    }
}

/// Repeats explore + optimize, consuming each path's interior nodes, until
/// exploration fails or `max_paths` paths are found.
pub fn tpgf_multipath(dep: &Deployment, src: NodeId, sink: NodeId, max_paths: usize) -> TpgfPathSet {
    let adj = dep.adjacency();
    let mut labels = Labels::new(dep.len());
    let mut paths = Vec::new();
    while paths.len() < max_paths {
        let Some(raw) = tpgf_explore(dep, &adj, src, sink, &mut labels) else {
            break;
        };
        let path = tpgf_optimize(&raw, dep);
        for &v in &path[1..path.len() - 1] {
            labels.consumed[v.idx()] = true;
        }
        let direct = path.len() == 2;
        paths.push(path);
        if direct {
            // a direct link cannot be made disjoint from itself
            break;
        }
    }
    TpgfPathSet { paths, labels }
}
