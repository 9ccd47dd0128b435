//! Planar subgraphs for perimeter routing.

use serde::{Deserialize, Serialize};

use crate::geometry::{distance, Position};
use crate::topology::{Deployment, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planarization {
    #[default]
    Gabriel,
    /// Relative neighborhood graph.
    Rng,
}

/// Planar neighbors of every node, ascending by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarAdjacency(pub Vec<Vec<NodeId>>);

fn witness_blocks(kind: Planarization, u: Position, v: Position, w: Position) -> bool {
    match kind {
        Planarization::Gabriel => {
            let mid = Position::new((u.x + v.x) / 2.0, (u.y + v.y) / 2.0);
            distance(mid, w) < distance(u, v) / 2.0
        }
        Planarization::Rng => {
            let uv = distance(u, v);
            distance(u, w) < uv && distance(v, w) < uv
        }
    }
}

/// Keeps edge u-v unless some other neighbor of `u` witnesses against it.
/// Under the unit-disc model every witness of a Gabriel or RNG edge is a
/// neighbor of both endpoints, so this local rule agrees with the global one.
pub fn planar_neighbors(
    kind: Planarization,
    node: NodeId,
    pos: Position,
    neighbors: &[(NodeId, Position)],
) -> Vec<(NodeId, Position)> {
    neighbors
        .iter()
        .copied()
        .filter(|&(v, vp)| {
            v != node
                && !neighbors
                    .iter()
                    .any(|&(w, wp)| w != v && w != node && witness_blocks(kind, pos, vp, wp))
        })
        .collect()
}

pub fn planarize(dep: &Deployment, kind: Planarization) -> PlanarAdjacency {
    let adj = dep.adjacency();
    PlanarAdjacency(
        dep.ids()
            .map(|u| {
                let nbrs: Vec<(NodeId, Position)> = adj[u.idx()].iter().map(|&v| (v, dep.pos(v))).collect();
                planar_neighbors(kind, u, dep.pos(u), &nbrs)
                    .into_iter()
                    .map(|(v, _)| v)
                    .collect()
            })
            .collect(),
    )
}

impl PlanarAdjacency {
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (u, nbrs) in self.0.iter().enumerate() {
            for &v in nbrs {
                if (u as u32) < v.0 {
                    out.push((NodeId(u as u32), v));
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(u, nbrs)| nbrs.iter().all(|v| self.0[v.idx()].contains(&NodeId(u as u32))))
    }
}
