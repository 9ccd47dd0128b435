//! GPSR: greedy forwarding with right-hand-rule perimeter recovery on a
//! planar subgraph, including face changes at crossings of the line from the
//! perimeter entry point to the destination.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::planar::{planar_neighbors, Planarization};
use crate::geometry::{distance, segment_intersection, Position};
use crate::topology::{Deployment, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GpsrMode {
    #[default]
    Greedy,
    Perimeter,
}

/// Routing state GPSR carries in each packet.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerimeterHeader {
    pub mode: GpsrMode,
    /// Where perimeter mode began.
    pub entry_point: Position,
    /// Where the packet entered the current face.
    pub face_point: Position,
    /// First edge traversed on the current face.
    pub first_edge: Option<(NodeId, NodeId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpsrStep {
    Greedy(NodeId),
    Perimeter(NodeId),
    /// The perimeter tour came back to its first edge, or the node has no
    /// planar neighbor at all: the destination is unreachable.
    Unreachable,
}

impl GpsrStep {
    pub fn next(&self) -> Option<NodeId> {
        match *self {
            GpsrStep::Greedy(n) | GpsrStep::Perimeter(n) => Some(n),
            GpsrStep::Unreachable => None,
        }
    }
}

/// Greedy choice: the strictly-closer neighbor nearest to `dest`, ties to
/// the lowest id.
pub fn greedy_next(pos: Position, dest: Position, neighbors: &[(NodeId, Position)]) -> Option<NodeId> {
    let here = distance(pos, dest);
    neighbors
        .iter()
        .map(|&(id, p)| (distance(p, dest), id))
        .filter(|&(d, _)| d < here)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// First neighbor counterclockwise about `pos` from bearing `reference`
/// (radians). A neighbor exactly on the reference bearing comes last.
fn next_ccw(pos: Position, reference: f64, nbrs: &[(NodeId, Position)]) -> Option<NodeId> {
    nbrs.iter()
        .map(|&(id, p)| {
            let mut delta = (pos.bearing(p) - reference).rem_euclid(TAU);
            if delta < 1e-12 {
                delta = TAU;
            }
            (delta, id)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

fn lookup(nbrs: &[(NodeId, Position)], id: NodeId) -> Option<Position> {
    nbrs.iter().find(|n| n.0 == id).map(|n| n.1)
}

/// One GPSR forwarding decision at `node`. `prev` is the node the packet
/// arrived from (needed for the right-hand rule in perimeter mode);
/// `neighbors` is the node's current view of its radio neighbors.
pub fn gpsr_forward(
    node: NodeId,
    pos: Position,
    dest: Position,
    neighbors: &[(NodeId, Position)],
    prev: Option<(NodeId, Position)>,
    header: &mut PerimeterHeader,
    planarization: Planarization,
) -> GpsrStep {
    if header.mode == GpsrMode::Perimeter && distance(pos, dest) < distance(header.entry_point, dest) {
        header.mode = GpsrMode::Greedy;
        header.first_edge = None;
    }
    if header.mode == GpsrMode::Greedy {
        if let Some(n) = greedy_next(pos, dest, neighbors) {
            return GpsrStep::Greedy(n);
        }
        let planar = planar_neighbors(planarization, node, pos, neighbors);
        let Some(first) = next_ccw(pos, pos.bearing(dest), &planar) else {
            return GpsrStep::Unreachable;
        };
        header.mode = GpsrMode::Perimeter;
        header.entry_point = pos;
        header.face_point = pos;
        header.first_edge = Some((node, first));
        return GpsrStep::Perimeter(first);
    }

    let planar = planar_neighbors(planarization, node, pos, neighbors);
    let reference = match prev.and_then(|(id, p)| lookup(&planar, id).or(Some(p))) {
        Some(pp) => pos.bearing(pp),
        None => pos.bearing(dest),
    };
    let Some(mut next) = next_ccw(pos, reference, &planar) else {
        return GpsrStep::Unreachable;
    };
    let mut changed_face = false;
    // each face change strictly shrinks |face_point, dest|, and there are at
    // most deg(node) candidate edges to rotate through
    for _ in 0..planar.len() {
        let np = lookup(&planar, next).expect("chosen from planar set");
        match segment_intersection(pos, np, header.entry_point, dest) {
            Some(cross) if distance(cross, dest) < distance(header.face_point, dest) - 1e-9 => {
                header.face_point = cross;
                next = next_ccw(pos, pos.bearing(np), &planar).expect("non-empty planar set");
                header.first_edge = Some((node, next));
                changed_face = true;
            }
            _ => break,
        }
    }
    if !changed_face && header.first_edge == Some((node, next)) {
        return GpsrStep::Unreachable;
    }
    GpsrStep::Perimeter(next)
}

/// Outcome of tracing one packet through a static deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticRoute {
    pub path: Vec<NodeId>,
    pub delivered: bool,
    pub perimeter_hops: usize,
}

/// Traces GPSR hop by hop on a frozen deployment with perfect neighbor
/// knowledge. `hop_limit` bounds runaway loops.
pub fn gpsr_route(
    dep: &Deployment,
    src: NodeId,
    dst: NodeId,
    planarization: Planarization,
    hop_limit: usize,
) -> StaticRoute {
    let adj = dep.adjacency();
    let dest = dep.pos(dst);
    let mut header = PerimeterHeader::default();
    let mut path = vec![src];
    let mut prev: Option<NodeId> = None;
    let mut cur = src;
    let mut perimeter_hops = 0;
    while cur != dst && path.len() <= hop_limit {
        let nbrs: Vec<(NodeId, Position)> = adj[cur.idx()].iter().map(|&v| (v, dep.pos(v))).collect();
        let step = gpsr_forward(
            cur,
            dep.pos(cur),
            dest,
            &nbrs,
            prev.map(|p| (p, dep.pos(p))),
            &mut header,
            planarization,
        );
        let next = match step {
            GpsrStep::Greedy(n) => n,
            GpsrStep::Perimeter(n) => {
                perimeter_hops += 1;
                n
            }
            GpsrStep::Unreachable => break,
        };
        prev = Some(cur);
        cur = next;
        path.push(cur);
    }
    StaticRoute {
        delivered: cur == dst,
        path,
        perimeter_hops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::planar::planarize;
    use crate::topology::{Field, Role};

    fn dep(points: &[(f64, f64)], range: f64) -> Deployment {
        let n = points.len();
        Deployment::from_positions(
            Field::default(),
            range,
            points.iter().enumerate().map(|(i, &(x, y))| {
                let role = if i == 0 {
                    Role::Source
                } else if i == n - 1 {
                    Role::Sink
                } else {
                    Role::Relay
                };
                (Position::new(x, y), role)
            }),
        )
        .unwrap()
    }

    #[test]
    fn direct_neighbor_is_taken() {
        let d = dep(&[(10.0, 90.0), (40.0, 120.0), (70.0, 90.0)], 80.0);
        let r = gpsr_route(&d, NodeId(0), NodeId(2), Planarization::Gabriel, 100);
        assert_eq!(r.path, vec![NodeId(0), NodeId(2)]);
        assert!(r.delivered);
    }

    #[test]
    fn local_minimum_enters_perimeter() {
        // A at (100,100) is closer to D than x and y; the only way round is
        // through x/y and then over the top.
        let d = dep(
            &[
                (100.0, 100.0), // A (source)
                (50.0, 140.0),  // x
                (50.0, 60.0),   // y
                (60.0, 190.0),  // top-left
                (130.0, 195.0), // top-mid
                (200.0, 185.0), // top-right
                (255.0, 135.0), // down to D
                (260.0, 100.0), // D (sink)
            ],
            80.0,
        );
        let a = d.pos(NodeId(0));
        let dest = d.pos(NodeId(7));
        let nbrs: Vec<_> = d.neighbors(NodeId(0)).unwrap().into_iter().map(|v| (v, d.pos(v))).collect();
        assert!(greedy_next(a, dest, &nbrs).is_none());
        let mut h = PerimeterHeader::default();
        let step = gpsr_forward(NodeId(0), a, dest, &nbrs, None, &mut h, Planarization::Gabriel);
        assert!(matches!(step, GpsrStep::Perimeter(_)));
        assert_eq!(h.mode, GpsrMode::Perimeter);
        assert_eq!(h.entry_point, a);

        let r = gpsr_route(&d, NodeId(0), NodeId(7), Planarization::Gabriel, 100);
        assert!(r.delivered, "{:?}", r.path);
        assert!(r.perimeter_hops > 0);
    }

    #[test]
    fn split_graph_drops_after_tour() {
        let d = dep(&[(10.0, 90.0), (60.0, 90.0), (60.0, 150.0), (490.0, 90.0)], 80.0);
        assert!(!d.source_sink_connected());
        let r = gpsr_route(&d, NodeId(0), NodeId(3), Planarization::Gabriel, 1000);
        assert!(!r.delivered);
        let planar_edges = planarize(&d, Planarization::Gabriel).edges().len();
        assert!(r.path.len() - 1 <= 2 * planar_edges + d.len());
    }

    #[test]
    fn isolated_node_is_unreachable() {
        let d = dep(&[(10.0, 90.0), (490.0, 90.0)], 80.0);
        let r = gpsr_route(&d, NodeId(0), NodeId(1), Planarization::Gabriel, 10);
        assert_eq!(r.path, vec![NodeId(0)]);
        assert!(!r.delivered);
    }
}
