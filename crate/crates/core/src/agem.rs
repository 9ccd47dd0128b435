//! AGEM forwarding: adaptive compass candidate selection, score-ranked
//! load balancing driven by per-source hop-count state, and walking-back
//! void bypass. GEAMS is the same engine with the compass sweep disabled.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_offset, distance, Position};
use crate::topology::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompassError {
    #[error("compass config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompassConfig {
    pub alpha0: f64,
    pub delta_alpha: f64,
    pub alpha_max: f64,
    pub n_min: usize,
}

impl Default for CompassConfig {
    fn default() -> Self {
        Self {
            alpha0: 30.0,
            delta_alpha: 10.0,
            alpha_max: 180.0,
            n_min: 2,
        }
    }
}

impl CompassConfig {
    pub fn validate(&self) -> Result<(), CompassError> {
        if !(self.alpha0 > 0.0 && self.alpha0 <= self.alpha_max && self.alpha_max <= 180.0) {
            return Err(CompassError::Invalid(format!(
                "need 0 < alpha0 ({}) <= alpha_max ({}) <= 180",
                self.alpha0, self.alpha_max
            )));
        }
        if !(self.delta_alpha > 0.0) {
            return Err(CompassError::Invalid(format!("delta_alpha {} must be positive", self.delta_alpha)));
        }
        if self.n_min < 2 {
            return Err(CompassError::Invalid(format!("n_min {} must be at least 2", self.n_min)));
        }
        Ok(())
    }
}

/// Result of the adaptive compass sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum CompassOutcome {
    Candidates { ids: Vec<NodeId>, alpha: f64 },
    NeedWalkBack,
}

/// Neighbors strictly closer to `dest` than `pos`.
pub fn closer_neighbors(pos: Position, dest: Position, neighbors: &[(NodeId, Position)]) -> Vec<(NodeId, Position)> {
    let here = distance(pos, dest);
    neighbors
        .iter()
        .copied()
        .filter(|&(_, p)| distance(p, dest) < here)
        .collect()
}

/// Widens a cone around u→d from `alpha0` in steps of `delta_alpha` until
/// it holds `n_min` of the (already greedy-filtered) candidates. At
/// `alpha_max` any non-empty cone is accepted; an empty one means the node
/// faces a void. With `geams` set the sweep is skipped and every candidate
/// is returned at 180°.
pub fn adaptive_candidates(
    pos: Position,
    dest: Position,
    candidates: &[(NodeId, Position)],
    cfg: &CompassConfig,
    geams: bool,
) -> CompassOutcome {
    if candidates.is_empty() {
        return CompassOutcome::NeedWalkBack;
    }
    let offsets: Vec<(NodeId, f64)> = candidates
        .iter()
        .map(|&(id, p)| (id, angle_offset(pos, p, dest).expect("candidate distinct from forwarder")))
        .collect();
    if geams {
        return CompassOutcome::Candidates {
            ids: offsets.iter().map(|c| c.0).collect(),
            alpha: 180.0,
        };
    }
    let mut step = 0u32;
    loop {
        let alpha = (cfg.alpha0 + step as f64 * cfg.delta_alpha).min(cfg.alpha_max);
        let ids: Vec<NodeId> = offsets.iter().filter(|c| c.1 <= alpha).map(|c| c.0).collect();
        if ids.len() >= cfg.n_min {
            return CompassOutcome::Candidates { ids, alpha };
        }
        if alpha >= cfg.alpha_max {
            return if ids.is_empty() {
                CompassOutcome::NeedWalkBack
            } else {
                CompassOutcome::Candidates { ids, alpha }
            };
        }
        step += 1;
    }
}

/// Candidates sorted by descending score, with the 1-based index `j` of the
/// entry whose score is closest to the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BestNeighborSet {
    pub entries: Vec<(NodeId, f64)>,
    pub j: usize,
}

impl BestNeighborSet {
    pub fn m(&self) -> usize {
        self.entries.len()
    }

    /// 1-based access.
    pub fn get(&self, index: usize) -> NodeId {
        self.entries[index - 1].0
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }
}

/// Returns `None` for an empty candidate list.
pub fn build_best_neighbor_set(scored: &[(NodeId, f64)]) -> Option<BestNeighborSet> {
    if scored.is_empty() {
        return None;
    }
    let mut entries = scored.to_vec();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mean = entries.iter().map(|e| e.1).sum::<f64>() / entries.len() as f64;
    let mut j = 1;
    let mut best = f64::INFINITY;
    for (i, e) in entries.iter().enumerate() {
        let gap = (e.1 - mean).abs();
        if gap < best {
            best = gap;
            j = i + 1;
        }
    }
    Some(BestNeighborSet { entries, j })
}

/// Per-source pair kept by a forwarder: the hop-count estimate `h` and the
/// stored mean-score index `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopRecord {
    pub h: i64,
    pub j: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmartChoice {
    pub next: NodeId,
    /// 1-based rank of `next` in the best neighbor set.
    pub index: usize,
    pub record: HopRecord,
}

/// One step of the smart greedy forwarding rule.
///
/// An unknown source is sent to the best neighbor. A known source is sent to
/// rank `j + (H - hop_count)`, clamped to `[1, m]`; clamping shifts `H` so
/// the next packet with the same hop count lands on the clamped rank again.
/// A stored `j` from a larger neighbor set is clamped into `[1, m]` before
/// use, and the current set's `j` is what gets stored.
pub fn smart_forward(stored: Option<HopRecord>, bns: &BestNeighborSet, hop_count: u32) -> SmartChoice {
    let m = bns.m() as i64;
    assert!(m >= 1, "best neighbor set is empty");
    let Some(HopRecord { h, j }) = stored else {
        return SmartChoice {
            next: bns.get(1),
            index: 1,
            record: HopRecord {
                h: hop_count as i64,
                j: bns.j,
            },
        };
    };
    let mut h = h;
    let j = (j as i64).clamp(1, m);
    let delta = h - hop_count as i64;
    let mut index = j + delta;
    if index <= 0 {
        h = h - index + 1;
        index = 1;
    } else if index > m {
        h = h - index + m;
        index = m;
    }
    let index = index as usize;
    SmartChoice {
        next: bns.get(index),
        index,
        record: HopRecord { h, j: bns.j },
    }
}

/// Hop-count state of one forwarder, keyed by source node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamState {
    records: BTreeMap<NodeId, HopRecord>,
}

impl StreamState {
    pub fn get(&self, source: NodeId) -> Option<HopRecord> {
        self.records.get(&source).copied()
    }

    pub fn forward(&mut self, source: NodeId, bns: &BestNeighborSet, hop_count: u32) -> SmartChoice {
        let choice = smart_forward(self.get(source), bns, hop_count);
        self.records.insert(source, choice.record);
        choice
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoidAnnouncement {
    pub announcer: NodeId,
    pub sink: NodeId,
}

/// What a node has learned about voids: neighbors that declared they cannot
/// make progress toward a sink, and the sinks this node itself is blocked for.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoidState {
    blocked: BTreeSet<(NodeId, NodeId)>,
    self_blocked: BTreeSet<NodeId>,
}

impl VoidState {
    pub fn handle_announcement(&mut self, ann: VoidAnnouncement) {
        self.blocked.insert((ann.announcer, ann.sink));
    }

    pub fn is_blocked(&self, neighbor: NodeId, sink: NodeId) -> bool {
        self.blocked.contains(&(neighbor, sink))
    }

    pub fn is_self_blocked(&self, sink: NodeId) -> bool {
        self.self_blocked.contains(&sink)
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.len()
    }
}

/// Value-returning form of [`VoidState::handle_announcement`].
pub fn handle_void_announcement(state: &VoidState, ann: VoidAnnouncement) -> VoidState {
    let mut s = state.clone();
    s.handle_announcement(ann);
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkBack {
    /// Present the first time this node blocks itself for the sink.
    pub announcement: Option<VoidAnnouncement>,
    /// `None` when every neighbor is blocked: the packet is lost in an
    /// isolated void.
    pub delegate: Option<NodeId>,
}

/// Enters walking-back mode at `node`: marks it blocked for `sink`, and picks
/// as delegate the nearest neighbor (to `pos`) that is not blocked for the
/// sink. Neighbors already on the packet's trail are used only when nothing
/// else is left.
pub fn enter_walking_back(
    node: NodeId,
    pos: Position,
    sink: NodeId,
    state: &mut VoidState,
    neighbors: &[(NodeId, Position)],
    trail: &[NodeId],
) -> WalkBack {
    let announcement = state.self_blocked.insert(sink).then_some(VoidAnnouncement {
        announcer: node,
        sink,
    });
    let nearest = |allow_trail: bool| {
        neighbors
            .iter()
            .filter(|&&(id, _)| id != node && !state.is_blocked(id, sink))
            .filter(|&&(id, _)| allow_trail || !trail.contains(&id))
            .map(|&(id, p)| (distance(pos, p), id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    };
    let delegate = nearest(false).or_else(|| nearest(true));
    WalkBack {
        announcement,
        delegate,
    }
}
