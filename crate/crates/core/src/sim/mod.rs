//! Single-threaded discrete-event simulation of one scenario.
//!
//! Link model: a node serializes one packet at a time at `data_rate`; the
//! receiver gets it `per_hop_processing` seconds after serialization ends.
//! Reception is never contended and there is no interference, so losses come
//! only from queue overflow, dead nodes and routing failures.

mod events;
mod packet;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use events::{EventQueue, Priority};
pub use packet::{DropReason, Packet, PacketKind, TRAIL_CAP};

use crate::agem::{
    adaptive_candidates, build_best_neighbor_set, closer_neighbors, enter_walking_back, CompassOutcome,
    StreamState, VoidAnnouncement, VoidState,
};
use crate::baselines::{gpsr_forward, tpgf_multipath, GpsrStep, TpgfPathSet};
use crate::energy::{neighbor_score, rx_energy, tx_energy, EnergyModelParams, EnergyStore};
use crate::geometry::{distance, Position};
use crate::metrics::{self, DropCounts, MetricsRecord, LED_BIN_WIDTH};
use crate::scenario::{ConfigError, Protocol, Scenario};
use crate::topology::{Deployment, NodeId, Role, TopologyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// What a node believes about one radio neighbor, refreshed by beacons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub pos: Position,
    pub energy: f64,
    pub distance: f64,
    pub last_heard: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopMode {
    /// Sink in range, sent straight to it.
    Direct,
    Smart,
    WalkBack,
    Greedy,
    Perimeter,
    SourceRoute,
}

impl HopMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HopMode::Direct => "direct",
            HopMode::Smart => "smart",
            HopMode::WalkBack => "walkback",
            HopMode::Greedy => "greedy",
            HopMode::Perimeter => "perimeter",
            HopMode::SourceRoute => "source_route",
        }
    }
}

/// One forwarding decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopDecision {
    pub time: f64,
    pub node: NodeId,
    pub next: NodeId,
    pub stream: u32,
    pub seq: u32,
    pub hop_count: u32,
    pub mode: HopMode,
    pub alpha: Option<f64>,
    /// 1-based rank in the best neighbor set.
    pub index: Option<usize>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub stream: u32,
    pub seq: u32,
    pub created_at: f64,
    pub delivered_at: f64,
    pub hop_count: u32,
}

impl Delivery {
    pub fn delay(&self) -> f64 {
        self.delivered_at - self.created_at
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub time: f64,
    pub node: NodeId,
    pub stream: u32,
    pub seq: u32,
    pub reason: DropReason,
}

/// A node that declared itself unable to progress toward `sink`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub node: NodeId,
    pub sink: NodeId,
    pub blocked_at: f64,
    /// When neighbors learned about it.
    pub announced_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: &'static str,
    pub node: NodeId,
    pub stream: Option<u32>,
    pub seq: Option<u32>,
    pub detail: String,
}

/// Energy booked for one data hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopEnergy {
    pub bits: u64,
    pub distance: f64,
    pub tx_requested: f64,
    pub tx_applied: f64,
    pub rx_requested: f64,
    pub rx_applied: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub violations: Vec<String>,
    pub checked_hops: u64,
    pub max_energy_drift: f64,
}

impl IntegrityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: MetricsRecord,
    pub residuals: Vec<f64>,
    pub deliveries: Vec<Delivery>,
    pub drops: Vec<DropRecord>,
    pub decisions: Vec<HopDecision>,
    pub blocks: Vec<BlockRecord>,
    pub events: Vec<TraceEvent>,
    pub tpgf: Option<TpgfPathSet>,
    pub integrity: IntegrityReport,
}

impl RunOutput {
    /// Relays that transmitted at least one data packet, ascending.
    pub fn relays_used(&self, dep: &Deployment) -> BTreeSet<NodeId> {
        self.decisions
            .iter()
            .map(|d| d.node)
            .filter(|&n| dep.nodes[n.idx()].role == Role::Relay)
            .collect()
    }
}

struct NodeState {
    pos: Position,
    energy: EnergyStore,
    table: BTreeMap<NodeId, NeighborEntry>,
    queue: VecDeque<Packet>,
    busy: bool,
    streams: StreamState,
    voids: VoidState,
}

enum Ev {
    Image(u32),
    TxDone(NodeId),
    Arrive {
        node: NodeId,
        from: NodeId,
        pkt: Packet,
        tx_requested: f64,
        tx_applied: f64,
        tx_clamped: bool,
    },
    Beacon(NodeId),
    Announce(VoidAnnouncement),
}

enum Decision {
    Forward {
        next: NodeId,
        mode: HopMode,
        alpha: Option<f64>,
        index: Option<usize>,
        scores: Vec<f64>,
    },
    Drop(DropReason),
}

impl Decision {
    fn plain(next: NodeId, mode: HopMode) -> Self {
        Decision::Forward {
            next,
            mode,
            alpha: None,
            index: None,
            scores: Vec::new(),
        }
    }
}

const STREAM_ID: u32 = 0;
const ENERGY_TOL: f64 = 1e-9;

struct Sim<'a> {
    sc: &'a Scenario,
    dep: &'a Deployment,
    params: EnergyModelParams,
    q: EventQueue<Ev>,
    nodes: Vec<NodeState>,
    radio: Vec<Vec<NodeId>>,
    source: NodeId,
    sink: NodeId,
    tpgf: Option<TpgfPathSet>,
    images_done: u32,
    next_seq: u32,
    outstanding: u64,
    sent: u64,
    delivered_keys: BTreeSet<(u32, u32)>,
    duplicates: u64,
    deliveries: Vec<Delivery>,
    drops: Vec<DropRecord>,
    decisions: Vec<HopDecision>,
    blocks: Vec<BlockRecord>,
    events: Vec<TraceEvent>,
    integrity: IntegrityReport,
    initial_total: f64,
    expected_total: f64,
    applied_total: f64,
    clamps: u64,
    walkbacks: u64,
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario, dep: &'a Deployment) -> Self {
        let s = &sc.settings;
        let initial: Vec<f64> = dep.ids().map(|id| s.energy.initial_for(id)).collect();
        let radio = dep.adjacency();
        let nodes: Vec<NodeState> = dep
            .nodes
            .iter()
            .map(|n| {
                let table = radio[n.id.idx()]
                    .iter()
                    .map(|&v| {
                        let p = dep.pos(v);
                        (
                            v,
                            NeighborEntry {
                                pos: p,
                                energy: initial[v.idx()],
                                distance: distance(n.pos(), p),
                                last_heard: 0.0,
                            },
                        )
                    })
                    .collect();
                NodeState {
                    pos: n.pos(),
                    energy: EnergyStore::new(initial[n.id.idx()]),
                    table,
                    queue: VecDeque::new(),
                    busy: false,
                    streams: StreamState::default(),
                    voids: VoidState::default(),
                }
            })
            .collect();
        let initial_total: f64 = initial.iter().sum();
        let tpgf = (sc.protocol == Protocol::Tpgf)
            .then(|| tpgf_multipath(dep, dep.source(), dep.sink(), s.tpgf.max_paths));
        Self {
            sc,
            dep,
            params: s.energy_params(),
            q: EventQueue::default(),
            nodes,
            radio,
            source: dep.source(),
            sink: dep.sink(),
            tpgf,
            images_done: 0,
            next_seq: 0,
            outstanding: 0,
            sent: 0,
            delivered_keys: BTreeSet::new(),
            duplicates: 0,
            deliveries: Vec::new(),
            drops: Vec::new(),
            decisions: Vec::new(),
            blocks: Vec::new(),
            events: Vec::new(),
            integrity: IntegrityReport::default(),
            initial_total,
            expected_total: initial_total,
            applied_total: 0.0,
            clamps: 0,
            walkbacks: 0,
        }
    }

    fn now(&self) -> f64 {
        self.q.now()
    }

    fn trace(&mut self, kind: &'static str, node: NodeId, pkt: Option<&Packet>, detail: String) {
        if self.sc.settings.trace.events {
            self.events.push(TraceEvent {
                time: self.now(),
                kind,
                node,
                stream: pkt.map(|p| p.stream_id),
                seq: pkt.map(|p| p.seq),
                detail,
            });
        }
    }

    fn debit(&mut self, node: NodeId, amount: f64) -> crate::energy::Debit {
        let d = self.nodes[node.idx()].energy.debit(amount);
        self.applied_total += d.applied;
        self.expected_total -= d.applied;
        if d.clamped {
            self.clamps += 1;
            self.trace("node_died", node, None, format!("requested {amount:e}"));
        }
        d
    }

    fn alive(&self, node: NodeId) -> bool {
        !self.nodes[node.idx()].energy.is_dead()
    }

    fn active(&self) -> bool {
        self.images_done < self.sc.settings.traffic.images || self.outstanding > 0
    }

    fn stale_after(&self) -> f64 {
        3.0 * self.sc.settings.beacon.interval
    }

    /// Neighbors the node currently believes in, ascending by id.
    fn table_view(&self, node: NodeId) -> Vec<(NodeId, Position)> {
        let b = &self.sc.settings.beacon;
        let now = self.now();
        let horizon = self.stale_after();
        self.nodes[node.idx()]
            .table
            .iter()
            .filter(|(_, e)| !b.enabled || now - e.last_heard < horizon)
            .map(|(&id, e)| (id, e.pos))
            .collect()
    }

    fn check_energy(&mut self) {
        let actual: f64 = self.nodes.iter().map(|n| n.energy.residual).sum();
        let drift = (actual - self.expected_total).abs();
        self.integrity.max_energy_drift = self.integrity.max_energy_drift.max(drift);
        if drift > ENERGY_TOL * self.initial_total {
            self.integrity
                .violations
                .push(format!("t={}: network energy {actual} but ledger says {}", self.now(), self.expected_total));
        }
    }

    fn run(mut self) -> RunOutput {
        let s = &self.sc.settings;
        let mut rng = ChaCha8Rng::seed_from_u64(self.sc.seed ^ 0x05ee_d0fb_e4c0);
        if s.beacon.enabled {
            for id in self.dep.ids() {
                let phase = rng.gen_range(0.0..s.beacon.interval);
                self.q.schedule(phase, Priority::Beacon, Ev::Beacon(id));
            }
        }
        if s.traffic.images > 0 {
            self.q.schedule(0.0, Priority::Data, Ev::Image(0));
        }
        while let Some((_, ev)) = self.q.pop() {
            match ev {
                Ev::Image(i) => self.on_image(i),
                Ev::TxDone(n) => {
                    self.nodes[n.idx()].busy = false;
                    self.serve(n);
                }
                Ev::Arrive {
                    node,
                    from,
                    pkt,
                    tx_requested,
                    tx_applied,
                    tx_clamped,
                } => self.on_arrive(node, from, pkt, tx_requested, tx_applied, tx_clamped),
                Ev::Beacon(n) => self.on_beacon(n),
                Ev::Announce(ann) => self.on_announce(ann),
            }
            self.check_energy();
        }
        self.finish()
    }

    fn on_image(&mut self, index: u32) {
        let t = self.sc.settings.traffic;
        let now = self.now();
        for bits in t.fragments() {
            let mut pkt = Packet::data(STREAM_ID, self.source, self.sink, self.next_seq, bits, now);
            self.next_seq += 1;
            self.sent += 1;
            self.outstanding += 1;
            if let Some(set) = &self.tpgf {
                if set.paths.is_empty() {
                    self.drop_packet(self.source, &pkt, DropReason::NoRoute);
                    continue;
                }
                pkt.route = Some(pkt.seq as usize % set.paths.len());
            }
            self.trace("generate", self.source, Some(&pkt), format!("image {index} bits {bits}"));
            self.enqueue(self.source, pkt);
        }
        self.images_done = index + 1;
        if index + 1 < t.images {
            self.q
                .schedule((index + 1) as f64 * t.image_period, Priority::Data, Ev::Image(index + 1));
        }
    }

    fn drop_packet(&mut self, node: NodeId, pkt: &Packet, reason: DropReason) {
        self.outstanding -= 1;
        self.trace("drop", node, Some(pkt), reason.as_str().to_string());
        self.drops.push(DropRecord {
            time: self.now(),
            node,
            stream: pkt.stream_id,
            seq: pkt.seq,
            reason,
        });
    }

    /// Drop-tail FIFO admission.
    fn enqueue(&mut self, node: NodeId, pkt: Packet) {
        let cap = self.sc.settings.link.queue_capacity;
        if self.nodes[node.idx()].queue.len() >= cap {
            self.drop_packet(node, &pkt, DropReason::QueueOverflow);
            return;
        }
        self.nodes[node.idx()].queue.push_back(pkt);
        if !self.nodes[node.idx()].busy {
            self.serve(node);
        }
    }

    /// Starts transmitting the next packet that can be routed.
    fn serve(&mut self, node: NodeId) {
        while let Some(mut pkt) = self.nodes[node.idx()].queue.pop_front() {
            if !self.alive(node) {
                self.drop_packet(node, &pkt, DropReason::DeadNode);
                continue;
            }
            if pkt.hop_count >= self.sc.settings.hop_limit {
                self.drop_packet(node, &pkt, DropReason::HopLimit);
                continue;
            }
            match self.decide(node, &mut pkt) {
                Decision::Drop(reason) => self.drop_packet(node, &pkt, reason),
                Decision::Forward {
                    next,
                    mode,
                    alpha,
                    index,
                    scores,
                } => {
                    self.decisions.push(HopDecision {
                        time: self.now(),
                        node,
                        next,
                        stream: pkt.stream_id,
                        seq: pkt.seq,
                        hop_count: pkt.hop_count,
                        mode,
                        alpha,
                        index,
                        scores,
                    });
                    self.transmit(node, next, pkt, mode);
                    return;
                }
            }
        }
    }

    fn transmit(&mut self, node: NodeId, next: NodeId, mut pkt: Packet, mode: HopMode) {
        let link = self.sc.settings.link;
        let d = distance(self.nodes[node.idx()].pos, self.dep.pos(next));
        let tx_requested = tx_energy(&self.params, pkt.size_bits as f64, d).expect("non-negative inputs");
        let debit = self.debit(node, tx_requested);
        pkt.record_hop(node);
        pkt.last_event_at = self.now();
        let air = pkt.size_bits as f64 / link.data_rate;
        self.nodes[node.idx()].busy = true;
        let now = self.now();
        self.q.schedule(now + air, Priority::Data, Ev::TxDone(node));
        if debit.clamped {
            // the battery ran out mid-transmission
            self.drop_packet(node, &pkt, DropReason::DeadNode);
            return;
        }
        self.trace("tx", node, Some(&pkt), format!("to {next} mode {}", mode.as_str()));
        self.q.schedule(
            now + air + link.per_hop_processing,
            Priority::Data,
            Ev::Arrive {
                node: next,
                from: node,
                pkt,
                tx_requested,
                tx_applied: debit.applied,
                tx_clamped: debit.clamped,
            },
        );
    }

    fn on_arrive(
        &mut self,
        node: NodeId,
        from: NodeId,
        mut pkt: Packet,
        tx_requested: f64,
        tx_applied: f64,
        tx_clamped: bool,
    ) {
        if pkt.last_event_at > self.now() {
            self.integrity
                .violations
                .push(format!("packet {} arrived at {node} before it was sent", pkt.seq));
        }
        pkt.last_event_at = self.now();
        if !self.alive(node) {
            self.drop_packet(node, &pkt, DropReason::DeadNode);
            return;
        }
        let rx_requested = rx_energy(&self.params, pkt.size_bits as f64).expect("non-negative bits");
        let rx = self.debit(node, rx_requested);
        let hop = HopEnergy {
            bits: pkt.size_bits,
            distance: distance(self.dep.pos(from), self.dep.pos(node)),
            tx_requested,
            tx_applied,
            rx_requested,
            rx_applied: rx.applied,
            clamped: tx_clamped || rx.clamped,
        };
        self.check_hop(&hop);
        if rx.clamped {
            self.drop_packet(node, &pkt, DropReason::DeadNode);
            return;
        }
        self.trace("rx", node, Some(&pkt), format!("from {from}"));
        if node == pkt.sink {
            self.deliver(pkt);
        } else {
            self.enqueue(node, pkt);
        }
    }

    fn check_hop(&mut self, hop: &HopEnergy) {
        self.integrity.checked_hops += 1;
        let k = hop.bits as f64;
        let want = tx_energy(&self.params, k, hop.distance).expect("valid") + rx_energy(&self.params, k).expect("valid");
        let booked = hop.tx_requested + hop.rx_requested;
        let applied = hop.tx_applied + hop.rx_applied;
        let bad_request = (booked - want).abs() > ENERGY_TOL * want;
        let bad_apply = !hop.clamped && (applied - want).abs() > ENERGY_TOL * want;
        if bad_request || bad_apply {
            self.integrity.violations.push(format!(
                "hop of {} bits over {} m cost {applied} (booked {booked}), expected {want}",
                hop.bits, hop.distance
            ));
        }
    }

    fn deliver(&mut self, pkt: Packet) {
        self.outstanding -= 1;
        if !self.delivered_keys.insert((pkt.stream_id, pkt.seq)) {
            self.duplicates += 1;
            return;
        }
        self.trace("deliver", pkt.sink, Some(&pkt), format!("hops {}", pkt.hop_count));
        self.deliveries.push(Delivery {
            stream: pkt.stream_id,
            seq: pkt.seq,
            created_at: pkt.created_at,
            delivered_at: self.now(),
            hop_count: pkt.hop_count,
        });
    }

    fn on_beacon(&mut self, node: NodeId) {
        if !self.alive(node) {
            return;
        }
        let b = self.sc.settings.beacon;
        let now = self.now();
        let horizon = self.stale_after();
        self.nodes[node.idx()]
            .table
            .retain(|_, e| now - e.last_heard < horizon);
        if b.charge {
            let cost = tx_energy(&self.params, b.bits as f64, self.dep.radio_range).expect("valid");
            self.debit(node, cost);
        }
        let energy = self.nodes[node.idx()].energy.residual;
        let pos = self.nodes[node.idx()].pos;
        let receivers = self.radio[node.idx()].clone();
        for v in receivers {
            if !self.alive(v) {
                continue;
            }
            if b.charge {
                let cost = rx_energy(&self.params, b.bits as f64).expect("valid");
                self.debit(v, cost);
            }
            let vp = self.nodes[v.idx()].pos;
            self.nodes[v.idx()].table.insert(
                node,
                NeighborEntry {
                    pos,
                    energy,
                    distance: distance(pos, vp),
                    last_heard: now,
                },
            );
        }
        if self.active() && self.alive(node) {
            self.q.schedule(now + b.interval, Priority::Beacon, Ev::Beacon(node));
        }
    }

    fn on_announce(&mut self, ann: VoidAnnouncement) {
        let b = self.sc.settings.beacon;
        let receivers = self.radio[ann.announcer.idx()].clone();
        for v in receivers {
            if !self.alive(v) {
                continue;
            }
            if b.charge {
                let cost = rx_energy(&self.params, b.bits as f64).expect("valid");
                self.debit(v, cost);
            }
            self.nodes[v.idx()].voids.handle_announcement(ann);
        }
        let now = self.now();
        if let Some(rec) = self
            .blocks
            .iter_mut()
            .find(|r| r.node == ann.announcer && r.sink == ann.sink)
        {
            rec.announced_at = now;
        }
        self.trace("void_announce", ann.announcer, None, format!("sink {}", ann.sink));
    }

    fn decide(&mut self, node: NodeId, pkt: &mut Packet) -> Decision {
        match self.sc.protocol {
            Protocol::Agem => self.decide_agem(node, pkt, false),
            Protocol::Geams => self.decide_agem(node, pkt, true),
            Protocol::Gpsr => self.decide_gpsr(node, pkt),
            Protocol::Tpgf => self.decide_tpgf(node, pkt),
        }
    }

    fn decide_agem(&mut self, node: NodeId, pkt: &mut Packet, geams: bool) -> Decision {
        let view = self.table_view(node);
        let sink = pkt.sink;
        if view.iter().any(|&(id, _)| id == sink) {
            return Decision::plain(sink, HopMode::Direct);
        }
        let pos = self.nodes[node.idx()].pos;
        let dest = self.dep.pos(sink);
        let state = &self.nodes[node.idx()];
        let candidates: Vec<(NodeId, Position)> = if state.voids.is_self_blocked(sink) {
            Vec::new()
        } else {
            closer_neighbors(pos, dest, &view)
                .into_iter()
                .filter(|&(id, _)| !state.voids.is_blocked(id, sink))
                .collect()
        };
        match adaptive_candidates(pos, dest, &candidates, &self.sc.settings.compass, geams) {
            CompassOutcome::Candidates { ids, alpha } => {
                let scored: Vec<(NodeId, f64)> = ids
                    .iter()
                    .map(|id| {
                        let e = &state.table[id];
                        let s = neighbor_score(&self.params, e.energy.max(0.0), e.distance).expect("valid");
                        (*id, s)
                    })
                    .collect();
                let bns = build_best_neighbor_set(&scored).expect("non-empty candidates");
                let choice = self.nodes[node.idx()]
                    .streams
                    .forward(pkt.source, &bns, pkt.hop_count);
                Decision::Forward {
                    next: choice.next,
                    mode: HopMode::Smart,
                    alpha: Some(alpha),
                    index: Some(choice.index),
                    scores: bns.scores(),
                }
            }
            CompassOutcome::NeedWalkBack => {
                let wb = enter_walking_back(
                    node,
                    pos,
                    sink,
                    &mut self.nodes[node.idx()].voids,
                    &view,
                    &pkt.trail,
                );
                if let Some(ann) = wb.announcement {
                    self.announce(ann);
                }
                match wb.delegate {
                    Some(next) => Decision::plain(next, HopMode::WalkBack),
                    None => Decision::Drop(DropReason::IsolatedVoid),
                }
            }
        }
    }

    fn announce(&mut self, ann: VoidAnnouncement) {
        let b = self.sc.settings.beacon;
        self.walkbacks += 1;
        if b.charge {
            let cost = tx_energy(&self.params, b.bits as f64, self.dep.radio_range).expect("valid");
            self.debit(ann.announcer, cost);
        }
        let now = self.now();
        let at = now + b.bits as f64 / self.sc.settings.link.data_rate;
        self.blocks.push(BlockRecord {
            node: ann.announcer,
            sink: ann.sink,
            blocked_at: now,
            announced_at: at,
        });
        self.trace("walkback", ann.announcer, None, format!("sink {}", ann.sink));
        self.q.schedule(at, Priority::Control, Ev::Announce(ann));
    }

    fn decide_gpsr(&mut self, node: NodeId, pkt: &mut Packet) -> Decision {
        let view = self.table_view(node);
        let pos = self.nodes[node.idx()].pos;
        let dest = self.dep.pos(pkt.sink);
        let prev = pkt.prev_hop.map(|p| (p, self.dep.pos(p)));
        let step = gpsr_forward(
            node,
            pos,
            dest,
            &view,
            prev,
            &mut pkt.gpsr,
            self.sc.settings.gpsr.planarization,
        );
        match step {
            GpsrStep::Greedy(n) if n == pkt.sink => Decision::plain(n, HopMode::Direct),
            GpsrStep::Greedy(n) => Decision::plain(n, HopMode::Greedy),
            GpsrStep::Perimeter(n) => Decision::plain(n, HopMode::Perimeter),
            GpsrStep::Unreachable => Decision::Drop(DropReason::PerimeterLoop),
        }
    }

    fn decide_tpgf(&mut self, node: NodeId, pkt: &mut Packet) -> Decision {
        let set = self.tpgf.as_ref().expect("tpgf paths computed");
        let Some(path) = pkt.route.and_then(|r| set.paths.get(r)) else {
            return Decision::Drop(DropReason::NoRoute);
        };
        match path.iter().position(|&v| v == node) {
            Some(i) if i + 1 < path.len() => Decision::plain(path[i + 1], HopMode::SourceRoute),
            _ => Decision::Drop(DropReason::NoRoute),
        }
    }

    fn finish(mut self) -> RunOutput {
        let dep = self.dep;
        let s = &self.sc.settings;
        let residuals: Vec<f64> = self.nodes.iter().map(|n| n.energy.residual).collect();
        let e0 = s.energy.initial_energy;
        let (ged_mean, ged_std) = metrics::ged(&residuals);
        let led_input: Vec<(f64, f64)> = self
            .nodes
            .iter()
            .map(|n| (n.pos.x, n.energy.residual))
            .collect();
        let led = metrics::led(&led_input, dep.field.width, LED_BIN_WIDTH);
        let delays: Vec<f64> = self.deliveries.iter().map(Delivery::delay).collect();
        let delay = metrics::delay_stats(&delays);
        let delivered = self.deliveries.len() as u64;
        let mut drops = DropCounts::default();
        for d in &self.drops {
            match d.reason {
                DropReason::QueueOverflow => drops.queue += 1,
                DropReason::DeadNode => drops.dead += 1,
                DropReason::IsolatedVoid => drops.isolated_void += 1,
                DropReason::PerimeterLoop => drops.perimeter_loop += 1,
                DropReason::NoRoute => drops.no_route += 1,
                DropReason::HopLimit => drops.hop_limit += 1,
            }
        }
        let loss_pct = match metrics::loss_ratio(self.sent, delivered) {
            Ok(l) => l,
            Err(e) => {
                self.integrity.violations.push(e.to_string());
                None
            }
        };
        if self.sent != delivered + drops.total() {
            self.integrity.violations.push(format!(
                "packet conservation: sent {} != delivered {} + dropped {}",
                self.sent,
                delivered,
                drops.total()
            ));
        }
        if self.duplicates > 0 {
            self.integrity
                .violations
                .push(format!("{} duplicate deliveries", self.duplicates));
        }
        let final_total: f64 = residuals.iter().sum();
        let spent = self.initial_total - final_total;
        if (spent - self.applied_total).abs() > ENERGY_TOL * self.initial_total {
            self.integrity.violations.push(format!(
                "energy conservation: network lost {spent} J but debits total {}",
                self.applied_total
            ));
        }
        if delays.iter().any(|&d| !(d > 0.0)) {
            self.integrity.violations.push("non-positive delay".into());
        }
        let relays_used = self
            .decisions
            .iter()
            .map(|d| d.node)
            .filter(|&n| dep.nodes[n.idx()].role == Role::Relay)
            .collect::<BTreeSet<_>>()
            .len();
        let metrics = MetricsRecord {
            protocol: self.sc.protocol.to_string(),
            topology: self.sc.topology.label(),
            n_nodes: dep.relay_count(),
            seed: self.sc.seed,
            deployment: dep.fingerprint(),
            resamples: 0,
            initial_energy: e0,
            ged_mean,
            ged_std,
            ged_mean_pct: 100.0 * ged_mean / e0,
            ged_std_pct: 100.0 * ged_std / e0,
            led,
            delay_mean: delay.map(|d| d.0),
            delay_std: delay.map(|d| d.1),
            sent: self.sent,
            delivered,
            duplicates: self.duplicates,
            loss_pct,
            drops,
            relays_used,
            walkback_episodes: self.walkbacks,
            energy_clamps: self.clamps,
            std_kind: "population".into(),
        };
        RunOutput {
            metrics,
            residuals,
            deliveries: self.deliveries,
            drops: self.drops,
            decisions: self.decisions,
            blocks: self.blocks,
            events: self.events,
            tpgf: self.tpgf,
            integrity: self.integrity,
        }
    }
}

/// Simulates `scenario` on a given deployment.
pub fn simulate(scenario: &Scenario, dep: &Deployment) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    dep.validate()?;
    if let Some(o) = scenario.settings.energy.overrides.iter().find(|o| o.node.idx() >= dep.len()) {
        return Err(TopologyError::UnknownNode(o.node).into());
    }
    Ok(Sim::new(scenario, dep).run())
}

/// Generates the scenario's deployment (resampling until source and sink
/// are connected) and simulates it.
pub fn run_scenario(scenario: &Scenario) -> Result<(Deployment, RunOutput), SimError> {
    scenario.validate()?;
    let (dep, resamples) = scenario.topology.generate_connected(scenario.seed)?;
    let mut out = simulate(scenario, &dep)?;
    out.metrics.resamples = resamples;
    Ok((dep, out))
}
