use serde::{Deserialize, Serialize};

use crate::baselines::PerimeterHeader;
use crate::topology::NodeId;

/// Longest visited-node trail a packet carries.
pub const TRAIL_CAP: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PacketKind {
    Data,
    Beacon,
    VoidAnnouncement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub stream_id: u32,
    pub source: NodeId,
    pub sink: NodeId,
    pub seq: u32,
    /// Incremented by the sender just before each transmission.
    pub hop_count: u32,
    pub size_bits: u64,
    pub created_at: f64,
    pub kind: PacketKind,
    pub prev_hop: Option<NodeId>,
    /// Most recent transmitters, oldest first.
    pub trail: Vec<NodeId>,
    pub gpsr: PerimeterHeader,
    /// TPGF path index for source-routed packets.
    pub route: Option<usize>,
    /// Time of the last hop event, for causality checks.
    pub last_event_at: f64,
}

impl Packet {
    pub fn data(stream_id: u32, source: NodeId, sink: NodeId, seq: u32, size_bits: u64, created_at: f64) -> Self {
        Self {
            stream_id,
            source,
            sink,
            seq,
            hop_count: 0,
            size_bits,
            created_at,
            kind: PacketKind::Data,
            prev_hop: None,
            trail: Vec::new(),
            gpsr: PerimeterHeader::default(),
            route: None,
            last_event_at: created_at,
        }
    }

    pub fn record_hop(&mut self, from: NodeId) {
        self.hop_count += 1;
        self.prev_hop = Some(from);
        if self.trail.len() == TRAIL_CAP {
            self.trail.remove(0);
        }
        self.trail.push(from);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    QueueOverflow,
    /// The holder or the receiving next hop has no energy left.
    DeadNode,
    IsolatedVoid,
    PerimeterLoop,
    NoRoute,
    HopLimit,
}

impl DropReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DropReason::QueueOverflow => "queue_overflow",
            DropReason::DeadNode => "dead_node",
            DropReason::IsolatedVoid => "isolated_void",
            DropReason::PerimeterLoop => "perimeter_loop",
            DropReason::NoRoute => "no_route",
            DropReason::HopLimit => "hop_limit",
        }
    }
}
