//! Deployments: random plain fields, fields with circular holes, and the
//! 26-node grid. Connectivity follows a unit-disc model with an inclusive
//! range boundary.

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, Position};

pub const SOURCE_POS: Position = Position::new(10.0, 90.0);
pub const SINK_POS: Position = Position::new(490.0, 90.0);
pub const DEFAULT_RANGE: f64 = 80.0;
pub const DEFAULT_MIN_SEP: f64 = 1.0;
/// Rejection-sampling attempts per node before giving up.
pub const MAX_ATTEMPTS_PER_NODE: u32 = 10_000;
/// Upper bound on reseeding when a connected deployment is required.
pub const MAX_RESAMPLES: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("could not place node {placed} of {requested} after {attempts} attempts (field too crowded)")]
    Placement {
        placed: usize,
        requested: usize,
        attempts: u32,
    },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("invalid deployment: {0}")]
    Invalid(String),
    #[error("source and sink are disconnected")]
    Disconnected,
    #[error("no connected deployment found after {0} resamples")]
    NeverConnected(u32),
    #[error("reading deployment: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing deployment: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub width: f64,
    pub height: f64,
}

impl Default for Field {
    fn default() -> Self {
        Self {
            width: 500.0,
            height: 200.0,
        }
    }
}

impl Field {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Sink,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hole {
    pub center: Position,
    pub radius: f64,
}

impl Hole {
    pub fn contains(&self, p: Position) -> bool {
        distance(self.center, p) < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub role: Role,
}

impl NodeSpec {
    pub fn pos(&self) -> Position {
        Position::new(self.x, self.y)
    }
}

/// A static placement of nodes. Node ids equal their index in `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deployment {
    pub field: Field,
    pub radio_range: f64,
    pub nodes: Vec<NodeSpec>,
    /// How the deployment was generated, when it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorInfo>,
}

/// Generator inputs that reproduce a deployment: `seed` resampled
/// `resamples` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorInfo {
    pub topology: TopologySpec,
    pub seed: u64,
    pub resamples: u32,
}

impl Deployment {
    /// Builds a deployment from raw positions; ids are assigned by index.
    pub fn from_positions(
        field: Field,
        radio_range: f64,
        nodes: impl IntoIterator<Item = (Position, Role)>,
    ) -> Result<Self, TopologyError> {
        let nodes = nodes
            .into_iter()
            .enumerate()
            .map(|(i, (p, role))| NodeSpec {
                id: NodeId(i as u32),
                x: p.x,
                y: p.y,
                role,
            })
            .collect();
        let dep = Self {
            field,
            radio_range,
            nodes,
            generator: None,
        };
        dep.validate()?;
        Ok(dep)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn pos(&self, id: NodeId) -> Position {
        self.nodes[id.idx()].pos()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    fn find_role(&self, role: Role) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.role == role).map(|n| n.id)
    }

    pub fn source(&self) -> NodeId {
        self.find_role(Role::Source).expect("validated deployment has a source")
    }

    pub fn sink(&self) -> NodeId {
        self.find_role(Role::Sink).expect("validated deployment has a sink")
    }

    pub fn relay_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == Role::Relay).count()
    }

    pub fn in_range(&self, a: NodeId, b: NodeId) -> bool {
        a != b && distance(self.pos(a), self.pos(b)) <= self.radio_range
    }

    /// Radio neighbors of `u`, ascending by id.
    pub fn neighbors(&self, u: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        if u.idx() >= self.nodes.len() {
            return Err(TopologyError::UnknownNode(u));
        }
        Ok(self.ids().filter(|&v| self.in_range(u, v)).collect())
    }

    /// Full adjacency lists, ascending by id.
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        self.ids()
            .map(|u| self.ids().filter(|&v| self.in_range(u, v)).collect())
            .collect()
    }

    /// Nodes reachable from `start` through radio links.
    pub fn reachable_from(&self, start: NodeId) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([start]);
        seen[start.idx()] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u.idx()] {
                if !seen[v.idx()] {
                    seen[v.idx()] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn source_sink_connected(&self) -> bool {
        self.reachable_from(self.source())[self.sink().idx()]
    }

    pub fn fully_connected(&self) -> bool {
        self.is_empty() || self.reachable_from(NodeId(0)).iter().all(|&r| r)
    }

    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                let d = distance(a.pos(), b.pos());
                best = Some(best.map_or(d, |m: f64| m.min(d)));
            }
        }
        best
    }

    /// Stable 64-bit fingerprint of the geometry, used to check that
    /// protocol comparisons share a deployment.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.radio_range.to_bits());
        for n in &self.nodes {
            eat(n.x.to_bits());
            eat(n.y.to_bits());
            eat(n.role as u64);
        }
        h
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let bad = |m: String| Err(TopologyError::Invalid(m));
        if !(self.radio_range > 0.0) {
            return bad(format!("radio range {} not positive", self.radio_range));
        }
        if !(self.field.width > 0.0 && self.field.height > 0.0) {
            return bad("field dimensions must be positive".into());
        }
        let sources = self.nodes.iter().filter(|n| n.role == Role::Source).count();
        let sinks = self.nodes.iter().filter(|n| n.role == Role::Sink).count();
        if sources != 1 || sinks != 1 {
            return bad(format!("need exactly one source and one sink, got {sources} and {sinks}"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id.idx() != i {
                return bad(format!("node at index {i} has id {}", n.id));
            }
            if !n.pos().is_finite() || !self.field.contains(n.pos()) {
                return bad(format!("node {} at ({}, {}) outside the field", n.id, n.x, n.y));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("deployment serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TopologyError> {
        let dep: Deployment = serde_json::from_str(s)?;
        dep.validate()?;
        Ok(dep)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, TopologyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Derives the seed for the `attempt`-th resample of `seed`. Attempt 0 is
/// the seed itself.
pub fn derive_seed(seed: u64, attempt: u32) -> u64 {
    if attempt == 0 {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed ^ (attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn place(
    n: usize,
    field: Field,
    holes: &[Hole],
    seed: u64,
    min_sep: f64,
    radio_range: f64,
) -> Result<Deployment, TopologyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<Position> = vec![SOURCE_POS];
    let pinned = [SOURCE_POS, SINK_POS];
    for i in 0..n {
        let mut attempts = 0;
        let p = loop {
            if attempts == MAX_ATTEMPTS_PER_NODE {
                return Err(TopologyError::Placement {
                    placed: i,
                    requested: n,
                    attempts,
                });
            }
            attempts += 1;
            let p = Position::new(
                rng.gen_range(0.0..=field.width),
                rng.gen_range(0.0..=field.height),
            );
            if holes.iter().any(|h| h.contains(p)) {
                continue;
            }
            let clear = placed
                .iter()
                .chain(pinned.iter().skip(1))
                .all(|&q| distance(p, q) > min_sep);
            if clear {
                break p;
            }
        };
        placed.push(p);
    }
    let nodes = std::iter::once((SOURCE_POS, Role::Source))
        .chain(placed.into_iter().skip(1).map(|p| (p, Role::Relay)))
        .chain(std::iter::once((SINK_POS, Role::Sink)));
    Deployment::from_positions(field, radio_range, nodes)
}

/// `n` relays placed uniformly at random with pairwise separation greater
/// than `min_sep`; source at (10, 90) is id 0, sink at (490, 90) is id n+1.
pub fn gen_plain(n: usize, field: Field, seed: u64, min_sep: f64) -> Result<Deployment, TopologyError> {
    place(n, field, &[], seed, min_sep, DEFAULT_RANGE)
}

/// Like [`gen_plain`] but no relay falls strictly inside any hole.
pub fn gen_holes(
    n: usize,
    field: Field,
    holes: &[Hole],
    seed: u64,
    min_sep: f64,
) -> Result<Deployment, TopologyError> {
    if holes.is_empty() {
        return Err(TopologyError::Invalid("hole list is empty".into()));
    }
    if let Some(h) = holes.iter().find(|h| !(h.radius >= 0.0)) {
        return Err(TopologyError::Invalid(format!("hole radius {} is negative", h.radius)));
    }
    place(n, field, holes, seed, min_sep, DEFAULT_RANGE)
}

pub const GRID_COLUMNS: [f64; 6] = [55.0, 133.0, 211.0, 289.0, 367.0, 445.0];
pub const GRID_ROWS: [f64; 4] = [0.0, 60.0, 120.0, 180.0];

/// Fixed 26-node grid: 6 columns 78 m apart by 4 rows 60 m apart, so axis
/// neighbors are in range and diagonal ones (≈98 m) are not. Source and sink
/// sit on the outer edges between the two middle rows.
pub fn gen_grid() -> Deployment {
    let relays = GRID_COLUMNS
        .iter()
        .flat_map(|&x| GRID_ROWS.iter().map(move |&y| (Position::new(x, y), Role::Relay)));
    let nodes = std::iter::once((SOURCE_POS, Role::Source))
        .chain(relays)
        .chain(std::iter::once((SINK_POS, Role::Sink)));
    Deployment::from_positions(Field::default(), DEFAULT_RANGE, nodes).expect("grid is valid")
}

/// Standard hole layouts, all in the 210-290 m band.
pub fn default_holes(count: usize) -> Vec<Hole> {
    match count {
        0 => vec![],
        1 => vec![Hole {
            center: Position::new(250.0, 90.0),
            radius: 55.0,
        }],
        _ => vec![
            Hole {
                center: Position::new(235.0, 45.0),
                radius: 40.0,
            },
            Hole {
                center: Position::new(265.0, 150.0),
                radius: 40.0,
            },
        ],
    }
}

/// How a scenario obtains its deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Plain {
        n: usize,
        #[serde(default = "default_min_sep")]
        min_sep: f64,
    },
    Holes {
        n: usize,
        holes: Vec<Hole>,
        #[serde(default = "default_min_sep")]
        min_sep: f64,
    },
    Grid,
    File {
        path: std::path::PathBuf,
    },
}

fn default_min_sep() -> f64 {
    DEFAULT_MIN_SEP
}

impl TopologySpec {
    pub fn plain(n: usize) -> Self {
        Self::Plain {
            n,
            min_sep: DEFAULT_MIN_SEP,
        }
    }

    pub fn holes(n: usize, count: usize) -> Self {
        Self::Holes {
            n,
            holes: default_holes(count),
            min_sep: DEFAULT_MIN_SEP,
        }
    }

    /// Short label used in metrics output, e.g. `plain30` or `holes50x2`.
    pub fn label(&self) -> String {
        match self {
            Self::Plain { n, .. } => format!("plain{n}"),
            Self::Holes { n, holes, .. } => format!("holes{n}x{}", holes.len()),
            Self::Grid => "grid26".into(),
            Self::File { path } => format!(
                "file:{}",
                path.file_stem().and_then(|s| s.to_str()).unwrap_or("deployment")
            ),
        }
    }

    /// Generates once from exactly `seed`.
    pub fn generate_once(&self, seed: u64) -> Result<Deployment, TopologyError> {
        let mut dep = match self {
            Self::Plain { n, min_sep } => gen_plain(*n, Field::default(), seed, *min_sep)?,
            Self::Holes { n, holes, min_sep } => gen_holes(*n, Field::default(), holes, seed, *min_sep)?,
            Self::Grid => gen_grid(),
            Self::File { path } => return Deployment::load(path),
        };
        dep.generator = Some(GeneratorInfo {
            topology: self.clone(),
            seed,
            resamples: 0,
        });
        Ok(dep)
    }

    /// Generates a deployment whose source and sink are connected, reseeding
    /// deterministically as needed. Returns the deployment and the number of
    /// rejected samples.
    pub fn generate_connected(&self, seed: u64) -> Result<(Deployment, u32), TopologyError> {
        for attempt in 0..MAX_RESAMPLES {
            let mut dep = self.generate_once(derive_seed(seed, attempt))?;
            if let Some(g) = dep.generator.as_mut() {
                g.seed = seed;
                g.resamples = attempt;
            }
            if dep.source_sink_connected() {
                return Ok((dep, attempt));
            }
            if matches!(self, Self::Grid | Self::File { .. }) {
                return Err(TopologyError::Disconnected);
            }
        }
        Err(TopologyError::NeverConnected(MAX_RESAMPLES))
    }
}
