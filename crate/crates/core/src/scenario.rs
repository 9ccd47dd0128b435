//! Run configuration. A [`Scenario`] fully determines one simulation; an
//! [`ExperimentPlan`] is a protocol × topology × seed sweep over a shared
//! base scenario.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agem::CompassConfig;
use crate::baselines::Planarization;
use crate::energy::EnergyModelParams;
use crate::topology::{NodeId, TopologySpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Agem,
    Geams,
    Gpsr,
    Tpgf,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Agem, Protocol::Geams, Protocol::Gpsr, Protocol::Tpgf];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Agem => "agem",
            Protocol::Geams => "geams",
            Protocol::Gpsr => "gpsr",
            Protocol::Tpgf => "tpgf",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConfigError::Invalid(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub images: u32,
    pub image_bits: u64,
    /// Seconds between images.
    pub image_period: f64,
    pub packet_bits: u64,
}

impl Default for TrafficSpec {
    fn default() -> Self {
        Self {
            images: 30,
            image_bits: 10_000,
            image_period: 1.0,
            packet_bits: 1000,
        }
    }
}

impl TrafficSpec {
    /// Fragment sizes of one image; the last may be short.
    pub fn fragments(&self) -> Vec<u64> {
        let full = self.image_bits / self.packet_bits;
        let rest = self.image_bits % self.packet_bits;
        let mut v = vec![self.packet_bits; full as usize];
        if rest > 0 {
            v.push(rest);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModel {
    /// bits per second
    pub data_rate: f64,
    /// seconds added to every hop after serialization
    pub per_hop_processing: f64,
    /// packets waiting at a node, excluding the one on the air
    pub queue_capacity: usize,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            data_rate: 250_000.0,
            per_hop_processing: 0.001,
            queue_capacity: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    /// J/bit
    pub e_elec: f64,
    /// J/bit/m²
    pub eps_amp: f64,
    /// J per node
    pub initial_energy: f64,
    /// Per-node initial energy replacing `initial_energy`; zero makes a node
    /// dead from the start.
    #[serde(default)]
    pub overrides: Vec<EnergyOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyOverride {
    pub node: NodeId,
    pub energy: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            e_elec: 5e-6,
            eps_amp: 1e-9,
            initial_energy: DEFAULT_INITIAL_ENERGY,
            overrides: Vec::new(),
        }
    }
}

impl EnergyConfig {
    pub fn initial_for(&self, node: NodeId) -> f64 {
        self.overrides
            .iter()
            .rev()
            .find(|o| o.node == node)
            .map_or(self.initial_energy, |o| o.energy)
    }
}

/// Default battery, in joules.
pub const DEFAULT_INITIAL_ENERGY: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeaconConfig {
    pub enabled: bool,
    /// seconds
    pub interval: f64,
    pub bits: u64,
    /// Debit beacon and void-announcement energy.
    pub charge: bool,
}

impl Default for BeaconConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            interval: 1.0,
            bits: 200,
            charge: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpsrConfig {
    pub planarization: Planarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TpgfConfig {
    pub max_paths: usize,
}

impl Default for TpgfConfig {
    fn default() -> Self {
        Self { max_paths: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFlags {
    /// Keep the full event log.
    pub events: bool,
    /// Keep per-hop forwarding decisions.
    pub decisions: bool,
}

/// Everything but the protocol, topology and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub traffic: TrafficSpec,
    pub link: LinkModel,
    pub energy: EnergyConfig,
    pub beacon: BeaconConfig,
    pub compass: CompassConfig,
    pub gpsr: GpsrConfig,
    pub tpgf: TpgfConfig,
    /// Packets exceeding this many hops are dropped.
    pub hop_limit: u32,
    pub trace: TraceFlags,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            traffic: TrafficSpec::default(),
            link: LinkModel::default(),
            energy: EnergyConfig::default(),
            beacon: BeaconConfig::default(),
            compass: CompassConfig::default(),
            gpsr: GpsrConfig::default(),
            tpgf: TpgfConfig::default(),
            hop_limit: 255,
            trace: TraceFlags::default(),
        }
    }
}

impl Settings {
    pub fn energy_params(&self) -> EnergyModelParams {
        EnergyModelParams {
            e_elec: self.energy.e_elec,
            eps_amp: self.energy.eps_amp,
            packet_bits: self.traffic.packet_bits,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let t = &self.traffic;
        if t.image_bits == 0 || t.packet_bits == 0 || !(t.image_period > 0.0) {
            return bad("traffic sizes and period must be positive".into());
        }
        let l = &self.link;
        if !(l.data_rate > 0.0) || !(l.per_hop_processing > 0.0) || l.queue_capacity == 0 {
            return bad("link data_rate, per_hop_processing and queue_capacity must be positive".into());
        }
        if !(self.energy.initial_energy > 0.0) {
            return bad("initial_energy must be positive".into());
        }
        if self.energy.overrides.iter().any(|o| !(o.energy >= 0.0) || !o.energy.is_finite()) {
            return bad("energy overrides must be finite and non-negative".into());
        }
        self.energy_params()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.beacon.enabled && (!(self.beacon.interval > 0.0) || self.beacon.bits == 0) {
            return bad("beacon interval and bits must be positive".into());
        }
        self.compass.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.tpgf.max_paths == 0 {
            return bad("tpgf.max_paths must be at least 1".into());
        }
        if self.hop_limit == 0 {
            return bad("hop_limit must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: Protocol,
    pub topology: TopologySpec,
    pub seed: u64,
    #[serde(default)]
    pub settings: Settings,
}

impl Scenario {
    pub fn new(protocol: Protocol, topology: TopologySpec, seed: u64) -> Self {
        Self {
            protocol,
            topology,
            seed,
            settings: Settings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.settings.validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.validate()?;
        Ok(sc)
    }
}

/// A sweep: every protocol runs on every (topology, seed) deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub protocols: Vec<Protocol>,
    pub topologies: Vec<TopologySpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub settings: Settings,
    /// Run on deployments whose source and sink are disconnected instead of
    /// resampling them.
    #[serde(default)]
    pub allow_disconnected: bool,
}

impl ExperimentPlan {
    /// Four protocols on 30-node plain fields, seeds 1..=10.
    pub fn standard() -> Self {
        Self {
            protocols: Protocol::ALL.to_vec(),
            topologies: vec![TopologySpec::plain(30)],
            seeds: (1..=10).collect(),
            settings: Settings::default(),
            allow_disconnected: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.protocols.is_empty() || self.topologies.is_empty() || self.seeds.is_empty() {
            return Err(ConfigError::Invalid("protocols, topologies and seeds must be non-empty".into()));
        }
        self.settings.validate()
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let p: ExperimentPlan = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        let mut out = Vec::new();
        for topo in &self.topologies {
            for &seed in &self.seeds {
                for &protocol in &self.protocols {
                    out.push(Scenario {
                        protocol,
                        topology: topo.clone(),
                        seed,
                        settings: self.settings.clone(),
                    });
                }
            }
        }
        out
    }
}
