//! Geographic multipath routing for wireless multimedia sensor networks:
//! the AGEM protocol, GEAMS/GPSR/TPGF baselines and a deterministic
//! discrete-event simulator to compare them.

pub mod agem;
pub mod baselines;
pub mod compare;
pub mod energy;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod policies;
pub mod scenario;
pub mod sim;
pub mod topology;

pub use scenario::{ExperimentPlan, Protocol, Scenario, Settings};
pub use sim::{run_scenario, simulate, RunOutput};
pub use topology::{Deployment, NodeId, TopologySpec};
