//! Plan execution and output files.
//!
//! Every protocol of a plan runs on the same deployment for a given
//! (topology, seed). Results are written only after every run passed its
//! integrity checks, and each file is first written under a temporary name
//! and then renamed, so a failed invocation leaves no partial CSV behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{ConfigError, ExperimentPlan, Scenario};
use crate::sim::{simulate, RunOutput, SimError};
use crate::topology::{Deployment, TopologyError, TopologySpec};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("topology generation failed: {0}")]
    Topology(#[from] TopologyError),
    #[error("integrity violation in {run}: {detail}")]
    Integrity { run: String, detail: String },
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// Process exit code: 1 invalid config or unreadable input, 2 topology
    /// generation failure, 3 integrity violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) | RunError::Csv(_) => 1,
            RunError::Topology(TopologyError::Io(_) | TopologyError::Json(_) | TopologyError::Invalid(_)) => 1,
            RunError::Topology(_) => 2,
            RunError::Integrity { .. } => 3,
        }
    }
}

impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => RunError::Config(c),
            SimError::Topology(t) => RunError::Topology(t),
        }
    }
}

/// Deployment for one (topology, seed) cell of a plan.
pub fn resolve_deployment(
    topology: &TopologySpec,
    seed: u64,
    allow_disconnected: bool,
) -> Result<(Deployment, u32), TopologyError> {
    if allow_disconnected {
        return Ok((topology.generate_once(seed)?, 0));
    }
    let (dep, resamples) = topology.generate_connected(seed)?;
    Ok((dep, resamples))
}

/// One finished run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub output: RunOutput,
}

impl RunResult {
    pub fn run_id(&self) -> String {
        run_id(&self.scenario)
    }
}

pub fn run_id(sc: &Scenario) -> String {
    format!("{}-{}-s{}", sc.protocol, sc.topology.label(), sc.seed)
}

/// Runs every scenario of the plan, in plan order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<(Vec<RunResult>, Vec<Deployment>), RunError> {
    plan.validate()?;
    let mut deployments = Vec::new();
    let mut jobs = Vec::new();
    for topo in &plan.topologies {
        for &seed in &plan.seeds {
            let (dep, resamples) = resolve_deployment(topo, seed, plan.allow_disconnected)?;
            let di = deployments.len();
            deployments.push(dep);
            for &protocol in &plan.protocols {
                let sc = Scenario {
                    protocol,
                    topology: topo.clone(),
                    seed,
                    settings: plan.settings.clone(),
                };
                jobs.push((sc, di, resamples));
            }
        }
    }
    let run = |(sc, di, resamples): &(Scenario, usize, u32)| -> Result<RunResult, RunError> {
        let mut output = simulate(sc, &deployments[*di])?;
        output.metrics.resamples = *resamples;
        if !output.integrity.ok() {
            return Err(RunError::Integrity {
                run: run_id(sc),
                detail: output.integrity.violations.join("; "),
            });
        }
        Ok(RunResult {
            scenario: sc.clone(),
            output,
        })
    };
    #[cfg(feature = "parallel")]
    let results: Result<Vec<RunResult>, RunError> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<RunResult>, RunError> = jobs.iter().map(run).collect();
    Ok((results?, deployments))
}

/// First line of every CSV written by this crate.
pub fn config_comment(config_json: &str) -> String {
    format!("# config: {config_json}\n")
}

/// Extracts the embedded config from CSV text, if present.
pub fn embedded_config(csv_text: &str) -> Option<&str> {
    csv_text.lines().next()?.strip_prefix("# config: ")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_text(config: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, RunError> {
    let mut w = csv::Writer::from_writer(config_comment(config).into_bytes());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| RunError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const METRICS_HEADER: [&str; 13] = [
    "protocol",
    "topology",
    "n_nodes",
    "seed",
    "ged_mean_pct",
    "ged_std_pct",
    "delay_mean_s",
    "delay_std_s",
    "loss_pct",
    "drops_queue",
    "drops_void",
    "drops_dead",
    "deployment",
];

/// One row per run; undefined values are empty cells.
pub fn metrics_csv(config: &str, results: &[RunResult]) -> Result<String, RunError> {
    let rows = results.iter().map(|r| {
        let m = &r.output.metrics;
        vec![
            m.protocol.clone(),
            m.topology.clone(),
            m.n_nodes.to_string(),
            m.seed.to_string(),
            m.ged_mean_pct.to_string(),
            m.ged_std_pct.to_string(),
            opt(m.delay_mean),
            opt(m.delay_std),
            opt(m.loss_pct),
            m.drops.queue.to_string(),
            m.drops.void_like().to_string(),
            m.drops.dead.to_string(),
            format!("{:016x}", m.deployment),
        ]
    });
    csv_text(config, &METRICS_HEADER, rows)
}

/// Long-format local energy distribution: one row per run and bin.
pub fn led_csv(config: &str, results: &[RunResult]) -> Result<String, RunError> {
    let rows = results.iter().flat_map(|r| {
        let id = r.run_id();
        let e0 = r.output.metrics.initial_energy;
        r.output.metrics.led.iter().map(move |b| {
            vec![
                id.clone(),
                b.lo.to_string(),
                b.hi.to_string(),
                opt(b.mean_residual.map(|m| 100.0 * m / e0)),
                b.node_count.to_string(),
            ]
        })
    });
    csv_text(
        config,
        &["run_id", "bin_lo", "bin_hi", "mean_residual_pct", "node_count"],
        rows,
    )
}

pub fn events_csv(config: &str, out: &RunOutput) -> Result<String, RunError> {
    let rows = out.events.iter().map(|e| {
        vec![
            e.time.to_string(),
            e.kind.to_string(),
            e.node.to_string(),
            e.stream.map(|s| s.to_string()).unwrap_or_default(),
            e.seq.map(|s| s.to_string()).unwrap_or_default(),
            e.detail.clone(),
        ]
    });
    csv_text(config, &["time_s", "event_kind", "node", "stream", "seq", "detail"], rows)
}

pub fn decisions_csv(config: &str, out: &RunOutput) -> Result<String, RunError> {
    let rows = out.decisions.iter().map(|d| {
        vec![
            d.time.to_string(),
            d.node.to_string(),
            d.next.to_string(),
            d.stream.to_string(),
            d.seq.to_string(),
            d.hop_count.to_string(),
            d.mode.as_str().to_string(),
            opt(d.alpha),
            d.index.map(|i| i.to_string()).unwrap_or_default(),
            d.scores.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        ]
    });
    csv_text(
        config,
        &[
            "time_s", "node", "next", "stream", "seq", "hop_count", "mode", "alpha_deg", "index", "scores",
        ],
        rows,
    )
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a serde_json::value::RawValue,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with the config embedded under `"config"`.
pub fn json_with_config<T: Serialize>(config: &str, body: &T) -> String {
    let raw = serde_json::value::RawValue::from_string(config.to_string()).expect("config is valid json");
    serde_json::to_string_pretty(&WithConfig { config: &raw, body }).expect("serializable")
}

/// Files to be written, relative to the output directory.
#[derive(Debug, Default)]
pub struct OutputSet {
    pub files: Vec<(PathBuf, String)>,
}

impl OutputSet {
    pub fn add(&mut self, path: impl Into<PathBuf>, content: String) {
        self.files.push((path.into(), content));
    }

    /// Writes every file to a temporary name, then renames them all.
    pub fn commit(&self, dir: &Path) -> Result<(), RunError> {
        let mut staged = Vec::new();
        for (rel, content) in &self.files {
            let dest = dir.join(rel);
            if let Some(parent) = dest.parent() {
                fs::create_dir_all(parent)?;
            }
            let tmp = dest.with_extension("partial");
            let mut f = fs::File::create(&tmp)?;
            f.write_all(content.as_bytes())?;
            f.sync_all()?;
            staged.push((tmp, dest));
        }
        for (tmp, dest) in staged {
            fs::rename(tmp, dest)?;
        }
        Ok(())
    }
}

/// Builds every output file for a finished plan.
pub fn plan_outputs(
    plan: &ExperimentPlan,
    results: &[RunResult],
    deployments: &[Deployment],
    trace: bool,
) -> Result<OutputSet, RunError> {
    let config = plan.to_json();
    let mut set = OutputSet::default();
    set.add("config.json", serde_json::to_string_pretty(plan).expect("plan serializes"));
    set.add("metrics.csv", metrics_csv(&config, results)?);
    set.add("led.csv", led_csv(&config, results)?);
    if trace {
        for dep in deployments {
            let name = match &dep.generator {
                Some(g) => format!("{}-s{}", g.topology.label(), g.seed),
                None => format!("deployment-{:016x}", dep.fingerprint()),
            };
            set.add(format!("deployments/{name}.json"), dep.to_json());
        }
        for r in results {
            let id = r.run_id();
            let run_config = r.scenario.to_json();
            if r.scenario.settings.trace.events {
                set.add(format!("trace/{id}-events.csv"), events_csv(&run_config, &r.output)?);
            }
            set.add(format!("trace/{id}-decisions.csv"), decisions_csv(&run_config, &r.output)?);
            if let Some(paths) = &r.output.tpgf {
                set.add(format!("trace/{id}-paths.json"), json_with_config(&run_config, paths));
            }
        }
    }
    Ok(set)
}
