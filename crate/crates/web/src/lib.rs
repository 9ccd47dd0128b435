//! Browser bindings: generate a deployment, run one protocol on it, or run
//! all four side by side. Everything crosses the boundary as JSON strings.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use agem::metrics::MetricsRecord;
use agem::{simulate, Deployment, Protocol, Scenario, TopologySpec};

#[derive(Serialize)]
struct RunView {
    metrics: MetricsRecord,
    residuals: Vec<f64>,
    /// `[from, to, data packets sent over the link]`.
    links: Vec<(u32, u32, u32)>,
    blocked: Vec<u32>,
    paths: Vec<Vec<u32>>,
}

fn spec_for(kind: &str, n: usize, holes: usize) -> Result<TopologySpec, String> {
    match kind {
        "plain" => Ok(TopologySpec::plain(n)),
        "holes" if (1..=2).contains(&holes) => Ok(TopologySpec::holes(n, holes)),
        "holes" => Err("holes must be 1 or 2".into()),
        "grid" => Ok(TopologySpec::Grid),
        _ => Err(format!("unknown topology kind {kind:?}")),
    }
}

pub fn generate_json(kind: &str, n: usize, holes: usize, seed: u64) -> Result<String, String> {
    let spec = spec_for(kind, n, holes)?;
    let (dep, _) = spec.generate_connected(seed).map_err(|e| e.to_string())?;
    Ok(dep.to_json())
}

fn scenario_for(dep: &Deployment, protocol: Protocol, images: u32) -> Scenario {
    let (topology, seed) = match &dep.generator {
        Some(g) => (g.topology.clone(), g.seed),
        None => (TopologySpec::plain(dep.relay_count()), 1),
    };
    let mut sc = Scenario::new(protocol, topology, seed);
    sc.settings.traffic.images = images;
    sc.settings.trace.decisions = true;
    sc
}

fn run_view(dep: &Deployment, protocol: Protocol, images: u32) -> Result<RunView, String> {
    let out = simulate(&scenario_for(dep, protocol, images), dep).map_err(|e| e.to_string())?;
    let mut links: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for d in &out.decisions {
        *links.entry((d.node.0, d.next.0)).or_default() += 1;
    }
    Ok(RunView {
        metrics: out.metrics,
        residuals: out.residuals,
        links: links.into_iter().map(|((a, b), c)| (a, b, c)).collect(),
        blocked: out.blocks.iter().map(|b| b.node.0).collect(),
        paths: out
            .tpgf
            .map(|t| t.paths.iter().map(|p| p.iter().map(|n| n.0).collect()).collect())
            .unwrap_or_default(),
    })
}

pub fn run_json(deployment: &str, protocol: &str, images: u32) -> Result<String, String> {
    let dep = Deployment::from_json(deployment).map_err(|e| e.to_string())?;
    let protocol: Protocol = protocol.parse().map_err(|e: agem::scenario::ConfigError| e.to_string())?;
    let view = run_view(&dep, protocol, images)?;
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

pub fn compare_json(deployment: &str, images: u32) -> Result<String, String> {
    let dep = Deployment::from_json(deployment).map_err(|e| e.to_string())?;
    let rows = Protocol::ALL
        .into_iter()
        .map(|p| run_view(&dep, p, images).map(|v| v.metrics))
        .collect::<Result<Vec<_>, _>>()?;
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

/// Deployment JSON for `kind` = plain | holes | grid, resampled until the
/// source reaches the sink.
#[wasm_bindgen(js_name = generateTopology)]
pub fn generate_topology(kind: &str, n: u32, holes: u32, seed: u32) -> Result<String, JsValue> {
    generate_json(kind, n as usize, holes as usize, seed as u64).map_err(|e| JsValue::from_str(&e))
}

/// Runs `protocol` on a deployment; returns metrics, residual energies, used
/// links, blocked nodes and TPGF paths.
#[wasm_bindgen(js_name = runProtocol)]
pub fn run_protocol(deployment: &str, protocol: &str, images: u32) -> Result<String, JsValue> {
    run_json(deployment, protocol, images).map_err(|e| JsValue::from_str(&e))
}

/// Metrics of all four protocols on the same deployment.
#[wasm_bindgen(js_name = compareProtocols)]
pub fn compare_protocols(deployment: &str, images: u32) -> Result<String, JsValue> {
    compare_json(deployment, images).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn generated_deployment_round_trips() {
        let json = generate_json("plain", 30, 0, 3).unwrap();
        let dep = Deployment::from_json(&json).unwrap();
        assert_eq!(dep.relay_count(), 30);
        assert!(dep.source_sink_connected());
        assert_eq!(json, generate_json("plain", 30, 0, 3).unwrap());
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(generate_json("ring", 30, 0, 1).is_err());
        assert!(generate_json("holes", 30, 3, 1).is_err());
        let dep = generate_json("grid", 0, 0, 1).unwrap();
        assert!(run_json(&dep, "aodv", 1).is_err());
        assert!(run_json("{}", "agem", 1).is_err());
    }

    #[test]
    fn run_links_account_for_every_hop() {
        let dep_json = generate_json("grid", 0, 0, 1).unwrap();
        let v: Value = serde_json::from_str(&run_json(&dep_json, "gpsr", 2).unwrap()).unwrap();
        let m = &v["metrics"];
        let hops: u64 = v["links"].as_array().unwrap().iter().map(|l| l[2].as_u64().unwrap()).sum();
        assert_eq!(m["delivered"].as_u64().unwrap(), 20);
        assert!(hops >= 20);
        let dep = Deployment::from_json(&dep_json).unwrap();
        assert_eq!(v["residuals"].as_array().unwrap().len(), dep.len());
    }

    #[test]
    fn compare_covers_all_protocols() {
        let dep = generate_json("holes", 30, 1, 2).unwrap();
        let v: Value = serde_json::from_str(&compare_json(&dep, 1).unwrap()).unwrap();
        let names: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["protocol"].as_str().unwrap()).collect();
        assert_eq!(names, ["agem", "geams", "gpsr", "tpgf"]);
        let tpgf: Value = serde_json::from_str(&run_json(&dep, "tpgf", 1).unwrap()).unwrap();
        assert!(!tpgf["paths"].as_array().unwrap().is_empty());
    }
}
