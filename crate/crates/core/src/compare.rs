//! Cross-protocol comparison of metrics CSVs with directional verdicts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::metrics::mean_std;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("reading metrics: {0}")]
    Csv(#[from] csv::Error),
    #[error("need at least two protocols, found {0:?}")]
    TooFewProtocols(Vec<String>),
    #[error("protocols were not run on the same deployments: {0}")]
    Mismatch(String),
    #[error("duplicate row for {0}")]
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Row {
    pub protocol: String,
    pub topology: String,
    pub n_nodes: usize,
    pub seed: u64,
    pub ged_mean_pct: f64,
    pub ged_std_pct: f64,
    pub delay_mean_s: Option<f64>,
    pub delay_std_s: Option<f64>,
    pub loss_pct: Option<f64>,
    pub drops_queue: u64,
    pub drops_void: u64,
    pub drops_dead: u64,
    pub deployment: String,
}

/// Parses a metrics CSV; the leading config comment is skipped.
pub fn parse_metrics(text: &str) -> Result<Vec<Row>, CompareError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<Row>, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    GedMean,
    GedStd,
    Delay,
    Loss,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::GedMean => "ged_mean",
            Metric::GedStd => "ged_std",
            Metric::Delay => "delay_mean",
            Metric::Loss => "loss",
        }
    }

    pub fn get(&self, r: &Row) -> Option<f64> {
        match self {
            Metric::GedMean => Some(r.ged_mean_pct),
            Metric::GedStd => Some(r.ged_std_pct),
            Metric::Delay => r.delay_mean_s,
            Metric::Loss => r.loss_pct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Greater,
    Less,
    LessOrEqual,
}

impl Relation {
    fn symbol(&self) -> &'static str {
        match self {
            Relation::Greater => ">",
            Relation::Less => "<",
            Relation::LessOrEqual => "<=",
        }
    }

    fn holds(&self, a: f64, b: f64) -> bool {
        match self {
            Relation::Greater => a > b,
            Relation::Less => a < b,
            Relation::LessOrEqual => a <= b,
        }
    }
}

/// A claim "`left` metric `relation` `right` metric" that must hold on at
/// least `min_fraction` of the shared seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Claim {
    pub metric: Metric,
    pub left: &'static str,
    pub relation: Relation,
    pub right: &'static str,
    pub min_fraction: f64,
}

pub fn standard_claims() -> Vec<Claim> {
    let c = |metric, left, relation, right, min_fraction| Claim {
        metric,
        left,
        relation,
        right,
        min_fraction,
    };
    vec![
        c(Metric::GedMean, "agem", Relation::Greater, "gpsr", 0.8),
        c(Metric::GedStd, "agem", Relation::Less, "gpsr", 0.8),
        c(Metric::Loss, "agem", Relation::LessOrEqual, "gpsr", 0.8),
        c(Metric::Delay, "tpgf", Relation::LessOrEqual, "agem", 0.7),
        c(Metric::Delay, "agem", Relation::LessOrEqual, "gpsr", 0.7),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub topology: String,
    pub claim: Claim,
    pub holds: usize,
    pub seeds: usize,
}

impl Verdict {
    pub fn pass(&self) -> bool {
        self.seeds > 0 && self.holds as f64 >= self.claim.min_fraction * self.seeds as f64
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} {} {} ({}, {}/{} seeds)",
            self.topology,
            self.claim.metric.name(),
            self.claim.left.to_uppercase(),
            self.claim.relation.symbol(),
            self.claim.right.to_uppercase(),
            if self.pass() { "pass" } else { "fail" },
            self.holds,
            self.seeds
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub topology: String,
    pub protocol: String,
    pub runs: usize,
    /// (mean, std) across seeds per metric; `None` when no run defines it.
    pub means: Vec<(Metric, Option<(f64, f64)>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub summaries: Vec<Summary>,
    pub verdicts: Vec<Verdict>,
}

type Key = (String, u64);

/// Checks that all protocols cover the same (topology, seed) cells on the
/// same deployments, then summarizes and evaluates `claims`.
pub fn compare(rows: &[Row], claims: &[Claim]) -> Result<Comparison, CompareError> {
    let mut by_proto: BTreeMap<&str, BTreeMap<Key, &Row>> = BTreeMap::new();
    for r in rows {
        let cell = by_proto.entry(&r.protocol).or_default();
        if cell.insert((r.topology.clone(), r.seed), r).is_some() {
            return Err(CompareError::Duplicate(format!("{} {} seed {}", r.protocol, r.topology, r.seed)));
        }
    }
    if by_proto.len() < 2 {
        return Err(CompareError::TooFewProtocols(by_proto.keys().map(|s| s.to_string()).collect()));
    }
    let mut protos = by_proto.iter();
    let (first_name, first) = protos.next().expect("two protocols");
    for (name, cells) in protos {
        let a: BTreeSet<&Key> = first.keys().collect();
        let b: BTreeSet<&Key> = cells.keys().collect();
        if a != b {
            return Err(CompareError::Mismatch(format!(
                "{first_name} and {name} cover different (topology, seed) cells"
            )));
        }
        for (k, r) in cells {
            if first[k].deployment != r.deployment {
                return Err(CompareError::Mismatch(format!(
                    "{} seed {}: {first_name} ran on deployment {} but {name} on {}",
                    k.0, k.1, first[k].deployment, r.deployment
                )));
            }
        }
    }
    let topologies: BTreeSet<&str> = rows.iter().map(|r| r.topology.as_str()).collect();
    let mut summaries = Vec::new();
    for &topo in &topologies {
        for (proto, cells) in &by_proto {
            let runs: Vec<&Row> = cells.iter().filter(|(k, _)| k.0 == topo).map(|(_, r)| *r).collect();
            let means = [Metric::GedMean, Metric::GedStd, Metric::Delay, Metric::Loss]
                .into_iter()
                .map(|m| {
                    let vals: Vec<f64> = runs.iter().filter_map(|r| m.get(r)).collect();
                    (m, mean_std(&vals))
                })
                .collect();
            summaries.push(Summary {
                topology: topo.to_string(),
                protocol: proto.to_string(),
                runs: runs.len(),
                means,
            });
        }
    }
    let mut verdicts = Vec::new();
    for &topo in &topologies {
        for claim in claims {
            let (Some(left), Some(right)) = (by_proto.get(claim.left), by_proto.get(claim.right)) else {
                continue;
            };
            let mut holds = 0;
            let mut seeds = 0;
            for (k, l) in left.iter().filter(|(k, _)| k.0 == topo) {
                if let (Some(a), Some(b)) = (claim.metric.get(l), claim.metric.get(right[k])) {
                    seeds += 1;
                    holds += claim.relation.holds(a, b) as usize;
                }
            }
            verdicts.push(Verdict {
                topology: topo.to_string(),
                claim: claim.clone(),
                holds,
                seeds,
            });
        }
    }
    Ok(Comparison { summaries, verdicts })
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:>4} {:>16} {:>16} {:>18} {:>16}",
            "topology", "protocol", "runs", "ged_mean_pct", "ged_std_pct", "delay_mean_s", "loss_pct"
        );
        for sum in &self.summaries {
            let cells: Vec<String> = sum
                .means
                .iter()
                .map(|(_, v)| match v {
                    Some((m, sd)) => format!("{m:.4}±{sd:.4}"),
                    None => "-".into(),
                })
                .collect();
            let _ = writeln!(
                s,
                "{:<12} {:<8} {:>4} {:>16} {:>16} {:>18} {:>16}",
                sum.topology, sum.protocol, sum.runs, cells[0], cells[1], cells[2], cells[3]
            );
        }
        s.push('\n');
        for v in &self.verdicts {
            s.push_str(&v.line());
            s.push('\n');
        }
        s
    }
}
