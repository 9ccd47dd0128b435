//! Run metrics: global and local residual-energy distribution, end-to-end
//! delay and loss ratio. Standard deviations are population deviations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("integrity violation: delivered {delivered} exceeds sent {sent}")]
    Inconsistent { sent: u64, delivered: u64 },
}

/// Population mean and standard deviation; `None` for an empty sample.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Mean and standard deviation of residual energy over all nodes.
pub fn ged(residuals: &[f64]) -> (f64, f64) {
    mean_std(residuals).unwrap_or((0.0, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedBin {
    pub lo: f64,
    pub hi: f64,
    pub node_count: usize,
    /// `None` when no node falls in the bin.
    pub mean_residual: Option<f64>,
}

/// Bins nodes by x into `[0, w), [w, 2w), …`; the last bin is closed at the
/// field width and may be narrower.
pub fn led(nodes: &[(f64, f64)], field_width: f64, bin_width: f64) -> Vec<LedBin> {
    let count = (field_width / bin_width).ceil().max(1.0) as usize;
    let mut sums = vec![(0.0f64, 0usize); count];
    for &(x, residual) in nodes {
        let i = ((x / bin_width).floor() as usize).min(count - 1);
        sums[i].0 += residual;
        sums[i].1 += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(i, (sum, n))| LedBin {
            lo: i as f64 * bin_width,
            hi: ((i + 1) as f64 * bin_width).min(field_width),
            node_count: n,
            mean_residual: (n > 0).then(|| sum / n as f64),
        })
        .collect()
}

/// Mean and standard deviation of end-to-end delays; undefined without
/// deliveries.
pub fn delay_stats(delays: &[f64]) -> Option<(f64, f64)> {
    mean_std(delays)
}

/// Percentage of packets lost; undefined when nothing was sent.
pub fn loss_ratio(sent: u64, delivered: u64) -> Result<Option<f64>, MetricsError> {
    if delivered > sent {
        return Err(MetricsError::Inconsistent { sent, delivered });
    }
    if sent == 0 {
        return Ok(None);
    }
    Ok(Some(100.0 * (sent - delivered) as f64 / sent as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DropCounts {
    pub queue: u64,
    pub dead: u64,
    pub isolated_void: u64,
    pub perimeter_loop: u64,
    pub no_route: u64,
    pub hop_limit: u64,
}

impl DropCounts {
    pub fn total(&self) -> u64 {
        self.queue + self.dead + self.isolated_void + self.perimeter_loop + self.no_route + self.hop_limit
    }

    /// Routing failures: voids, perimeter loops, missing routes, hop limit.
    pub fn void_like(&self) -> u64 {
        self.isolated_void + self.perimeter_loop + self.no_route + self.hop_limit
    }
}

/// Metrics of one run plus the metadata needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub protocol: String,
    pub topology: String,
    /// Sensor (relay) nodes, not counting source and sink.
    pub n_nodes: usize,
    pub seed: u64,
    pub deployment: u64,
    pub resamples: u32,
    pub initial_energy: f64,
    pub ged_mean: f64,
    pub ged_std: f64,
    pub ged_mean_pct: f64,
    pub ged_std_pct: f64,
    pub led: Vec<LedBin>,
    pub delay_mean: Option<f64>,
    pub delay_std: Option<f64>,
    pub sent: u64,
    pub delivered: u64,
    pub duplicates: u64,
    pub loss_pct: Option<f64>,
    pub drops: DropCounts,
    pub relays_used: usize,
    pub walkback_episodes: u64,
    pub energy_clamps: u64,
    pub std_kind: String,
}

pub const LED_BIN_WIDTH: f64 = 40.0;
