//! First-order radio energy model and the neighbor objective function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("{0} must be non-negative, got {1}")]
    Negative(&'static str, f64),
    #[error("{0} must be strictly positive, got {1}")]
    NonPositive(&'static str, f64),
}

/// Radio constants. `packet_bits` is the fixed data-packet size used when
/// scoring neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyModelParams {
    /// Transceiver electronics, J/bit.
    pub e_elec: f64,
    /// Transmit amplifier, J/bit/m².
    pub eps_amp: f64,
    pub packet_bits: u64,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        Self {
            e_elec: 5e-6,
            eps_amp: 1e-9,
            packet_bits: 1000,
        }
    }
}

impl EnergyModelParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        if !(self.e_elec > 0.0) {
            return Err(EnergyError::NonPositive("e_elec", self.e_elec));
        }
        if !(self.eps_amp > 0.0) {
            return Err(EnergyError::NonPositive("eps_amp", self.eps_amp));
        }
        if self.packet_bits == 0 {
            return Err(EnergyError::NonPositive("packet_bits", 0.0));
        }
        Ok(())
    }
}

fn non_negative(what: &'static str, v: f64) -> Result<f64, EnergyError> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(EnergyError::Negative(what, v))
    }
}

/// Energy to transmit `k` bits over `d` meters: k·(e_elec + eps_amp·d²).
pub fn tx_energy(params: &EnergyModelParams, k: f64, d: f64) -> Result<f64, EnergyError> {
    let k = non_negative("bits", k)?;
    let d = non_negative("distance", d)?;
    Ok(k * (params.e_elec + params.eps_amp * d * d))
}

/// Energy to receive `k` bits: k·e_elec.
pub fn rx_energy(params: &EnergyModelParams, k: f64) -> Result<f64, EnergyError> {
    Ok(non_negative("bits", k)? * params.e_elec)
}

/// Objective used to rank a forwarding candidate: its residual energy minus
/// what one data packet would cost to send to it and for it to receive.
pub fn neighbor_score(
    params: &EnergyModelParams,
    neighbor_energy: f64,
    neighbor_distance: f64,
) -> Result<f64, EnergyError> {
    let e = non_negative("neighbor energy", neighbor_energy)?;
    let k = params.packet_bits as f64;
    Ok(e - tx_energy(params, k, neighbor_distance)? - rx_energy(params, k)?)
}

/// Battery of a single node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStore {
    pub initial: f64,
    pub residual: f64,
}

/// Outcome of a debit: how much was actually removed and whether the
/// request had to be clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Debit {
    pub applied: f64,
    pub clamped: bool,
}

impl EnergyStore {
    pub fn new(initial: f64) -> Self {
        Self {
            initial,
            residual: initial,
        }
    }

    pub fn is_dead(&self) -> bool {
        self.residual <= 0.0
    }

    /// Removes `amount`, clamping at zero.
    pub fn debit(&mut self, amount: f64) -> Debit {
        debug_assert!(amount >= 0.0);
        if amount >= self.residual {
            let applied = self.residual;
            self.residual = 0.0;
            Debit {
                applied,
                clamped: amount > applied,
            }
        } else {
            self.residual -= amount;
            Debit {
                applied: amount,
                clamped: false,
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        if self.initial > 0.0 {
            self.residual / self.initial
        } else {
            0.0
        }
    }
}

/// Value-returning form of [`EnergyStore::debit`].
pub fn debit(store: EnergyStore, amount: f64) -> EnergyStore {
    let mut s = store;
    s.debit(amount);
    s
}
