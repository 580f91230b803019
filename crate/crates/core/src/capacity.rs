//! Communication capacity of the parent node.
//!
//! The parent aggregates at most `nominal × refresh_interval` packets per
//! cycle. [`CapacityState::admit`] is the gate every transfer passes through;
//! [`utilization`] and [`rtcc`] evaluate the real-time capacity formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timing of one packet held at a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketTiming {
    /// Transmission time, seconds.
    pub t_i: f64,
    /// Distance of the packet's node from the sink, metres.
    pub d_i: f64,
    /// Packet size over effective bandwidth.
    pub p_i: f64,
}

impl PacketTiming {
    /// Derives the transmission time from packet size and effective bandwidth.
    pub fn from_size(size_bits: f64, effective_bandwidth: f64, distance: f64) -> Self {
        let p_i = size_bits / effective_bandwidth;
        Self {
            t_i: p_i,
            d_i: distance,
            p_i,
        }
    }
}

/// `Σ T_i / D_i` over a node's packet set.
pub fn utilization(packets: &[PacketTiming]) -> Result<f64> {
    packets.iter().try_fold(0.0, |acc, p| {
        if p.d_i == 0.0 {
            Err(Error::NonPositiveDistance(p.d_i))
        } else {
            Ok(acc + p.t_i / p.d_i)
        }
    })
}

/// Real-time communication capacity: `B · Σ_x U_x / Σ T_i / D_i`.
///
/// Numerator utilizations (one per node) and the denominator packet set are
/// supplied independently. When the numerator is computed from exactly the
/// denominator's packets the ratio is one and the result is `b`.
pub fn rtcc(b: f64, numerator_utilizations: &[f64], denominator_packets: &[PacketTiming]) -> Result<f64> {
    let denominator = utilization(denominator_packets)?;
    if denominator == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let numerator: f64 = numerator_utilizations.iter().sum();
    Ok(b * (numerator / denominator))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissionDecision {
    Accept(u64),
    Overload { accepted: u64, excess: u64 },
}

impl AdmissionDecision {
    pub fn accepted(&self) -> u64 {
        match *self {
            AdmissionDecision::Accept(n) => n,
            AdmissionDecision::Overload { accepted, .. } => accepted,
        }
    }

    pub fn is_overload(&self) -> bool {
        matches!(self, AdmissionDecision::Overload { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityState {
    /// Packets per second.
    pub nominal: f64,
    /// Packets left in the current cycle.
    pub remaining: u64,
    /// Bits per second.
    pub bandwidth_b: f64,
}

impl CapacityState {
    /// A state with a full budget for one cycle of `refresh_interval` seconds.
    pub fn new(nominal: f64, bandwidth_b: f64, refresh_interval: f64) -> Result<Self> {
        let mut state = Self {
            nominal,
            remaining: 0,
            bandwidth_b,
        };
        state.reset(refresh_interval)?;
        Ok(state)
    }

    pub fn cycle_budget(&self, refresh_interval: f64) -> u64 {
        (self.nominal * refresh_interval).floor() as u64
    }

    /// Accepts the whole offer if it fits the remaining budget; otherwise
    /// accepts what is left and reports the excess.
    pub fn admit(&mut self, offered: u64) -> AdmissionDecision {
        if offered <= self.remaining {
            self.remaining -= offered;
            AdmissionDecision::Accept(offered)
        } else {
            let accepted = self.remaining;
            self.remaining = 0;
            AdmissionDecision::Overload {
                accepted,
                excess: offered - accepted,
            }
        }
    }

    pub fn reset(&mut self, refresh_interval: f64) -> Result<()> {
        if !(refresh_interval > 0.0 && refresh_interval.is_finite()) {
            return Err(Error::InvalidRefreshInterval(refresh_interval));
        }
        self.remaining = self.cycle_budget(refresh_interval);
        Ok(())
    }
}
