use serde::{Deserialize, Serialize};

use crate::aggregation::{AggregationConfig, OverloadPolicy};
use crate::energy::DrainPolicy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Energy-elected parent, greedy routing, duty cycling.
    Aedt,
    /// As `Aedt` with every node left awake.
    AedtNoSleep,
    /// Central aggregator and hop-count routes fixed at start, all awake.
    StaticTree,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Aedt, Protocol::AedtNoSleep, Protocol::StaticTree];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aedt => "aedt",
            Protocol::AedtNoSleep => "aedt-no-sleep",
            Protocol::StaticTree => "static-tree",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// Everything that determines a run. Field names double as the keys of the
/// scenario file; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub protocol: Protocol,
    pub seed: u64,
    pub node_count: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub radio_range: f64,
    /// Joules per node at start.
    pub initial_energy: f64,
    /// Packets per second a parent aggregates.
    pub comm_capacity: f64,
    pub bandwidth_bps: f64,
    /// Seconds between refreshes.
    pub refresh_interval: f64,
    /// Simulated seconds.
    pub duration: f64,
    /// Number of nodes generating traffic.
    pub traffic_sources: usize,
    /// Transfers per second per source.
    pub traffic_rate: f64,
    pub packets_per_transfer: usize,
    pub packet_size_bits: u32,
    /// Packet priorities are drawn uniformly from `0..priority_levels`.
    pub priority_levels: u32,
    pub hop_latency: f64,
    pub overload_policy: OverloadPolicy,
    pub prioritize_spill: bool,
    pub path_cache: bool,
    pub unit_drain: f64,
    pub alpha: f64,
    pub parent_cycle_drain: f64,
    pub broadcast_drain: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let drain = DrainPolicy::default();
        Self {
            protocol: Protocol::Aedt,
            seed: 42,
            node_count: 40,
            area_width: 500.0,
            area_height: 500.0,
            radio_range: 120.0,
            initial_energy: 3.1,
            comm_capacity: 10.0,
            bandwidth_bps: 2e6,
            refresh_interval: 2.0,
            duration: 300.0,
            traffic_sources: 10,
            traffic_rate: 0.05,
            packets_per_transfer: 4,
            packet_size_bits: 4096,
            priority_levels: 4,
            hop_latency: 0.01,
            overload_policy: OverloadPolicy::Wait,
            prioritize_spill: false,
            path_cache: true,
            unit_drain: drain.unit_drain,
            alpha: drain.alpha,
            parent_cycle_drain: drain.parent_cycle_drain,
            broadcast_drain: drain.broadcast_drain,
        }
    }
}

impl ScenarioConfig {
    pub fn drain_policy(&self) -> DrainPolicy {
        DrainPolicy {
            unit_drain: self.unit_drain,
            alpha: self.alpha,
            parent_cycle_drain: self.parent_cycle_drain,
            broadcast_drain: self.broadcast_drain,
        }
    }

    pub fn aggregation(&self) -> AggregationConfig {
        AggregationConfig {
            refresh_interval: self.refresh_interval,
            duty_cycle: self.protocol == Protocol::Aedt,
            overload_policy: self.overload_policy,
            prioritize_spill: self.prioritize_spill,
            path_cache: self.path_cache,
            hop_latency: self.hop_latency,
            bandwidth_bps: self.bandwidth_bps,
            drain: self.drain_policy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.node_count < 2 {
            return bad(format!("node_count must be at least 2, got {}", self.node_count));
        }
        for (name, v) in [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("radio_range", self.radio_range),
            ("initial_energy", self.initial_energy),
            ("comm_capacity", self.comm_capacity),
            ("duration", self.duration),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.traffic_rate >= 0.0 && self.traffic_rate.is_finite()) {
            return bad(format!("traffic_rate must be non-negative, got {}", self.traffic_rate));
        }
        if self.packets_per_transfer == 0 {
            return bad("packets_per_transfer must be at least 1".into());
        }
        if self.packet_size_bits == 0 {
            return bad("packet_size_bits must be positive".into());
        }
        if self.priority_levels == 0 {
            return bad("priority_levels must be at least 1".into());
        }
        self.aggregation().validate()
    }
}
