use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::trace::{Event, Trace};
use crate::model::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSnapshot {
    pub cycle: u64,
    pub started_at: f64,
    pub parent: Option<NodeId>,
    pub alive: usize,
    pub residual_energy: f64,
    pub received: u64,
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Mean end-to-end delay over delivered packets, seconds.
    pub avg_delay: f64,
    /// Delivered over submitted packets; 1.0 when nothing was submitted.
    pub delivery_ratio: f64,
    /// Mean energy spent per node, joules.
    pub avg_energy_consumed: f64,
    /// Time the first node ran dry, or the run horizon if none did.
    pub network_lifetime: f64,
    pub submitted: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub undeliverable: u64,
    /// Packets still waiting for a refresh when the run ended.
    pub deferred_pending: u64,
    pub per_cycle_series: Vec<CycleSnapshot>,
}

impl MetricsRecord {
    pub fn empty() -> Self {
        Self {
            avg_delay: 0.0,
            delivery_ratio: 1.0,
            avg_energy_consumed: 0.0,
            network_lifetime: 0.0,
            submitted: 0,
            delivered: 0,
            dropped: 0,
            undeliverable: 0,
            deferred_pending: 0,
            per_cycle_series: Vec::new(),
        }
    }
}

/// Packet tallies in the order the run produces them; both the live run and
/// [`collect_metrics`] fold through this so their floats agree bit for bit.
#[derive(Debug, Clone, Default)]
pub(crate) struct Tally {
    pub submitted: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub undeliverable: u64,
    pub delay_sum: f64,
}

impl Tally {
    pub fn finish(
        &self,
        initial: &[f64],
        finals: &[f64],
        lifetime: f64,
        pending: u64,
        cycles: Vec<CycleSnapshot>,
    ) -> MetricsRecord {
        let consumed: f64 = initial.iter().zip(finals).map(|(i, f)| i - f).sum();
        MetricsRecord {
            avg_delay: if self.delivered > 0 {
                self.delay_sum / self.delivered as f64
            } else {
                0.0
            },
            delivery_ratio: if self.submitted > 0 {
                self.delivered as f64 / self.submitted as f64
            } else {
                1.0
            },
            avg_energy_consumed: if initial.is_empty() {
                0.0
            } else {
                consumed / initial.len() as f64
            },
            network_lifetime: lifetime,
            submitted: self.submitted,
            delivered: self.delivered,
            dropped: self.dropped,
            undeliverable: self.undeliverable,
            deferred_pending: pending,
            per_cycle_series: cycles,
        }
    }
}

/// Recomputes a run's metrics from its event trace alone.
pub fn collect_metrics(trace: &Trace) -> MetricsRecord {
    if trace.lines.is_empty() {
        return MetricsRecord::empty();
    }
    let mut tally = Tally::default();
    let mut initial: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut finals: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut first_death = None;
    let mut horizon = 0.0;
    let mut pending = 0;
    let mut cycles: Vec<CycleSnapshot> = Vec::new();

    for line in &trace.lines {
        match &line.event {
            Event::Node { node, energy, .. } => {
                initial.insert(*node, *energy);
            }
            Event::Final { node, energy } => {
                finals.insert(*node, *energy);
            }
            Event::Submit { packets, attempt: 0, .. } => tally.submitted += *packets as u64,
            Event::Deliver { delay, .. } => {
                tally.delivered += 1;
                tally.delay_sum += delay;
            }
            Event::Drop { .. } => tally.dropped += 1,
            Event::Undeliverable { .. } => tally.undeliverable += 1,
            Event::Death { .. } => {
                first_death.get_or_insert(line.time);
            }
            Event::Refresh { cycle, parent, alive, residual } => cycles.push(CycleSnapshot {
                cycle: *cycle,
                started_at: line.time,
                parent: *parent,
                alive: *alive,
                residual_energy: *residual,
                received: 0,
                utilization: 0.0,
            }),
            Event::CycleEnd { cycle, packets, utilization, .. } => {
                if let Some(snap) = cycles.iter_mut().rev().find(|c| c.cycle == *cycle) {
                    snap.received = *packets;
                    snap.utilization = *utilization;
                }
            }
            Event::End { horizon: h, pending: p } => {
                horizon = *h;
                pending = *p as u64;
            }
            _ => {}
        }
    }

    let initial_v: Vec<f64> = initial.values().copied().collect();
    let finals_v: Vec<f64> = initial
        .iter()
        .map(|(id, e)| finals.get(id).copied().unwrap_or(*e))
        .collect();
    tally.finish(
        &initial_v,
        &finals_v,
        first_death.unwrap_or(horizon),
        pending,
        cycles,
    )
}
