//! Energy arithmetic.
//!
//! Two families live here. The first are formula evaluators over measured
//! sample traces: available energy from a battery trace and a power trace,
//! radio power under a power-law path loss, energy consumed from a voltage
//! probe, and the linear network-size estimate. Integrals are evaluated with
//! the trapezoid rule on the piecewise-linear interpolant of the samples, so
//! they are exact whenever the underlying signal is piecewise linear.
//!
//! The second family are the drains the live simulation applies to node
//! batteries. Every drain is clamped at zero and recorded in a [`DrainLog`]
//! with both the requested and the applied amount, so the sum of applied
//! drains always reconciles with the energy census.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkTopology, NodeId};

/// Time-ordered samples of a scalar signal, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
struct Samples(Vec<(f64, f64)>);

impl Samples {
    fn new(samples: Vec<(f64, f64)>, allow_negative: bool) -> Result<Self> {
        for (i, &(t, v)) in samples.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidSample { index: i, value: t });
            }
            if !v.is_finite() || (!allow_negative && v < 0.0) {
                return Err(Error::InvalidSample { index: i, value: v });
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::NonIncreasingTimes { index: i });
            }
        }
        Ok(Self(samples))
    }

    fn check_covers(&self, start: f64, end: f64) -> Result<()> {
        let (Some(first), Some(last)) = (self.0.first(), self.0.last()) else {
            return Err(Error::CoverageGap {
                start,
                end,
                covered_start: f64::NAN,
                covered_end: f64::NAN,
            });
        };
        if start < first.0 || end > last.0 {
            return Err(Error::CoverageGap {
                start,
                end,
                covered_start: first.0,
                covered_end: last.0,
            });
        }
        Ok(())
    }

    /// Linear interpolation; `t` must be covered.
    fn value_at(&self, t: f64) -> f64 {
        let s = &self.0;
        let i = s.partition_point(|&(ts, _)| ts <= t);
        if i == 0 {
            return s[0].1;
        }
        if i == s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, v0) = s[i - 1];
        let (t1, v1) = s[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Trapezoid-rule integral over `[start, end]`, with the endpoints
    /// interpolated onto the sample polyline.
    fn integrate(&self, start: f64, end: f64) -> Result<f64> {
        if !(start < end) {
            return Err(Error::InvalidInterval { start, end });
        }
        self.check_covers(start, end)?;
        let mut knots = Vec::with_capacity(self.0.len() + 2);
        knots.push((start, self.value_at(start)));
        knots.extend(self.0.iter().copied().filter(|&(t, _)| t > start && t < end));
        knots.push((end, self.value_at(end)));
        Ok(knots
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum())
    }
}

/// Battery level `E_b(t)` over time, joules.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryTrace(Samples);

impl BatteryTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        Samples::new(samples, false).map(Self)
    }

    pub fn level_at(&self, t: f64) -> Result<f64> {
        self.0.check_covers(t, t)?;
        Ok(self.0.value_at(t))
    }
}

/// Instantaneous power consumption `P_c(t)`, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace(Samples);

impl PowerTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        Samples::new(samples, false).map(Self)
    }

    /// Energy drawn over `[t1, t2]`.
    pub fn energy(&self, t1: f64, t2: f64) -> Result<f64> {
        self.0.integrate(t1, t2)
    }
}

/// Bench measurement of a node: input voltage, test resistance and the
/// voltage sampled across that resistance.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProbe {
    v_in: f64,
    resistance: f64,
    v_r: Samples,
}

impl VoltageProbe {
    pub fn new(v_in: f64, resistance: f64, v_r: Vec<(f64, f64)>) -> Result<Self> {
        if !(v_in > 0.0 && resistance > 0.0) {
            return Err(Error::InvalidProbe);
        }
        Ok(Self {
            v_in,
            resistance,
            v_r: Samples::new(v_r, true)?,
        })
    }
}

/// `E_avail = E_b(t2) − E_b(t1) + ∫ P_c(t) dt` over `[t1, t2]`.
pub fn available_energy(
    battery: &BatteryTrace,
    power: &PowerTrace,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    if !(t1 < t2) {
        return Err(Error::InvalidInterval { start: t1, end: t2 });
    }
    battery.0.check_covers(t1, t2)?;
    let consumed = power.energy(t1, t2)?;
    Ok(battery.0.value_at(t2) - battery.0.value_at(t1) + consumed)
}

/// Received power under power-law path loss: `k · p_t / d^alpha_exp`.
///
/// `alpha_exp` is the path-loss exponent and must lie in `[2, 4]`; `k` is
/// the proportionality constant the order-of-growth relation leaves open.
pub fn power_consumption(p_t: f64, d: f64, alpha_exp: f64, k: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    if !(2.0..=4.0).contains(&alpha_exp) {
        return Err(Error::PathLossExponent(alpha_exp));
    }
    if !(k > 0.0) {
        return Err(Error::NonPositiveConstant(k));
    }
    Ok(k * p_t / d.powf(alpha_exp))
}

/// `E_con = (V_in / R) ∫ V_r(t) dt` over `[t0, t1]`.
pub fn node_energy_consumed(probe: &VoltageProbe, t0: f64, t1: f64) -> Result<f64> {
    Ok(probe.v_in / probe.resistance * probe.v_r.integrate(t0, t1)?)
}

/// Linear model of whole-network energy as a function of node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkEnergyModel {
    /// Joules per node.
    pub m: f64,
    /// Fixed joules.
    pub b: f64,
}

impl NetworkEnergyModel {
    /// Line through two observed `(size, energy)` points.
    pub fn fit(p: (usize, f64), q: (usize, f64)) -> Result<Self> {
        if p.0 == q.0 {
            return Err(Error::DegenerateFit);
        }
        let m = (q.1 - p.1) / (q.0 as f64 - p.0 as f64);
        Ok(Self {
            m,
            b: p.1 - m * p.0 as f64,
        })
    }
}

pub fn network_energy_estimate(model: NetworkEnergyModel, size: usize) -> f64 {
    model.m * size as f64 + model.b
}

/// How the live simulation charges node batteries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrainPolicy {
    /// Joules charged to the parent, the transmitter and every intermediate
    /// hop per delivering transaction.
    pub unit_drain: f64,
    /// Joules per second of awake time.
    pub alpha: f64,
    /// Joules charged to the parent once per cycle it serves.
    pub parent_cycle_drain: f64,
    /// Joules charged to every alive node per energy broadcast at election.
    pub broadcast_drain: f64,
}

impl Default for DrainPolicy {
    fn default() -> Self {
        Self {
            unit_drain: 1.0,
            alpha: 0.01,
            parent_cycle_drain: 0.0,
            broadcast_drain: 0.0,
        }
    }
}

impl DrainPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("unit_drain", self.unit_drain),
            ("alpha", self.alpha),
            ("parent_cycle_drain", self.parent_cycle_drain),
            ("broadcast_drain", self.broadcast_drain),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a non-negative number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DrainKind {
    Transaction,
    Awake,
    ParentCycle,
    Broadcast,
}

impl DrainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DrainKind::Transaction => "transaction",
            DrainKind::Awake => "awake",
            DrainKind::ParentCycle => "parent-cycle",
            DrainKind::Broadcast => "broadcast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "transaction" => DrainKind::Transaction,
            "awake" => DrainKind::Awake,
            "parent-cycle" => DrainKind::ParentCycle,
            "broadcast" => DrainKind::Broadcast,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrainEntry {
    pub time: f64,
    pub node: NodeId,
    pub kind: DrainKind,
    pub requested: f64,
    /// Energy actually removed; less than `requested` when clamped.
    pub applied: f64,
    /// The drain took the node to zero.
    pub depleted: bool,
}

impl DrainEntry {
    pub fn clamped(&self) -> bool {
        self.applied < self.requested
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DrainLog {
    entries: Vec<DrainEntry>,
}

impl DrainLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[DrainEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_applied(&self) -> f64 {
        self.entries.iter().map(|e| e.applied).sum()
    }
}

/// Removes up to `amount` joules from a live node and logs it. Dead nodes
/// and zero amounts are skipped without a log entry.
pub(crate) fn drain(
    network: &mut NetworkTopology,
    log: &mut DrainLog,
    node: NodeId,
    amount: f64,
    kind: DrainKind,
    time: f64,
) -> Option<DrainEntry> {
    let before = network.node(node).ok()?.e_avail();
    if before <= 0.0 || amount <= 0.0 {
        return None;
    }
    let (after, applied) = if amount >= before {
        (0.0, before)
    } else {
        (before - amount, amount)
    };
    network.set_energy(node, after);
    let entry = DrainEntry {
        time,
        node,
        kind,
        requested: amount,
        applied,
        depleted: after == 0.0,
    };
    log.entries.push(entry);
    Some(entry)
}

/// Charges `unit_drain` to the parent, the transmitter and each intermediate
/// hop, once per distinct node.
pub fn apply_transaction_drain(
    policy: &DrainPolicy,
    parent: NodeId,
    transmitter: NodeId,
    intermediates: &[NodeId],
    network: &mut NetworkTopology,
    log: &mut DrainLog,
    time: f64,
) -> Result<Vec<DrainEntry>> {
    let mut charged: Vec<NodeId> = Vec::with_capacity(intermediates.len() + 2);
    for id in [parent, transmitter].into_iter().chain(intermediates.iter().copied()) {
        if !network.node(id)?.is_alive() {
            return Err(Error::DeadNode(id));
        }
        if !charged.contains(&id) {
            charged.push(id);
        }
    }
    Ok(charged
        .into_iter()
        .filter_map(|id| drain(network, log, id, policy.unit_drain, DrainKind::Transaction, time))
        .collect())
}

/// Charges `alpha · awake_duration` to `node`.
pub fn apply_awake_drain(
    policy: &DrainPolicy,
    node: NodeId,
    awake_duration: f64,
    network: &mut NetworkTopology,
    log: &mut DrainLog,
    time: f64,
) -> Result<Option<DrainEntry>> {
    if !(awake_duration >= 0.0) {
        return Err(Error::InvalidInterval {
            start: 0.0,
            end: awake_duration,
        });
    }
    network.node(node)?;
    Ok(drain(
        network,
        log,
        node,
        policy.alpha * awake_duration,
        DrainKind::Awake,
        time,
    ))
}

/// Seconds of awake drain a node with `energy` joules survives.
pub fn awake_survival(policy: &DrainPolicy, energy: f64) -> f64 {
    if policy.alpha > 0.0 {
        energy / policy.alpha
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSpec;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() <= 1e-9, "{a} != {b}");
    }

    #[test]
    fn available_energy_zero_integral() {
        let b = BatteryTrace::new(vec![(0.0, 8.0), (2.0, 5.0)]).unwrap();
        let p = PowerTrace::new(vec![(0.0, 0.0), (2.0, 0.0)]).unwrap();
        close(available_energy(&b, &p, 0.0, 2.0).unwrap(), -3.0);
    }

    #[test]
    fn available_energy_constant_power() {
        let b = BatteryTrace::new(vec![(0.0, 8.0), (2.0, 5.0)]).unwrap();
        let p = PowerTrace::new(vec![(0.0, 1.5), (2.0, 1.5)]).unwrap();
        close(available_energy(&b, &p, 0.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn available_energy_rejects_uncovered_interval() {
        let b = BatteryTrace::new(vec![(0.0, 8.0), (2.0, 5.0)]).unwrap();
        let p = PowerTrace::new(vec![(0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            available_energy(&b, &p, 0.0, 2.0),
            Err(Error::CoverageGap { .. })
        ));
        assert!(matches!(
            available_energy(&b, &p, 1.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn traces_reject_bad_samples() {
        assert!(matches!(
            PowerTrace::new(vec![(0.0, 1.0), (0.0, 1.0)]),
            Err(Error::NonIncreasingTimes { index: 1 })
        ));
        assert!(matches!(
            BatteryTrace::new(vec![(0.0, -1.0)]),
            Err(Error::InvalidSample { .. })
        ));
    }

    #[test]
    fn power_law() {
        close(power_consumption(4.0, 2.0, 2.0, 1.0).unwrap(), 1.0);
        close(power_consumption(8.0, 2.0, 3.0, 1.0).unwrap(), 1.0);
        close(power_consumption(7.0, 1.0, 3.5, 2.0).unwrap(), 14.0);
        assert!(matches!(
            power_consumption(1.0, 0.0, 2.0, 1.0),
            Err(Error::NonPositiveDistance(_))
        ));
        assert!(matches!(
            power_consumption(1.0, 1.0, 1.5, 1.0),
            Err(Error::PathLossExponent(_))
        ));
        assert!(matches!(
            power_consumption(1.0, 1.0, 4.5, 1.0),
            Err(Error::PathLossExponent(_))
        ));
    }

    #[test]
    fn probe_energy() {
        let p = VoltageProbe::new(3.0, 6.0, vec![(0.0, 2.0), (4.0, 2.0)]).unwrap();
        close(node_energy_consumed(&p, 0.0, 4.0).unwrap(), 4.0);
        let zero = VoltageProbe::new(3.0, 6.0, vec![(0.0, 0.0), (4.0, 0.0)]).unwrap();
        close(node_energy_consumed(&zero, 0.0, 4.0).unwrap(), 0.0);
        let ramp = VoltageProbe::new(1.0, 1.0, vec![(0.0, 0.0), (2.0, 2.0)]).unwrap();
        close(node_energy_consumed(&ramp, 0.0, 2.0).unwrap(), 2.0);
        assert!(matches!(
            node_energy_consumed(&ramp, 0.0, 3.0),
            Err(Error::CoverageGap { .. })
        ));
    }

    #[test]
    fn network_estimate() {
        let m = NetworkEnergyModel { m: 0.5, b: 1.0 };
        close(network_energy_estimate(m, 10), 6.0);
        close(network_energy_estimate(m, 0), 1.0);
        let fit = NetworkEnergyModel::fit((20, 31.0), (100, 155.0)).unwrap();
        close(network_energy_estimate(fit, 20), 31.0);
        close(network_energy_estimate(fit, 100), 155.0);
        assert_eq!(
            NetworkEnergyModel::fit((3, 1.0), (3, 2.0)),
            Err(Error::DegenerateFit)
        );
    }

    fn line(energies: &[f64]) -> NetworkTopology {
        let specs: Vec<_> = energies
            .iter()
            .enumerate()
            .map(|(i, &e)| NodeSpec::new(i as f64, 0.0, e, 10.0))
            .collect();
        NetworkTopology::build(&specs, 1.0).unwrap()
    }

    #[test]
    fn transaction_drain_hits_each_role_once() {
        let mut net = line(&[5.0, 5.0, 5.0]);
        let mut log = DrainLog::new();
        let policy = DrainPolicy::default();
        apply_transaction_drain(&policy, NodeId(0), NodeId(2), &[NodeId(1)], &mut net, &mut log, 0.0)
            .unwrap();
        for n in net.nodes() {
            close(n.e_avail(), 4.0);
        }
        assert_eq!(log.len(), 3);
    }

    #[test]
    fn zero_unit_drain_changes_nothing() {
        let mut net = line(&[5.0, 5.0]);
        let mut log = DrainLog::new();
        let policy = DrainPolicy {
            unit_drain: 0.0,
            ..DrainPolicy::default()
        };
        apply_transaction_drain(&policy, NodeId(0), NodeId(1), &[], &mut net, &mut log, 0.0).unwrap();
        assert_eq!(net.total_energy(), 10.0);
        assert!(log.is_empty());
    }

    #[test]
    fn clamped_drain_kills_and_logs() {
        let mut net = line(&[5.0, 0.4, 5.0]);
        let mut log = DrainLog::new();
        apply_transaction_drain(
            &DrainPolicy::default(),
            NodeId(0),
            NodeId(2),
            &[NodeId(1)],
            &mut net,
            &mut log,
            1.0,
        )
        .unwrap();
        let mid = net.node(NodeId(1)).unwrap();
        assert_eq!(mid.e_avail(), 0.0);
        assert!(!mid.is_alive());
        let entry = log.entries().iter().find(|e| e.node == NodeId(1)).unwrap();
        assert!(entry.clamped() && entry.depleted);
        close(entry.applied, 0.4);
        assert_eq!(
            apply_transaction_drain(
                &DrainPolicy::default(),
                NodeId(0),
                NodeId(2),
                &[NodeId(1)],
                &mut net,
                &mut log,
                2.0,
            ),
            Err(Error::DeadNode(NodeId(1)))
        );
    }

    #[test]
    fn awake_drain_is_linear() {
        let mut net = line(&[5.0]);
        let mut log = DrainLog::new();
        let policy = DrainPolicy::default();
        let e = apply_awake_drain(&policy, NodeId(0), 10.0, &mut net, &mut log, 10.0)
            .unwrap()
            .unwrap();
        close(e.applied, 0.1);
        assert!(apply_awake_drain(&policy, NodeId(0), 0.0, &mut net, &mut log, 10.0)
            .unwrap()
            .is_none());
        close(net.total_energy(), 4.9);
    }
}
