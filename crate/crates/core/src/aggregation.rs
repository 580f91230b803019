//! The aggregation tree procedure.
//!
//! [`Aggregator`] owns the network for one run and drives it through refresh
//! cycles. Each refresh elects a parent, renews every capacity budget and
//! replays transfers that were told to wait. Each transfer resolves a path
//! (memory table first, greedy selection otherwise), asks the parent for
//! admission, and on delivery charges the parent, the transmitter and every
//! intermediate hop.
//!
//! Time only moves forward. Before any action at time `now` the aggregator
//! charges the awake drain accrued by nodes that stayed awake since the last
//! action, so depletion times inside an idle stretch are exact.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::capacity::{AdmissionDecision, CapacityState, PacketTiming};
use crate::election::{self, ElectionResult};
use crate::energy::{self, DrainKind, DrainLog, DrainPolicy};
use crate::error::{Error, Result};
use crate::model::{NetworkTopology, NodeId, NodeState, Packet, Path};
use crate::routing::{PathSource, Router};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverloadPolicy {
    /// Hold the whole request until the next refresh.
    Wait,
    /// Send the most important packets that fit now.
    Prioritize,
}

impl OverloadPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OverloadPolicy::Wait => "wait",
            OverloadPolicy::Prioritize => "prioritize",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [OverloadPolicy::Wait, OverloadPolicy::Prioritize]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    pub refresh_interval: f64,
    /// Put every node except the parent to sleep between transfers.
    pub duty_cycle: bool,
    pub overload_policy: OverloadPolicy,
    /// Under `Prioritize`, carry the excess to the next cycle instead of dropping it.
    pub prioritize_spill: bool,
    pub path_cache: bool,
    /// Seconds per radio hop.
    pub hop_latency: f64,
    /// Effective channel bandwidth in bits per second.
    pub bandwidth_bps: f64,
    pub drain: DrainPolicy,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            refresh_interval: 2.0,
            duty_cycle: true,
            overload_policy: OverloadPolicy::Wait,
            prioritize_spill: false,
            path_cache: true,
            hop_latency: 0.01,
            bandwidth_bps: 2e6,
            drain: DrainPolicy::default(),
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.refresh_interval > 0.0 && self.refresh_interval.is_finite()) {
            return Err(Error::InvalidRefreshInterval(self.refresh_interval));
        }
        if !(self.hop_latency >= 0.0 && self.hop_latency.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "hop_latency must be non-negative, got {}",
                self.hop_latency
            )));
        }
        if !(self.bandwidth_bps > 0.0 && self.bandwidth_bps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_bps
            )));
        }
        self.drain.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRequest {
    pub id: u64,
    pub transmitter: NodeId,
    pub packets: Vec<Packet>,
    /// Time the request was first offered.
    pub submitted_at: f64,
    /// Refreshes the request has already waited through.
    pub deferrals: u32,
}

impl TransferRequest {
    pub fn new(id: u64, transmitter: NodeId, packets: Vec<Packet>, submitted_at: f64) -> Self {
        Self {
            id,
            transmitter,
            packets,
            submitted_at,
            deferrals: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.packets.is_empty() {
            return Err(Error::InvalidRequest(format!("request {} has no packets", self.id)));
        }
        if let Some(p) = self.packets.iter().find(|p| p.source != self.transmitter) {
            return Err(Error::InvalidRequest(format!(
                "packet {} of request {} comes from {} not {}",
                p.seq, self.id, p.source, self.transmitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Failure {
    /// The greedy walk hit a dead end, or a fixed route lost a hop.
    NoPath,
    /// The cycle has no live parent.
    NoParent,
    /// The transmitter died while its request was waiting.
    SourceDead,
}

impl Failure {
    pub fn as_str(self) -> &'static str {
        match self {
            Failure::NoPath => "no-path",
            Failure::NoParent => "no-parent",
            Failure::SourceDead => "source-dead",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "no-path" => Failure::NoPath,
            "no-parent" => Failure::NoParent,
            "source-dead" => Failure::SourceDead,
            _ => return None,
        })
    }
}

/// What happened to every packet of one transfer attempt. The four packet
/// lists partition the request.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub request_id: u64,
    pub transmitter: NodeId,
    pub parent: Option<NodeId>,
    pub attempt: u32,
    pub delivered: Vec<Packet>,
    pub deferred: Vec<Packet>,
    pub dropped: Vec<Packet>,
    pub undeliverable: Vec<Packet>,
    pub failure: Option<Failure>,
    pub path_used: Option<Path>,
    pub path_source: Option<PathSource>,
    pub admission: Option<AdmissionDecision>,
    pub dispatched_at: f64,
    pub delivered_at: Option<f64>,
}

impl TransferOutcome {
    fn empty(request: &TransferRequest, parent: Option<NodeId>, now: f64) -> Self {
        Self {
            request_id: request.id,
            transmitter: request.transmitter,
            parent,
            attempt: request.deferrals,
            delivered: Vec::new(),
            deferred: Vec::new(),
            dropped: Vec::new(),
            undeliverable: Vec::new(),
            failure: None,
            path_used: None,
            path_source: None,
            admission: None,
            dispatched_at: now,
            delivered_at: None,
        }
    }

    fn failed(request: &TransferRequest, parent: Option<NodeId>, now: f64, failure: Failure) -> Self {
        let mut outcome = Self::empty(request, parent, now);
        outcome.undeliverable = request.packets.clone();
        outcome.failure = Some(failure);
        outcome
    }

    pub fn hop_count(&self) -> usize {
        self.path_used.as_ref().map_or(0, Path::hop_count)
    }
}

/// End-to-end delay of a transfer: delivery time minus the creation time of
/// its oldest delivered packet. `None` when nothing was delivered.
pub fn transfer_delay(outcome: &TransferOutcome) -> Option<f64> {
    let delivered_at = outcome.delivered_at?;
    outcome
        .delivered
        .iter()
        .map(|p| p.created_at)
        .min_by(f64::total_cmp)
        .map(|oldest| delivered_at - oldest)
}

/// A fixed aggregator with precomputed routes that never refresh.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedTree {
    pub aggregator: NodeId,
    pub routes: BTreeMap<NodeId, Path>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleState {
    pub index: u64,
    pub started_at: f64,
    pub parent: Option<NodeId>,
    /// Packets the parent accepted this cycle.
    pub received: u64,
    timings: Vec<PacketTiming>,
}

/// Statistics of a finished cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSummary {
    pub index: u64,
    pub started_at: f64,
    pub ended_at: f64,
    pub parent: Option<NodeId>,
    pub received: u64,
    /// `Σ T_i / D_i` over the packets relayed to the parent this cycle.
    pub utilization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefreshReport {
    pub index: u64,
    pub closed: Option<CycleSummary>,
    /// `None` under a fixed tree.
    pub election: Option<ElectionResult>,
    pub parent: Option<NodeId>,
    pub resubmitted: Vec<TransferOutcome>,
}

#[derive(Debug, Clone)]
pub struct Aggregator {
    config: AggregationConfig,
    network: NetworkTopology,
    router: Router,
    fixed: Option<FixedTree>,
    budgets: Vec<CapacityState>,
    cycle: Option<CycleState>,
    cycles_started: u64,
    deferred: VecDeque<TransferRequest>,
    log: DrainLog,
    clock: f64,
}

impl Aggregator {
    pub fn new(network: NetworkTopology, config: AggregationConfig) -> Result<Self> {
        config.validate()?;
        let budgets = network
            .nodes()
            .iter()
            .map(|n| CapacityState::new(n.comm_capacity, config.bandwidth_bps, config.refresh_interval))
            .collect::<Result<_>>()?;
        Ok(Self {
            router: Router::new(config.path_cache),
            config,
            network,
            fixed: None,
            budgets,
            cycle: None,
            cycles_started: 0,
            deferred: VecDeque::new(),
            log: DrainLog::new(),
            clock: 0.0,
        })
    }

    /// Runs over a fixed tree instead of electing parents: the aggregator
    /// serves every cycle, routes come from `tree`, and nobody sleeps.
    pub fn with_fixed_tree(mut self, tree: FixedTree) -> Self {
        self.fixed = Some(tree);
        self.config.duty_cycle = false;
        self
    }

    pub fn config(&self) -> &AggregationConfig {
        &self.config
    }

    pub fn network(&self) -> &NetworkTopology {
        &self.network
    }

    pub fn router(&self) -> &Router {
        &self.router
    }

    pub fn drain_log(&self) -> &DrainLog {
        &self.log
    }

    pub fn cycle(&self) -> Option<&CycleState> {
        self.cycle.as_ref()
    }

    pub fn budget(&self, node: NodeId) -> Option<&CapacityState> {
        self.budgets.get(node.index())
    }

    pub fn pending(&self) -> impl Iterator<Item = &TransferRequest> {
        self.deferred.iter()
    }

    pub fn pending_packets(&self) -> usize {
        self.deferred.iter().map(|r| r.packets.len()).sum()
    }

    pub fn awake_nodes(&self) -> Vec<NodeId> {
        self.network
            .nodes()
            .iter()
            .filter(|n| n.is_alive() && n.is_awake())
            .map(|n| n.id)
            .collect()
    }

    /// Charges the awake drain every awake node accrued up to `now`.
    ///
    /// A node that runs dry is logged as depleted at the exact instant its
    /// battery reached zero.
    pub fn advance_to(&mut self, now: f64) -> Result<()> {
        if now < self.clock {
            return Err(Error::InvalidInterval {
                start: self.clock,
                end: now,
            });
        }
        let policy = self.config.drain;
        let mut charges = Vec::new();
        for id in self.awake_nodes() {
            let since = self.network.node(id)?.awake_since().unwrap_or(now);
            let awake = self.network.settle_awake(id, now)?;
            let energy = self.network.node(id)?.e_avail();
            let survival = energy::awake_survival(&policy, energy);
            let at = if survival <= awake { since + survival } else { now };
            charges.push((at, id, awake));
        }
        charges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (at, id, awake) in charges {
            energy::apply_awake_drain(&policy, id, awake, &mut self.network, &mut self.log, at)?;
        }
        self.clock = now;
        Ok(())
    }

    /// Closes the running cycle, if any, at `now`.
    pub fn close_cycle(&mut self, now: f64) -> Result<Option<CycleSummary>> {
        self.advance_to(now)?;
        let Some(cycle) = self.cycle.take() else {
            return Ok(None);
        };
        let utilization = crate::capacity::utilization(&cycle.timings)?;
        Ok(Some(CycleSummary {
            index: cycle.index,
            started_at: cycle.started_at,
            ended_at: now,
            parent: cycle.parent,
            received: cycle.received,
            utilization,
        }))
    }

    /// Starts a new cycle at `now`: elect a parent (or reinstate the fixed
    /// aggregator), renew all budgets and replay waiting requests in FIFO order.
    pub fn refresh_network(&mut self, now: f64) -> Result<RefreshReport> {
        let closed = self.close_cycle(now)?;
        if self.network.alive_count() == 0 {
            return Err(Error::NetworkDead);
        }
        let index = self.cycles_started;
        self.cycles_started += 1;
        let policy = self.config.drain;

        let (parent, election) = match &self.fixed {
            Some(tree) => {
                let aggregator = tree.aggregator;
                let alive: Vec<NodeId> = self.network.alive_ids().collect();
                let parent = if self.network.node(aggregator)?.is_alive() {
                    self.network.assign_parent(aggregator, now)?;
                    Some(aggregator)
                } else {
                    None
                };
                for id in alive {
                    self.network.set_state(id, NodeState::Awake, now)?;
                }
                (parent, None)
            }
            None => {
                if policy.broadcast_drain > 0.0 {
                    for id in self.network.alive_ids().collect::<Vec<_>>() {
                        energy::drain(
                            &mut self.network,
                            &mut self.log,
                            id,
                            policy.broadcast_drain,
                            DrainKind::Broadcast,
                            now,
                        );
                    }
                }
                let result =
                    election::select_parent(&mut self.network, index, now, self.config.duty_cycle)?;
                for &(id, awake) in &result.slept {
                    energy::apply_awake_drain(&policy, id, awake, &mut self.network, &mut self.log, now)?;
                }
                (Some(result.parent), Some(result))
            }
        };
        if let Some(p) = parent {
            energy::drain(
                &mut self.network,
                &mut self.log,
                p,
                policy.parent_cycle_drain,
                DrainKind::ParentCycle,
                now,
            );
        }
        let parent = parent.filter(|p| self.network.node(*p).is_ok_and(|n| n.is_alive()));

        for budget in &mut self.budgets {
            budget.reset(self.config.refresh_interval)?;
        }
        self.cycle = Some(CycleState {
            index,
            started_at: now,
            parent,
            received: 0,
            timings: Vec::new(),
        });

        let waiting = std::mem::take(&mut self.deferred);
        let mut resubmitted = Vec::with_capacity(waiting.len());
        for request in waiting {
            let alive = self.network.node(request.transmitter)?.is_alive();
            let outcome = if alive {
                self.dispatch(request, now)?
            } else {
                TransferOutcome::failed(&request, parent, now, Failure::SourceDead)
            };
            resubmitted.push(outcome);
        }

        Ok(RefreshReport {
            index,
            closed,
            election,
            parent,
            resubmitted,
        })
    }

    /// Offers a transfer to the current parent at `now`.
    pub fn submit_transfer(&mut self, request: TransferRequest, now: f64) -> Result<TransferOutcome> {
        request.validate()?;
        self.advance_to(now)?;
        if !self.network.node(request.transmitter)?.is_alive() {
            return Err(Error::DeadNode(request.transmitter));
        }
        self.dispatch(request, now)
    }

    fn resolve(&mut self, transmitter: NodeId, parent: NodeId) -> Result<Option<(Path, PathSource)>> {
        if let Some(tree) = &self.fixed {
            return Ok(tree
                .routes
                .get(&transmitter)
                .filter(|p| p.parent() == parent && p.is_alive(&self.network))
                .map(|p| (p.clone(), PathSource::Cached)));
        }
        match self.router.resolve(transmitter, parent, &self.network) {
            Ok(found) => Ok(Some(found)),
            Err(Error::NoPath { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn dispatch(&mut self, request: TransferRequest, now: f64) -> Result<TransferOutcome> {
        let parent = self
            .cycle
            .as_ref()
            .and_then(|c| c.parent)
            .filter(|p| self.network.node(*p).is_ok_and(|n| n.is_alive()));
        let Some(parent) = parent else {
            return Ok(TransferOutcome::failed(&request, None, now, Failure::NoParent));
        };

        let route = if request.transmitter == parent {
            None
        } else {
            match self.resolve(request.transmitter, parent)? {
                Some(found) => Some(found),
                None => return Ok(TransferOutcome::failed(&request, Some(parent), now, Failure::NoPath)),
            }
        };

        let mut outcome = TransferOutcome::empty(&request, Some(parent), now);
        let decision = {
            let mut probe = self.budgets[parent.index()];
            probe.admit(request.packets.len() as u64)
        };
        outcome.admission = Some(decision);

        match decision {
            AdmissionDecision::Accept(_) => outcome.delivered = request.packets.clone(),
            AdmissionDecision::Overload { accepted, .. } => match self.config.overload_policy {
                OverloadPolicy::Wait => outcome.deferred = request.packets.clone(),
                OverloadPolicy::Prioritize => {
                    let mut ranked = request.packets.clone();
                    ranked.sort_by_key(|p| (p.priority, p.seq));
                    let rest = ranked.split_off(accepted as usize);
                    outcome.delivered = ranked;
                    if self.config.prioritize_spill {
                        outcome.deferred = rest;
                    } else {
                        outcome.dropped = rest;
                    }
                }
            },
        }
        // only packets actually sent consume the parent's budget
        self.budgets[parent.index()].remaining -= outcome.delivered.len() as u64;

        if let Some((path, source)) = route {
            outcome.path_used = Some(path);
            outcome.path_source = Some(source);
        }

        if !outcome.delivered.is_empty() {
            self.deliver(&mut outcome, parent, now)?;
        }

        if !outcome.deferred.is_empty() {
            self.deferred.push_back(TransferRequest {
                id: request.id,
                transmitter: request.transmitter,
                packets: outcome.deferred.clone(),
                submitted_at: request.submitted_at,
                deferrals: request.deferrals + 1,
            });
        }
        Ok(outcome)
    }

    fn deliver(&mut self, outcome: &mut TransferOutcome, parent: NodeId, now: f64) -> Result<()> {
        let policy = self.config.drain;
        let (transmitter, intermediates, hops) = match &outcome.path_used {
            Some(path) => (path.transmitter(), path.intermediates().to_vec(), path.hop_count()),
            None => (parent, Vec::new(), 0),
        };
        let duration = hops as f64 * self.config.hop_latency;

        // transmitter and relays wake for the transfer only
        let mut woken = Vec::new();
        if self.config.duty_cycle {
            for id in std::iter::once(transmitter).chain(intermediates.iter().copied()) {
                if id != parent && !self.network.node(id)?.is_awake() {
                    self.network.set_state(id, NodeState::Awake, now)?;
                    woken.push(id);
                }
            }
        }

        energy::apply_transaction_drain(
            &policy,
            parent,
            transmitter,
            &intermediates,
            &mut self.network,
            &mut self.log,
            now,
        )?;

        for id in woken {
            if !self.network.node(id)?.is_alive() {
                continue;
            }
            if let Some(awake) = self.network.set_state(id, NodeState::Sleep, now + duration)? {
                energy::apply_awake_drain(&policy, id, awake, &mut self.network, &mut self.log, now)?;
            }
        }

        outcome.delivered_at = Some(now + duration);
        if let Some(cycle) = self.cycle.as_mut() {
            cycle.received += outcome.delivered.len() as u64;
            if transmitter != parent {
                let d = self.network.node(transmitter)?.position.distance_to(
                    &self.network.node(parent)?.position,
                );
                cycle.timings.extend(outcome.delivered.iter().map(|p| {
                    PacketTiming::from_size(f64::from(p.size_bits), self.config.bandwidth_bps, d)
                }));
            }
        }
        Ok(())
    }
}
