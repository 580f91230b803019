//! Seeded discrete-event runs.
//!
//! A run places nodes uniformly in the area, draws a constant-rate traffic
//! schedule, and then replays two event streams through one priority queue:
//! refreshes at `k · refresh_interval` and the scheduled transfers. On equal
//! timestamps refreshes go first. Everything random is drawn from a single
//! ChaCha stream seeded by the scenario, before the protocol runs, so
//! `(config, seed)` fixes the trace byte for byte and all protocols see the
//! same offered load.

mod baseline;
mod config;
mod metrics;
mod trace;
mod traffic;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use self::baseline::{nearest_to, shortest_hop_tree};
pub use self::config::{Protocol, ScenarioConfig};
pub use self::metrics::{collect_metrics, CycleSnapshot, MetricsRecord};
pub use self::trace::{Event, Trace, TraceLine};
pub use self::traffic::cbr_schedule;

use self::metrics::Tally;
use crate::aggregation::{Aggregator, CycleSummary, TransferOutcome, TransferRequest};
use crate::error::{Error, Result};
use crate::model::{NetworkTopology, NodeSpec, Position};
use crate::routing::PathSource;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: MetricsRecord,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    Refresh(u64),
    Transfer(usize),
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    action: Action,
}

impl Scheduled {
    fn key(&self) -> (u8, usize) {
        match self.action {
            Action::Refresh(k) => (0, k as usize),
            Action::Transfer(i) => (1, i),
        }
    }
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // reversed: BinaryHeap pops the earliest event first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.key().cmp(&self.key()))
    }
}

/// Uniform random placement of `node_count` distinct positions.
pub fn place_nodes<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Vec<NodeSpec> {
    let mut specs: Vec<NodeSpec> = Vec::with_capacity(config.node_count);
    while specs.len() < config.node_count {
        let position = Position::new(
            rng.random::<f64>() * config.area_width,
            rng.random::<f64>() * config.area_height,
        );
        if specs.iter().all(|s| s.position != position) {
            specs.push(NodeSpec {
                position,
                initial_energy: config.initial_energy,
                comm_capacity: config.comm_capacity,
            });
        }
    }
    specs
}

/// Runs the scenario described by `config`.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let specs = place_nodes(config, &mut rng);
    let requests = cbr_schedule(config, &mut rng);
    let network = NetworkTopology::build(&specs, config.radio_range)?;
    run_with(network, requests, config)
}

/// The static shortest-hop tree on the same placement and traffic as `run`.
pub fn run_static_tree_baseline(config: &ScenarioConfig) -> Result<MetricsRecord> {
    let config = ScenarioConfig {
        protocol: Protocol::StaticTree,
        ..config.clone()
    };
    Ok(run(&config)?.metrics)
}

/// Runs `config.protocol` over a given network and transfer schedule.
///
/// Placement, seed and traffic fields of `config` are ignored here; the
/// remaining fields configure the protocol and the horizon.
pub fn run_with(
    network: NetworkTopology,
    requests: Vec<TransferRequest>,
    config: &ScenarioConfig,
) -> Result<RunOutput> {
    let mut unreachable = Vec::new();
    let mut aggregator = Aggregator::new(network, config.aggregation())?;
    if config.protocol == Protocol::StaticTree {
        let net = aggregator.network();
        let center = Position::new(config.area_width / 2.0, config.area_height / 2.0);
        let (tree, missing) = shortest_hop_tree(net, nearest_to(net, center))?;
        unreachable = missing;
        aggregator = aggregator.with_fixed_tree(tree);
    }
    let mut engine = Engine::new(aggregator, config.duration);
    for node in unreachable {
        engine.trace.push(0.0, Event::Unreachable { node });
    }

    let mut queue = BinaryHeap::new();
    let mut k = 0u64;
    loop {
        let time = k as f64 * config.refresh_interval;
        if time >= config.duration {
            break;
        }
        queue.push(Scheduled {
            time,
            action: Action::Refresh(k),
        });
        k += 1;
    }
    for (i, r) in requests.iter().enumerate() {
        if r.submitted_at < config.duration {
            queue.push(Scheduled {
                time: r.submitted_at,
                action: Action::Transfer(i),
            });
        }
    }

    let mut end = config.duration;
    while let Some(ev) = queue.pop() {
        if engine.agg.network().alive_count() == 0 {
            end = ev.time;
            break;
        }
        match ev.action {
            Action::Refresh(_) => {
                if !engine.refresh(ev.time)? {
                    end = ev.time;
                    break;
                }
            }
            Action::Transfer(i) => engine.transfer(&requests[i], ev.time)?,
        }
    }
    engine.finish(end)
}

struct Engine {
    agg: Aggregator,
    trace: Trace,
    tally: Tally,
    cursor: usize,
    first_death: Option<f64>,
    initial: Vec<f64>,
    cycles: Vec<CycleSnapshot>,
    horizon: f64,
}

impl Engine {
    fn new(agg: Aggregator, horizon: f64) -> Self {
        let mut trace = Trace::default();
        let initial: Vec<f64> = agg.network().nodes().iter().map(|n| n.e_avail()).collect();
        for n in agg.network().nodes() {
            trace.push(
                0.0,
                Event::Node {
                    node: n.id,
                    x: n.position.x,
                    y: n.position.y,
                    energy: n.e_avail(),
                    capacity: n.comm_capacity,
                },
            );
        }
        Self {
            agg,
            trace,
            tally: Tally::default(),
            cursor: 0,
            first_death: None,
            initial,
            cycles: Vec::new(),
            horizon,
        }
    }

    fn flush_drains(&mut self) {
        let entries = &self.agg.drain_log().entries()[self.cursor..];
        for e in entries {
            self.trace.push(
                e.time,
                Event::Drain {
                    node: e.node,
                    kind: e.kind,
                    requested: e.requested,
                    applied: e.applied,
                },
            );
            if e.depleted {
                self.trace.push(e.time, Event::Death { node: e.node });
                self.first_death.get_or_insert(e.time);
            }
        }
        self.cursor += entries.len();
    }

    fn close(&mut self, summary: Option<CycleSummary>) {
        let Some(s) = summary else { return };
        self.trace.push(
            s.ended_at,
            Event::CycleEnd {
                cycle: s.index,
                parent: s.parent,
                packets: s.received,
                utilization: s.utilization,
            },
        );
        if let Some(snap) = self.cycles.iter_mut().rev().find(|c| c.cycle == s.index) {
            snap.received = s.received;
            snap.utilization = s.utilization;
        }
    }

    /// Returns `false` once the network is dead.
    fn refresh(&mut self, now: f64) -> Result<bool> {
        let closed = self.agg.close_cycle(now)?;
        self.flush_drains();
        self.close(closed);
        let report = match self.agg.refresh_network(now) {
            Ok(r) => r,
            Err(Error::NetworkDead) => return Ok(false),
            Err(e) => return Err(e),
        };
        let net = self.agg.network();
        let snapshot = CycleSnapshot {
            cycle: report.index,
            started_at: now,
            parent: report.parent,
            alive: net.alive_count(),
            residual_energy: net.total_energy(),
            received: 0,
            utilization: 0.0,
        };
        self.trace.push(
            now,
            Event::Refresh {
                cycle: snapshot.cycle,
                parent: snapshot.parent,
                alive: snapshot.alive,
                residual: snapshot.residual_energy,
            },
        );
        self.cycles.push(snapshot);
        for outcome in &report.resubmitted {
            self.record(outcome, now);
        }
        self.flush_drains();
        Ok(true)
    }

    fn transfer(&mut self, request: &TransferRequest, now: f64) -> Result<()> {
        self.agg.advance_to(now)?;
        self.flush_drains();
        if !self.agg.network().node(request.transmitter)?.is_alive() {
            return Ok(());
        }
        let outcome = self.agg.submit_transfer(request.clone(), now)?;
        self.record(&outcome, now);
        self.flush_drains();
        Ok(())
    }

    fn record(&mut self, o: &TransferOutcome, now: f64) {
        let total = o.delivered.len() + o.deferred.len() + o.dropped.len() + o.undeliverable.len();
        let source = o.transmitter;
        if o.failure != Some(crate::aggregation::Failure::SourceDead) {
            self.trace.push(
                now,
                Event::Submit {
                    request: o.request_id,
                    source,
                    packets: total,
                    attempt: o.attempt,
                },
            );
        }
        if o.attempt == 0 {
            self.tally.submitted += total as u64;
        }
        if let Some(path) = &o.path_used {
            self.trace.push(
                now,
                Event::Route {
                    request: o.request_id,
                    source,
                    hops: path.hops().to_vec(),
                    cached: o.path_source == Some(PathSource::Cached),
                },
            );
        }
        if let (Some(crate::capacity::AdmissionDecision::Overload { accepted, excess }), Some(parent)) =
            (o.admission, o.parent)
        {
            self.trace.push(
                now,
                Event::Overload {
                    request: o.request_id,
                    parent,
                    accepted,
                    excess,
                },
            );
        }
        if let Some(at) = o.delivered_at {
            for p in &o.delivered {
                let delay = at - p.created_at;
                self.tally.delivered += 1;
                self.tally.delay_sum += delay;
                self.trace.push(now, Event::Deliver { seq: p.seq, source, delay });
            }
        }
        for p in &o.dropped {
            self.tally.dropped += 1;
            self.trace.push(now, Event::Drop { seq: p.seq, source });
        }
        if !o.deferred.is_empty() {
            self.trace.push(
                now,
                Event::Defer {
                    request: o.request_id,
                    source,
                    packets: o.deferred.len(),
                },
            );
        }
        if let Some(reason) = o.failure {
            for p in &o.undeliverable {
                self.tally.undeliverable += 1;
                self.trace.push(now, Event::Undeliverable { seq: p.seq, source, reason });
            }
        }
    }

    fn finish(mut self, end: f64) -> Result<RunOutput> {
        let closed = self.agg.close_cycle(end)?;
        self.flush_drains();
        self.close(closed);
        let finals: Vec<f64> = self.agg.network().nodes().iter().map(|n| n.e_avail()).collect();
        for (i, e) in finals.iter().enumerate() {
            self.trace.push(
                end,
                Event::Final {
                    node: crate::model::NodeId(i as u32),
                    energy: *e,
                },
            );
        }
        let pending = self.agg.pending_packets();
        self.trace.push(
            end,
            Event::End {
                horizon: self.horizon,
                pending,
            },
        );
        let metrics = self.tally.finish(
            &self.initial,
            &finals,
            self.first_death.unwrap_or(self.horizon),
            pending as u64,
            self.cycles,
        );
        Ok(RunOutput {
            metrics,
            trace: self.trace,
        })
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed used for the `node_count` point of a sweep.
pub fn derive_seed(base_seed: u64, node_count: usize) -> u64 {
    mix(base_seed ^ mix(node_count as u64))
}

/// The configuration a sweep runs for one node count.
pub fn sweep_config(base: &ScenarioConfig, node_count: usize) -> ScenarioConfig {
    ScenarioConfig {
        node_count,
        seed: derive_seed(base.seed, node_count),
        ..base.clone()
    }
}

/// One run per node count, in the order given.
pub fn sweep(base: &ScenarioConfig, node_counts: &[usize]) -> Result<Vec<MetricsRecord>> {
    if node_counts.is_empty() {
        return Err(Error::InvalidConfig("a sweep needs at least one node count".into()));
    }
    node_counts
        .iter()
        .map(|&n| run(&sweep_config(base, n)).map(|o| o.metrics))
        .collect()
}
