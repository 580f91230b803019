//! Offered load, generated up front from the scenario seed so every
//! protocol sees the same transfers.

use rand::seq::index::sample;
use rand::Rng;

use super::config::ScenarioConfig;
use crate::aggregation::TransferRequest;
use crate::model::{NodeId, Packet};

/// Constant-rate transfers from `traffic_sources` randomly chosen nodes, each
/// source starting at a random phase within its first period. Requests are
/// ordered by time, then source id.
pub fn cbr_schedule<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Vec<TransferRequest> {
    let n_sources = config.traffic_sources.min(config.node_count);
    if n_sources == 0 || config.traffic_rate <= 0.0 {
        return Vec::new();
    }
    let mut sources: Vec<NodeId> = sample(rng, config.node_count, n_sources)
        .into_iter()
        .map(|i| NodeId(i as u32))
        .collect();
    sources.sort();

    let period = 1.0 / config.traffic_rate;
    let mut slots: Vec<(f64, NodeId)> = Vec::new();
    for &source in &sources {
        let phase = rng.random::<f64>() * period;
        let mut k = 0u64;
        loop {
            let t = phase + k as f64 * period;
            if t >= config.duration {
                break;
            }
            slots.push((t, source));
            k += 1;
        }
    }
    slots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut seq = 0u64;
    slots
        .into_iter()
        .enumerate()
        .map(|(id, (t, source))| {
            let packets = (0..config.packets_per_transfer)
                .map(|_| {
                    let p = Packet {
                        seq,
                        source,
                        created_at: t,
                        size_bits: config.packet_size_bits,
                        priority: rng.random_range(0..config.priority_levels),
                    };
                    seq += 1;
                    p
                })
                .collect();
            TransferRequest::new(id as u64, source, packets, t)
        })
        .collect()
}
