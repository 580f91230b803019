//! Parent election.
//!
//! Every alive node broadcasts its available energy; the node with the most
//! energy becomes the parent. Energy ties go to the larger communication
//! capacity, and remaining ties to the smaller node id. The parent is woken
//! and, when duty cycling is on, every other node is put to sleep.

use crate::error::{Error, Result};
use crate::model::{NetworkTopology, NodeId, NodeState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contender {
    pub id: NodeId,
    pub e_avail: f64,
    pub comm_capacity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionResult {
    pub parent: NodeId,
    pub round: u64,
    /// Alive nodes at election time, by id.
    pub contenders: Vec<Contender>,
    /// Nodes switched off by the election with the awake seconds they had
    /// not yet been charged for.
    pub slept: Vec<(NodeId, f64)>,
}

/// Energy census of alive nodes, ordered by id.
pub fn broadcast_energy(network: &NetworkTopology) -> Vec<(NodeId, f64)> {
    network
        .nodes()
        .iter()
        .filter(|n| n.is_alive())
        .map(|n| (n.id, n.e_avail()))
        .collect()
}

fn contenders(network: &NetworkTopology) -> Vec<Contender> {
    network
        .nodes()
        .iter()
        .filter(|n| n.is_alive())
        .map(|n| Contender {
            id: n.id,
            e_avail: n.e_avail(),
            comm_capacity: n.comm_capacity,
        })
        .collect()
}

/// Running-maximum scan over the contenders in id order.
fn winner(contenders: &[Contender]) -> Option<NodeId> {
    let mut best: Option<&Contender> = None;
    for c in contenders {
        best = match best {
            None => Some(c),
            Some(b)
                if c.e_avail > b.e_avail
                    || (c.e_avail == b.e_avail && c.comm_capacity > b.comm_capacity) =>
            {
                Some(c)
            }
            keep => keep,
        };
    }
    best.map(|c| c.id)
}

/// Who would win an election on the current network state.
pub fn elect(network: &NetworkTopology) -> Result<NodeId> {
    winner(&contenders(network)).ok_or(Error::NetworkDead)
}

/// Runs an election and applies the resulting role and radio states.
///
/// With `duty_cycle` off every alive node is left awake, which is how the
/// always-on ablation runs.
pub fn select_parent(
    network: &mut NetworkTopology,
    round: u64,
    now: f64,
    duty_cycle: bool,
) -> Result<ElectionResult> {
    let contenders = contenders(network);
    let parent = winner(&contenders).ok_or(Error::NetworkDead)?;
    network.assign_parent(parent, now)?;

    let mut slept = Vec::new();
    for c in &contenders {
        if c.id == parent {
            continue;
        }
        let state = if duty_cycle {
            NodeState::Sleep
        } else {
            NodeState::Awake
        };
        if let Some(awake) = network.set_state(c.id, state, now)? {
            slept.push((c.id, awake));
        }
    }

    Ok(ElectionResult {
        parent,
        round,
        contenders,
        slept,
    })
}
