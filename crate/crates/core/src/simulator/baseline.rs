//! Static shortest-hop tree used as the comparison protocol.

use std::collections::{BTreeMap, VecDeque};

use crate::aggregation::FixedTree;
use crate::error::Result;
use crate::model::{NetworkTopology, NodeId, Path, Position};

/// Node closest to `center`, ties to the smaller id.
pub fn nearest_to(network: &NetworkTopology, center: Position) -> NodeId {
    network
        .nodes()
        .iter()
        .map(|n| (n.id, n.position.distance_to(&center)))
        .fold(None, |best: Option<(NodeId, f64)>, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
        .map(|(id, _)| id)
        .expect("topologies are never empty")
}

/// Breadth-first hop-count tree rooted at `aggregator`. Returns the tree and
/// the nodes it cannot reach.
pub fn shortest_hop_tree(
    network: &NetworkTopology,
    aggregator: NodeId,
) -> Result<(FixedTree, Vec<NodeId>)> {
    let mut up: Vec<Option<NodeId>> = vec![None; network.len()];
    let mut seen = vec![false; network.len()];
    seen[aggregator.index()] = true;
    let mut queue = VecDeque::from([aggregator]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in network.neighbors(u) {
            if !seen[v.index()] {
                seen[v.index()] = true;
                up[v.index()] = Some(u);
                queue.push_back(v);
            }
        }
    }

    let mut routes = BTreeMap::new();
    let mut unreachable = Vec::new();
    for id in network.ids().filter(|&id| id != aggregator) {
        if !seen[id.index()] {
            unreachable.push(id);
            continue;
        }
        let mut hops = vec![id];
        let mut cur = id;
        while let Some(next) = up[cur.index()] {
            hops.push(next);
            cur = next;
        }
        routes.insert(id, Path::new(hops, network)?);
    }
    Ok((FixedTree { aggregator, routes }, unreachable))
}
