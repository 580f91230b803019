//! Domain types shared by every part of the simulator: node identities,
//! sensor nodes with their sleep/awake state machine, the radio-range
//! connectivity graph, packets and hop paths.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node identifier, assigned `0..n` in the order nodes were specified.
///
/// The total order on ids is the last-resort tie-break everywhere in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeState {
    Sleep,
    Awake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Plain,
    Parent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNode {
    pub id: NodeId,
    pub position: Position,
    /// Packets per second the node can aggregate when it serves as parent.
    pub comm_capacity: f64,
    e_avail: f64,
    state: NodeState,
    role: Role,
    awake_since: Option<f64>,
}

impl SensorNode {
    pub fn e_avail(&self) -> f64 {
        self.e_avail
    }

    pub fn is_alive(&self) -> bool {
        self.e_avail > 0.0
    }

    pub fn state(&self) -> NodeState {
        self.state
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn is_awake(&self) -> bool {
        self.state == NodeState::Awake
    }

    /// Start of the awake period not yet charged to the node's battery.
    pub fn awake_since(&self) -> Option<f64> {
        self.awake_since
    }
}

/// Input description of one node for [`NetworkTopology::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub position: Position,
    pub initial_energy: f64,
    pub comm_capacity: f64,
}

impl NodeSpec {
    pub fn new(x: f64, y: f64, initial_energy: f64, comm_capacity: f64) -> Self {
        Self {
            position: Position::new(x, y),
            initial_energy,
            comm_capacity,
        }
    }
}

/// Node set plus the symmetric disc-model connectivity graph.
///
/// Two nodes are neighbours iff their euclidean distance is at most the
/// radio range. The edge set is fixed at construction; dead nodes are
/// filtered out by [`NetworkTopology::alive_neighbors`] rather than removed.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    nodes: Vec<SensorNode>,
    radio_range: f64,
    adjacency: Vec<Vec<(NodeId, f64)>>,
}

impl NetworkTopology {
    pub fn build(specs: &[NodeSpec], radio_range: f64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        if !(radio_range > 0.0 && radio_range.is_finite()) {
            return Err(Error::InvalidRange(radio_range));
        }
        let mut nodes = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let id = NodeId(i as u32);
            if !(spec.initial_energy > 0.0 && spec.initial_energy.is_finite()) {
                return Err(Error::NonPositiveEnergy {
                    node: id,
                    energy: spec.initial_energy,
                });
            }
            if !(spec.comm_capacity > 0.0 && spec.comm_capacity.is_finite()) {
                return Err(Error::NonPositiveCapacity {
                    node: id,
                    capacity: spec.comm_capacity,
                });
            }
            nodes.push(SensorNode {
                id,
                position: spec.position,
                comm_capacity: spec.comm_capacity,
                e_avail: spec.initial_energy,
                state: NodeState::Sleep,
                role: Role::Plain,
                awake_since: None,
            });
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                let d = nodes[i].position.distance_to(&nodes[j].position);
                if d == 0.0 {
                    return Err(Error::DuplicatePosition {
                        first: nodes[i].id,
                        second: nodes[j].id,
                    });
                }
                if d <= radio_range {
                    adjacency[i].push((nodes[j].id, d));
                    adjacency[j].push((nodes[i].id, d));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(id, _)| id);
        }

        Ok(Self {
            nodes,
            radio_range,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn nodes(&self) -> &[SensorNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&SensorNode> {
        self.nodes.get(id.index()).ok_or(Error::UnknownNode(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn alive_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| n.is_alive()).map(|n| n.id)
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_alive()).count()
    }

    pub fn total_energy(&self) -> f64 {
        self.nodes.iter().map(|n| n.e_avail).sum()
    }

    /// All radio neighbours with their distances, sorted by id.
    pub fn neighbors(&self, id: NodeId) -> &[(NodeId, f64)] {
        self.adjacency.get(id.index()).map_or(&[], Vec::as_slice)
    }

    pub fn alive_neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.neighbors(id)
            .iter()
            .map(|&(n, _)| n)
            .filter(|n| self.nodes[n.index()].is_alive())
    }

    pub fn is_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search_by_key(&b, |&(n, _)| n).is_ok()
    }

    /// Distance along an edge, `None` if `a` and `b` are not neighbours.
    pub fn distance(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let list = self.neighbors(a);
        list.binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|i| list[i].1)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// The node currently holding the parent role, if any.
    pub fn parent(&self) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.role == Role::Parent)
            .map(|n| n.id)
    }

    /// Changes a node's radio state.
    ///
    /// Returns the awake seconds accumulated since the clock was last settled
    /// when the node goes to sleep, `None` otherwise. Waking an awake node is
    /// a no-op that leaves the clock running.
    pub fn set_state(&mut self, id: NodeId, state: NodeState, now: f64) -> Result<Option<f64>> {
        let node = self.alive_node_mut(id)?;
        match (node.state, state) {
            (NodeState::Sleep, NodeState::Awake) => {
                node.state = NodeState::Awake;
                node.awake_since = Some(now);
                Ok(None)
            }
            (NodeState::Awake, NodeState::Sleep) => {
                if node.role == Role::Parent {
                    return Err(Error::ParentMustStayAwake(id));
                }
                node.state = NodeState::Sleep;
                let since = node.awake_since.take().unwrap_or(now);
                Ok(Some((now - since).max(0.0)))
            }
            _ => Ok(None),
        }
    }

    /// Returns awake seconds since the last settlement and restarts the clock at `now`.
    pub fn settle_awake(&mut self, id: NodeId, now: f64) -> Result<f64> {
        let node = self.alive_node_mut(id)?;
        match node.awake_since {
            Some(since) if node.state == NodeState::Awake => {
                node.awake_since = Some(now);
                Ok((now - since).max(0.0))
            }
            _ => Ok(0.0),
        }
    }

    /// Hands the parent role to `id` and wakes it. The previous parent keeps
    /// its radio state and becomes a plain node.
    pub fn assign_parent(&mut self, id: NodeId, now: f64) -> Result<Option<NodeId>> {
        self.alive_node_mut(id)?;
        let previous = self.clear_parent();
        self.set_state(id, NodeState::Awake, now)?;
        self.nodes[id.index()].role = Role::Parent;
        Ok(previous)
    }

    pub fn clear_parent(&mut self) -> Option<NodeId> {
        let previous = self.parent();
        if let Some(p) = previous {
            self.nodes[p.index()].role = Role::Plain;
        }
        previous
    }

    /// Writes a node's energy. Reaching zero kills the node: it drops any
    /// role and its radio is switched off.
    pub(crate) fn set_energy(&mut self, id: NodeId, energy: f64) {
        let node = &mut self.nodes[id.index()];
        node.e_avail = energy.max(0.0);
        if node.e_avail == 0.0 {
            node.state = NodeState::Sleep;
            node.role = Role::Plain;
            node.awake_since = None;
        }
    }

    fn alive_node_mut(&mut self, id: NodeId) -> Result<&mut SensorNode> {
        let node = self
            .nodes
            .get_mut(id.index())
            .ok_or(Error::UnknownNode(id))?;
        if !node.is_alive() {
            return Err(Error::DeadNode(id));
        }
        Ok(node)
    }
}

/// One sensed reading travelling towards the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub seq: u64,
    pub source: NodeId,
    pub created_at: f64,
    pub size_bits: u32,
    /// Lower values are more important.
    pub priority: u32,
}

/// Hop list from a transmitter (first) to a parent (last).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path(Vec<NodeId>);

impl Path {
    /// Validates the hop list against `topology`: at least two hops, no
    /// repeated node, every consecutive pair adjacent.
    pub fn new(hops: Vec<NodeId>, topology: &NetworkTopology) -> Result<Self> {
        if hops.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "a path needs at least two hops, got {}",
                hops.len()
            )));
        }
        for (i, hop) in hops.iter().enumerate() {
            topology.node(*hop)?;
            if hops[..i].contains(hop) {
                return Err(Error::InvalidPath(format!("node {hop} appears twice")));
            }
        }
        for pair in hops.windows(2) {
            if !topology.is_edge(pair[0], pair[1]) {
                return Err(Error::InvalidPath(format!(
                    "{} and {} are not neighbours",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self(hops))
    }

    pub fn hops(&self) -> &[NodeId] {
        &self.0
    }

    pub fn transmitter(&self) -> NodeId {
        self.0[0]
    }

    pub fn parent(&self) -> NodeId {
        self.0[self.0.len() - 1]
    }

    pub fn intermediates(&self) -> &[NodeId] {
        &self.0[1..self.0.len() - 1]
    }

    /// Number of radio transmissions along the path.
    pub fn hop_count(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_alive(&self, topology: &NetworkTopology) -> bool {
        self.0
            .iter()
            .all(|id| topology.node(*id).is_ok_and(SensorNode::is_alive))
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, hop) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(">")?;
            }
            write!(f, "{hop}")?;
        }
        Ok(())
    }
}
