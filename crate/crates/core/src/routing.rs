//! Energy-aware greedy path selection and the shared path memory table.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{NetworkTopology, NodeId, Path};

/// Walks from `source` towards `parent` one hop at a time.
///
/// If the parent is a one-hop neighbour of the current node the walk steps
/// onto it and stops; otherwise it moves to the unvisited alive neighbour
/// with the most available energy, ties going to the smaller id. A node with
/// nowhere left to go ends the walk with [`Error::NoPath`]; there is no
/// backtracking.
pub fn path_select(source: NodeId, parent: NodeId, network: &NetworkTopology) -> Result<Path> {
    if source == parent {
        return Err(Error::InvalidRequest(format!(
            "node {source} is already the parent"
        )));
    }
    for id in [source, parent] {
        if !network.node(id)?.is_alive() {
            return Err(Error::DeadNode(id));
        }
    }

    let mut hops = vec![source];
    let mut visited = HashSet::from([source]);
    let mut current = source;
    loop {
        if network.alive_neighbors(current).any(|n| n == parent) {
            hops.push(parent);
            break;
        }
        let next = network
            .alive_neighbors(current)
            .filter(|n| !visited.contains(n))
            .map(|n| (n, network.nodes()[n.index()].e_avail()))
            // neighbours come sorted by id, so keeping the first maximum
            // resolves energy ties towards the smaller id
            .fold(None, |best: Option<(NodeId, f64)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            });
        match next {
            Some((n, _)) => {
                visited.insert(n);
                hops.push(n);
                current = n;
            }
            None => {
                return Err(Error::NoPath {
                    from: source,
                    to: parent,
                })
            }
        }
    }
    Path::new(hops, network)
}

/// Paths already taken, keyed by `(parent, transmitter)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryTable {
    entries: BTreeMap<(NodeId, NodeId), Path>,
}

impl MemoryTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The stored path, provided every hop is still alive. A stale entry is
    /// evicted and reported as absent.
    pub fn lookup(
        &mut self,
        parent: NodeId,
        transmitter: NodeId,
        network: &NetworkTopology,
    ) -> Option<Path> {
        let key = (parent, transmitter);
        let path = self.entries.get(&key)?;
        if path.is_alive(network) {
            Some(path.clone())
        } else {
            self.entries.remove(&key);
            None
        }
    }

    pub fn update(
        &mut self,
        parent: NodeId,
        transmitter: NodeId,
        path: Path,
        network: &NetworkTopology,
    ) -> Result<()> {
        if path.transmitter() != transmitter || path.parent() != parent {
            return Err(Error::InvalidPath(format!(
                "path {path} does not run from {transmitter} to {parent}"
            )));
        }
        let path = Path::new(path.hops().to_vec(), network)?;
        self.entries.insert((parent, transmitter), path);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId, &Path)> {
        self.entries.iter().map(|(&(p, t), path)| (p, t, path))
    }

    /// One `parent,transmitter,hop>hop>...` line per entry, sorted by key.
    pub fn dump(&self) -> String {
        self.iter()
            .map(|(p, t, path)| format!("{p},{t},{path}\n"))
            .collect()
    }

    /// Inverse of [`MemoryTable::dump`]; every path is validated against `network`.
    pub fn from_dump(text: &str, network: &NetworkTopology) -> Result<Self> {
        let mut table = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::TraceParse {
                line: i + 1,
                message: format!("{what} in {line:?}"),
            };
            let mut fields = line.split(',');
            let mut id = |what: &str| -> Result<NodeId> {
                fields
                    .next()
                    .and_then(|f| f.trim().parse().ok())
                    .map(NodeId)
                    .ok_or_else(|| bad(what))
            };
            let parent = id("bad parent")?;
            let transmitter = id("bad transmitter")?;
            let hops = fields
                .next()
                .ok_or_else(|| bad("missing path"))?
                .split('>')
                .map(|h| h.trim().parse().map(NodeId).map_err(|_| bad("bad hop")))
                .collect::<Result<Vec<_>>>()?;
            if fields.next().is_some() {
                return Err(bad("trailing fields"));
            }
            table.update(parent, transmitter, Path::new(hops, network)?, network)?;
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSource {
    Cached,
    Selected,
}

/// Path resolution with an optional memory table in front of [`path_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct Router {
    table: MemoryTable,
    cache_enabled: bool,
    selections: u64,
}

impl Router {
    pub fn new(cache_enabled: bool) -> Self {
        Self {
            table: MemoryTable::new(),
            cache_enabled,
            selections: 0,
        }
    }

    pub fn table(&self) -> &MemoryTable {
        &self.table
    }

    /// Number of times [`path_select`] has run.
    pub fn selections(&self) -> u64 {
        self.selections
    }

    pub fn resolve(
        &mut self,
        transmitter: NodeId,
        parent: NodeId,
        network: &NetworkTopology,
    ) -> Result<(Path, PathSource)> {
        if self.cache_enabled {
            if let Some(path) = self.table.lookup(parent, transmitter, network) {
                return Ok((path, PathSource::Cached));
            }
        }
        self.selections += 1;
        let path = path_select(transmitter, parent, network)?;
        if self.cache_enabled {
            self.table.update(parent, transmitter, path.clone(), network)?;
        }
        Ok((path, PathSource::Selected))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NodeSpec;

    fn line3(mid_energy: f64) -> NetworkTopology {
        NetworkTopology::build(
            &[
                NodeSpec::new(0.0, 0.0, 5.0, 10.0),
                NodeSpec::new(10.0, 0.0, mid_energy, 10.0),
                NodeSpec::new(20.0, 0.0, 5.0, 10.0),
            ],
            10.0,
        )
        .unwrap()
    }

    #[test]
    fn adjacent_parent_is_one_hop() {
        let n = line3(5.0);
        let p = path_select(NodeId(0), NodeId(1), &n).unwrap();
        assert_eq!(p.hops(), &[NodeId(0), NodeId(1)]);
    }

    #[test]
    fn walks_through_relay() {
        let n = line3(5.0);
        let p = path_select(NodeId(0), NodeId(2), &n).unwrap();
        assert_eq!(p.hops(), &[NodeId(0), NodeId(1), NodeId(2)]);
    }

    #[test]
    fn dead_relay_means_no_path() {
        let mut n = line3(5.0);
        n.set_energy(NodeId(1), 0.0);
        assert_eq!(
            path_select(NodeId(0), NodeId(2), &n),
            Err(Error::NoPath {
                from: NodeId(0),
                to: NodeId(2)
            })
        );
    }

    #[test]
    fn rejects_degenerate_requests() {
        let n = line3(5.0);
        assert!(matches!(
            path_select(NodeId(0), NodeId(0), &n),
            Err(Error::InvalidRequest(_))
        ));
    }

    #[test]
    fn table_round_trip_and_overwrite() {
        let n = line3(5.0);
        let mut t = MemoryTable::new();
        assert_eq!(t.lookup(NodeId(2), NodeId(0), &n), None);
        let long = Path::new(vec![NodeId(0), NodeId(1), NodeId(2)], &n).unwrap();
        t.update(NodeId(2), NodeId(0), long.clone(), &n).unwrap();
        assert_eq!(t.lookup(NodeId(2), NodeId(0), &n), Some(long));
        let short = Path::new(vec![NodeId(1), NodeId(2)], &n).unwrap();
        t.update(NodeId(2), NodeId(1), short.clone(), &n).unwrap();
        let other = Path::new(vec![NodeId(1), NodeId(0)], &n).unwrap();
        assert!(t.update(NodeId(2), NodeId(1), other, &n).is_err());
        assert_eq!(t.len(), 2);
        assert_eq!(t.dump(), "2,0,0>1>2\n2,1,1>2\n");
        assert_eq!(MemoryTable::from_dump(&t.dump(), &n).unwrap(), t);
    }

    #[test]
    fn stale_entry_is_evicted() {
        let mut n = line3(5.0);
        let mut t = MemoryTable::new();
        let p = Path::new(vec![NodeId(0), NodeId(1), NodeId(2)], &n).unwrap();
        t.update(NodeId(2), NodeId(0), p, &n).unwrap();
        n.set_energy(NodeId(1), 0.0);
        assert_eq!(t.lookup(NodeId(2), NodeId(0), &n), None);
        assert!(t.is_empty());
    }

    #[test]
    fn router_counts_selections() {
        let n = line3(5.0);
        let mut cached = Router::new(true);
        let (a, s1) = cached.resolve(NodeId(0), NodeId(2), &n).unwrap();
        let (b, s2) = cached.resolve(NodeId(0), NodeId(2), &n).unwrap();
        assert_eq!(a, b);
        assert_eq!((s1, s2), (PathSource::Selected, PathSource::Cached));
        assert_eq!(cached.selections(), 1);

        let mut uncached = Router::new(false);
        uncached.resolve(NodeId(0), NodeId(2), &n).unwrap();
        uncached.resolve(NodeId(0), NodeId(2), &n).unwrap();
        assert_eq!(uncached.selections(), 2);
        assert!(uncached.table().is_empty());
    }
}
