use std::time::Instant;

use aedt::election::{elect, select_parent};
use aedt::model::{NetworkTopology, NodeId, NodeSpec, NodeState, Role};
use aedt::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_specs(rng: &mut ChaCha8Rng, n: usize) -> Vec<NodeSpec> {
    (0..n)
        .map(|_| {
            NodeSpec::new(
                rng.random::<f64>() * 500.0,
                rng.random::<f64>() * 500.0,
                // few distinct values so ties actually happen
                rng.random_range(1..=5) as f64,
                rng.random_range(1..=3) as f64 * 5.0,
            )
        })
        .collect()
}

#[test]
fn edges_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let specs = random_specs(&mut rng, 100);
    let net = NetworkTopology::build(&specs, 120.0).unwrap();
    let mut count = 0;
    for i in 0..specs.len() {
        for j in 0..specs.len() {
            if i == j {
                continue;
            }
            let dx = specs[i].position.x - specs[j].position.x;
            let dy = specs[i].position.y - specs[j].position.y;
            let linked = (dx * dx + dy * dy).sqrt() <= 120.0;
            assert_eq!(net.is_edge(NodeId(i as u32), NodeId(j as u32)), linked, "{i} {j}");
            if linked && i < j {
                count += 1;
            }
        }
    }
    assert_eq!(net.edge_count(), count);
}

fn oracle(specs: &[NodeSpec]) -> NodeId {
    let mut best = 0;
    for i in 1..specs.len() {
        let (a, b) = (&specs[i], &specs[best]);
        let better = a.initial_energy > b.initial_energy
            || (a.initial_energy == b.initial_energy && a.comm_capacity > b.comm_capacity);
        if better {
            best = i;
        }
    }
    NodeId(best as u32)
}

#[test]
fn election_matches_linear_scan_on_1000_networks() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let start = Instant::now();
    for _ in 0..1000 {
        let n = rng.random_range(5..=100);
        let specs = random_specs(&mut rng, n);
        let mut net = NetworkTopology::build(&specs, 120.0).unwrap();
        let expected = oracle(&specs);
        let result = select_parent(&mut net, 0, 0.0, true).unwrap();
        assert_eq!(result.parent, expected);
        assert_eq!(net.parent(), Some(expected));
        for node in net.nodes() {
            let is_parent = node.id == expected;
            assert_eq!(node.is_awake(), is_parent);
            assert_eq!(node.role() == Role::Parent, is_parent);
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn election_is_idempotent_and_scale_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let specs = random_specs(&mut rng, 30);
        let mut net = NetworkTopology::build(&specs, 120.0).unwrap();
        let first = select_parent(&mut net, 0, 0.0, true).unwrap().parent;
        let second = select_parent(&mut net, 1, 1.0, true).unwrap().parent;
        assert_eq!(first, second);

        let scaled: Vec<NodeSpec> = specs
            .iter()
            .map(|s| NodeSpec { initial_energy: s.initial_energy * 7.5, ..*s })
            .collect();
        let net = NetworkTopology::build(&scaled, 120.0).unwrap();
        assert_eq!(elect(&net).unwrap(), first);
    }
}

#[test]
fn tie_rules() {
    let two = |a: (f64, f64), b: (f64, f64)| {
        NetworkTopology::build(
            &[NodeSpec::new(0.0, 0.0, a.0, a.1), NodeSpec::new(1.0, 0.0, b.0, b.1)],
            5.0,
        )
        .unwrap()
    };
    assert_eq!(elect(&two((50.0, 5.0), (40.0, 8.0))).unwrap(), NodeId(0));
    assert_eq!(elect(&two((40.0, 5.0), (40.0, 8.0))).unwrap(), NodeId(1));
    assert_eq!(elect(&two((40.0, 8.0), (40.0, 8.0))).unwrap(), NodeId(0));
}

#[test]
fn always_on_mode_keeps_everyone_awake() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut net = NetworkTopology::build(&random_specs(&mut rng, 20), 120.0).unwrap();
    let r = select_parent(&mut net, 0, 0.0, false).unwrap();
    assert!(net.nodes().iter().all(|n| n.state() == NodeState::Awake));
    assert_eq!(net.parent(), Some(r.parent));
}

#[test]
fn parent_cannot_be_put_to_sleep() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut net = NetworkTopology::build(&random_specs(&mut rng, 10), 120.0).unwrap();
    let p = select_parent(&mut net, 0, 0.0, true).unwrap().parent;
    assert!(matches!(
        net.set_state(p, NodeState::Sleep, 1.0),
        Err(Error::ParentMustStayAwake(_))
    ));
}
