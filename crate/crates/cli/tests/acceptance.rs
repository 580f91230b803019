//! Acceptance gate. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion does.

use std::fs;
use std::time::Instant;

use aedt::aggregation::{AggregationConfig, Aggregator, OverloadPolicy, TransferRequest};
use aedt::capacity::{rtcc, utilization, AdmissionDecision, PacketTiming};
use aedt::election::select_parent;
use aedt::energy::{
    available_energy, node_energy_consumed, power_consumption, BatteryTrace, PowerTrace,
    VoltageProbe,
};
use aedt::model::{NetworkTopology, NodeId, NodeSpec, Packet};
use aedt::routing::{path_select, PathSource, Router};
use aedt::simulator::{run, Event, Protocol, ScenarioConfig};
use aedt_cli::{cmd_run, cmd_sweep, Overrides, SweepPlan, METRICS_FILE, TRACE_FILE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn election_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(5..=100);
        let specs: Vec<NodeSpec> = (0..n)
            .map(|_| {
                NodeSpec::new(
                    rng.random::<f64>() * 500.0,
                    rng.random::<f64>() * 500.0,
                    rng.random_range(1..=4) as f64 * 0.75,
                    rng.random_range(1..=3) as f64 * 5.0,
                )
            })
            .collect();
        // linear scan on (energy, capacity, -id)
        let mut best = 0;
        for i in 1..n {
            let key = |j: usize| (specs[j].initial_energy, specs[j].comm_capacity);
            if key(i) > key(best) {
                best = i;
            }
        }
        let mut net = NetworkTopology::build(&specs, 120.0).map_err(|e| e.to_string())?;
        let got = select_parent(&mut net, 0, 0.0, true).map_err(|e| e.to_string())?;
        if got.parent != NodeId(best as u32) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        mismatches == 0 && secs < 1.0,
        format!("{mismatches} mismatches in 1000 networks, {secs:.3} s"),
    )
}

fn admission_scenario() -> Outcome {
    let net = NetworkTopology::build(
        &[
            NodeSpec::new(0.0, 0.0, 100.0, 10.0),
            NodeSpec::new(10.0, 0.0, 50.0, 10.0),
            NodeSpec::new(0.0, 10.0, 50.0, 10.0),
        ],
        20.0,
    )
    .map_err(|e| e.to_string())?;
    let config = AggregationConfig {
        refresh_interval: 1.0,
        overload_policy: OverloadPolicy::Wait,
        ..AggregationConfig::default()
    };
    let mut agg = Aggregator::new(net, config).map_err(|e| e.to_string())?;
    let pk = |src: u32, n: u64, first: u64| -> Vec<Packet> {
        (0..n)
            .map(|i| Packet {
                seq: first + i,
                source: NodeId(src),
                created_at: 0.1,
                size_bits: 1024,
                priority: 0,
            })
            .collect()
    };
    agg.refresh_network(0.0).map_err(|e| e.to_string())?;
    let budget = agg.budget(NodeId(0)).map(|b| b.remaining);
    let six = agg
        .submit_transfer(TransferRequest::new(0, NodeId(1), pk(1, 6, 0), 0.1), 0.1)
        .map_err(|e| e.to_string())?;
    let seven = agg
        .submit_transfer(TransferRequest::new(1, NodeId(2), pk(2, 7, 6), 0.2), 0.2)
        .map_err(|e| e.to_string())?;
    let report = agg.refresh_network(1.0).map_err(|e| e.to_string())?;
    let later: usize = report.resubmitted.iter().map(|o| o.delivered.len()).sum();
    check(
        budget == Some(10)
            && six.admission == Some(AdmissionDecision::Accept(6))
            && seven.admission == Some(AdmissionDecision::Overload { accepted: 4, excess: 3 })
            && seven.delivered.is_empty()
            && later == 7,
        format!(
            "budget {budget:?}, first {:?}, second {:?}, {later} delivered after refresh",
            six.admission, seven.admission
        ),
    )
}

fn path_fixture() -> Outcome {
    // A, B, C, D, E, F on the ring A-B-C-F-E-A with D off E
    let at = |deg: f64, r: f64, e: f64| {
        let t = deg.to_radians();
        NodeSpec::new(r * t.cos(), r * t.sin(), e, 10.0)
    };
    let net = NetworkTopology::build(
        &[
            at(90.0, 100.0, 100.0),
            at(162.0, 100.0, 50.0),
            at(234.0, 100.0, 60.0),
            at(18.0, 200.0, 5.0),
            at(18.0, 100.0, 40.0),
            at(306.0, 100.0, 10.0),
        ],
        130.0,
    )
    .map_err(|e| e.to_string())?;
    let (a, f) = (NodeId(0), NodeId(5));
    let path = path_select(f, a, &net).map_err(|e| e.to_string())?;
    let names: String = path
        .hops()
        .iter()
        .map(|h| ((b'A' + h.0 as u8) as char).to_string())
        .collect::<Vec<_>>()
        .join("-");
    let mut router = Router::new(true);
    let (p1, s1) = router.resolve(f, a, &net).map_err(|e| e.to_string())?;
    let (p2, s2) = router.resolve(f, a, &net).map_err(|e| e.to_string())?;
    check(
        names == "F-C-B-A"
            && p1 == p2
            && p1 == path
            && (s1, s2) == (PathSource::Selected, PathSource::Cached)
            && router.selections() == 1,
        format!("path {names}, {} selection(s) over two sends", router.selections()),
    )
}

fn energy_conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for p in Protocol::ALL {
        for seed in 0..10 {
            let out = run(&ScenarioConfig {
                protocol: p,
                seed,
                ..ScenarioConfig::default()
            })
            .map_err(|e| e.to_string())?;
            let (mut initial, mut fin, mut drained) = (0.0, 0.0, 0.0);
            for line in &out.trace.lines {
                match line.event {
                    Event::Node { energy, .. } => initial += energy,
                    Event::Final { energy, .. } => fin += energy,
                    Event::Drain { applied, .. } => drained += applied,
                    _ => {}
                }
            }
            worst = worst.max(((initial - fin) - drained).abs());
            runs += 1;
        }
    }
    check(worst <= 1e-9, format!("max |census - drain log| = {worst:e} J over {runs} runs"))
}

fn under_capacity() -> Outcome {
    let mut ratios = Vec::new();
    for p in Protocol::ALL {
        for seed in 0..10 {
            // full connectivity, ample batteries, one 4-packet transfer per
            // source per 2 s cycle: 5 x 4 = 20 = the 10 pkt/s x 2 s budget
            let config = ScenarioConfig {
                protocol: p,
                seed,
                radio_range: 800.0,
                initial_energy: 1e6,
                traffic_sources: 5,
                traffic_rate: 0.5,
                packets_per_transfer: 4,
                ..ScenarioConfig::default()
            };
            let m = run(&config).map_err(|e| e.to_string())?.metrics;
            if m.submitted == 0 {
                return Err(format!("{} seed {seed} offered no traffic", p.name()));
            }
            ratios.push(m.delivery_ratio);
        }
    }
    let all_one = ratios.iter().all(|&r| r == 1.0);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    check(all_one, format!("{} runs, min delivery ratio {min}", ratios.len()))
}

fn lifetime_direction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plan = SweepPlan {
        node_counts: vec![40],
        protocols: vec![Protocol::Aedt, Protocol::StaticTree],
        replicates: 20,
        jobs: 0,
    };
    let start = Instant::now();
    let sweep = cmd_sweep(None, &Overrides::default(), &plan, dir.path()).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let aedt: Vec<_> = sweep.rows.iter().filter(|r| r.protocol == "aedt").collect();
    let mut wins = 0;
    let mut diffs = Vec::new();
    for a in &aedt {
        let s = sweep
            .rows
            .iter()
            .find(|r| r.protocol == "static-tree" && r.seed == a.seed)
            .ok_or("unpaired seed")?;
        if a.lifetime_s >= s.lifetime_s {
            wins += 1;
        }
        diffs.push(a.lifetime_s - s.lifetime_s);
    }
    diffs.sort_by(f64::total_cmp);
    let median = (diffs[9] + diffs[10]) / 2.0;
    check(
        aedt.len() == 20 && wins * 10 >= 16 && median > 0.0 && secs < 60.0,
        format!("aedt >= static in {wins}/20 seeds, median gain {median:.2} s, sweep {secs:.2} s"),
    )
}

fn sleep_saves_energy() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut held = 0;
    for seed in 0..20 {
        let c = |protocol| ScenarioConfig {
            protocol,
            seed,
            ..ScenarioConfig::default()
        };
        let a = run(&c(Protocol::Aedt)).map_err(|e| e.to_string())?.metrics;
        let n = run(&c(Protocol::AedtNoSleep)).map_err(|e| e.to_string())?.metrics;
        let margin = n.avg_energy_consumed - a.avg_energy_consumed;
        worst = worst.min(margin);
        if margin >= 0.0 {
            held += 1;
        }
    }
    check(
        held == 20,
        format!("no-sleep >= aedt energy in {held}/20 seeds (alpha 0.01), smallest margin {worst:.4} J"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = cmd_run(None, &Overrides::default(), &dir.path().join("a")).map_err(|e| e.to_string())?;
    cmd_run(Some(&first.config_echo), &Overrides::default(), &dir.path().join("b"))
        .map_err(|e| e.to_string())?;
    let same = |f: &str| -> Result<bool, String> {
        let read = |d: &str| fs::read(dir.path().join(d).join(f)).map_err(|e| e.to_string());
        Ok(read("a")? == read("b")?)
    };
    let (m, t) = (same(METRICS_FILE)?, same(TRACE_FILE)?);
    let bytes = fs::metadata(&first.trace_log).map_err(|e| e.to_string())?.len();
    check(m && t, format!("metrics.csv identical: {m}, trace.log identical: {t} ({bytes} bytes)"))
}

fn formulas() -> Outcome {
    let e = |r: aedt::Result<f64>| r.map_err(|e| e.to_string());
    let tol = 1e-9;
    let battery = BatteryTrace::new(vec![(0.0, 8.0), (2.0, 5.0)]).map_err(|e| e.to_string())?;
    let zero = PowerTrace::new(vec![(0.0, 0.0), (2.0, 0.0)]).map_err(|e| e.to_string())?;
    let flat = PowerTrace::new(vec![(0.0, 1.5), (2.0, 1.5)]).map_err(|e| e.to_string())?;
    let probe = |v_in, r, s| VoltageProbe::new(v_in, r, s).map_err(|e| e.to_string());
    let pt = |t, d| PacketTiming { t_i: t, d_i: d, p_i: 0.0 };

    let cases = [
        ("eq1 zero power", e(available_energy(&battery, &zero, 0.0, 2.0))?, -3.0),
        ("eq1 flat power", e(available_energy(&battery, &flat, 0.0, 2.0))?, 0.0),
        ("eq2 p=4 d=2 a=2", e(power_consumption(4.0, 2.0, 2.0, 1.0))?, 1.0),
        ("eq2 p=8 d=2 a=3", e(power_consumption(8.0, 2.0, 3.0, 1.0))?, 1.0),
        ("eq2 d=1", e(power_consumption(6.5, 1.0, 3.0, 2.0))?, 13.0),
        (
            "eq3 constant",
            e(node_energy_consumed(&probe(3.0, 6.0, vec![(0.0, 2.0), (4.0, 2.0)])?, 0.0, 4.0))?,
            4.0,
        ),
        (
            "eq3 zero",
            e(node_energy_consumed(&probe(3.0, 6.0, vec![(0.0, 0.0), (4.0, 0.0)])?, 0.0, 4.0))?,
            0.0,
        ),
        (
            "eq3 ramp",
            e(node_energy_consumed(&probe(1.0, 1.0, vec![(0.0, 0.0), (2.0, 2.0)])?, 0.0, 2.0))?,
            2.0,
        ),
        ("eq5 single", e(utilization(&[pt(2.0, 4.0)]))?, 0.5),
        ("eq5 empty", e(utilization(&[]))?, 0.0),
        ("eq5 pair", e(utilization(&[pt(1.0, 2.0), pt(3.0, 4.0)]))?, 1.25),
        ("eq4 direct", e(rtcc(2e6, &[1.5], &[pt(1.0, 2.0)]))?, 6e6),
    ];
    let bad: Vec<&str> = cases
        .iter()
        .filter(|(_, got, want)| (got - want).abs() > tol)
        .map(|(name, _, _)| *name)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut cancel_ok = true;
    for _ in 0..1000 {
        let b = rng.random_range(1.0..1e7);
        let set: Vec<PacketTiming> = (0..rng.random_range(1..40))
            .map(|_| PacketTiming::from_size(rng.random_range(8.0..1e5), 2e6, rng.random_range(0.1..500.0)))
            .collect();
        let u = e(utilization(&set))?;
        cancel_ok &= e(rtcc(b, &[u], &set))? == b;
    }
    check(
        bad.is_empty() && cancel_ok,
        format!(
            "{}/{} examples within 1e-9, rtcc == B on 1000 matched sets: {cancel_ok}{}",
            cases.len() - bad.len(),
            cases.len(),
            if bad.is_empty() { String::new() } else { format!(", failing: {bad:?}") }
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("parent election matches linear-scan oracle", election_oracle),
        ("admission 6 then 7 against a budget of 10", admission_scenario),
        ("greedy path F-C-B-A and cache reuse", path_fixture),
        ("energy conservation against the drain log", energy_conservation),
        ("under-capacity load is fully delivered", under_capacity),
        ("aedt lifetime vs static tree over 20 seeds", lifetime_direction),
        ("always-on spends at least as much energy", sleep_saves_energy),
        ("cmd_run is byte-for-byte deterministic", determinism),
        ("formula examples and rtcc cancellation", formulas),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                println!("FAIL {} {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
