//! Shared helpers for integration tests: seeded random topologies, an
//! independent dense-matrix stepping oracle, and scenario builders.
#![allow(dead_code)] // each test binary uses a different subset

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use trustavg_core::engine::{Scenario, TrustMode};
use trustavg_core::rng::keyed_rng;
use trustavg_core::{Behavior, Graph, NodeId, NodeSet, ScheduleMode, ValidationMode};

/// Random connected graph on `n` nodes: a shuffled spanning chain plus
/// each remaining pair independently with probability `extra_p`.
pub fn random_connected_graph(n: usize, extra_p: f64, seed: u64) -> Graph {
    let mut rng = keyed_rng(&[seed, 0x6772]);
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges: Vec<(NodeId, NodeId)> = order.windows(2).map(|w| (w[0], w[1])).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen::<f64>() < extra_p {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, &edges).expect("valid random graph")
}

/// Pick a malicious set of size `count` such that the induced trustworthy
/// subgraph stays connected, and (if `two_hop_safe`) no two malicious
/// nodes are adjacent. Retries with perturbed seeds until it fits.
pub fn pick_malicious(graph: &Graph, count: usize, two_hop_safe: bool, seed: u64) -> NodeSet {
    let n = graph.node_count();
    assert!(count < n);
    let mode = if two_hop_safe {
        ValidationMode::Infrequent
    } else {
        ValidationMode::Oracle
    };
    for attempt in 0..10_000u64 {
        let mut rng = keyed_rng(&[seed, 0x6d616c, attempt]);
        let mut ids: Vec<NodeId> = (0..n).collect();
        ids.shuffle(&mut rng);
        let set: NodeSet = ids.into_iter().take(count).collect();
        let report = graph.validate_assumptions(&set, mode).unwrap();
        if report.is_clean() {
            return set;
        }
    }
    panic!("no admissible malicious set of size {count} found");
}

/// One step of the dense doubly-stochastic iteration with the uniform
/// 1/N edge weight rule, restricted to `present` (ids keep their slots;
/// absent nodes are left untouched). This is the independent oracle the
/// simulator is compared against.
pub fn matrix_step(graph: &Graph, present: &NodeSet, x: &[f64]) -> Vec<f64> {
    let n = graph.node_count() as f64;
    let mut out = x.to_vec();
    for j in present.iter() {
        let nbrs: Vec<NodeId> = graph
            .neighbors(j)
            .unwrap()
            .iter()
            .filter(|i| present.contains(*i))
            .collect();
        let mut acc = (1.0 - nbrs.len() as f64 / n) * x[j];
        for &i in &nbrs {
            acc += x[i] / n;
        }
        out[j] = acc;
    }
    out
}

pub fn oracle_scenario(
    graph: Graph,
    malicious: BTreeMap<NodeId, Behavior>,
    schedule: ScheduleMode,
    max_rounds: u64,
    seed: u64,
) -> Scenario {
    let x0 = (0..graph.node_count()).map(|i| (i + 1) as f64).collect();
    Scenario {
        graph,
        initial_values: x0,
        malicious,
        trust_mode: TrustMode::Oracle(schedule),
        max_rounds,
        convergence_tol: 1e-6,
        seed,
    }
}

/// A small randomized oracle-mode scenario: random connected topology,
/// up to two adversaries, trust assessments random until a random settle
/// round. Deterministic in `case_seed`.
pub fn randomized_scenario(case_seed: u64) -> Scenario {
    let mut rng = keyed_rng(&[case_seed, 0x7363]);
    let n = rng.gen_range(3..=10usize);
    let graph = random_connected_graph(n, 0.35, case_seed ^ 0xA5);
    let m_count = rng.gen_range(0..=2usize.min(n - 2));
    let set = pick_malicious(&graph, m_count, false, case_seed ^ 0x5A);
    let mut malicious = BTreeMap::new();
    for (idx, id) in set.iter().enumerate() {
        let behavior = match idx % 3 {
            0 => Behavior::RandomOffset {
                amplitude: 1.0,
                seed: None,
            },
            1 => Behavior::SigmaForge {
                delta: 0.75,
                start_round: rng.gen_range(0..20),
            },
            _ => Behavior::HonestDespiteLabel,
        };
        malicious.insert(id, behavior);
    }
    let settle_round = rng.gen_range(1..=25u64);
    oracle_scenario(
        graph,
        malicious,
        ScheduleMode::RandomUntil {
            settle_round,
            seed: case_seed,
        },
        60,
        case_seed,
    )
}

/// The 5-node test graph: 4-cycle 0-1-2-3 plus pendant node 4 on node 3.
pub fn five_node_graph() -> Graph {
    Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4)]).unwrap()
}

/// The 6-node line graph used by the collusion counterexample.
pub fn line6_graph() -> Graph {
    Graph::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap()
}
