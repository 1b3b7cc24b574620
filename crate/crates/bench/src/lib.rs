//! Scenario builders shared by the benchmarks.

use std::collections::BTreeMap;

use trustavg_core::{Behavior, Graph, NodeId, Scenario, ScheduleMode, TrustMode};

/// The 5-node example topology: 4-cycle plus a pendant node.
pub fn five_node_scenario(max_rounds: u64) -> Scenario {
    let graph = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4)]).unwrap();
    Scenario {
        initial_values: (0..5).map(|i| (i + 1) as f64).collect(),
        graph,
        malicious: BTreeMap::from([(
            4usize,
            Behavior::RandomOffset {
                amplitude: 1.0,
                seed: None,
            },
        )]),
        trust_mode: TrustMode::Oracle(ScheduleMode::RandomUntil {
            settle_round: 21,
            seed: 7,
        }),
        max_rounds,
        convergence_tol: 1e-6,
        seed: 7,
    }
}

/// A ring of `n` nodes with chords every third node; dense enough to give
/// the checking phase realistic neighborhood sizes.
pub fn ring_with_chords(n: usize) -> Graph {
    let mut edges: Vec<(NodeId, NodeId)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for i in (0..n).step_by(3) {
        edges.push((i, (i + n / 2) % n));
    }
    Graph::new(n, &edges).unwrap()
}

/// An `n`-node scenario under infrequent checking with one forging
/// adversary.
pub fn checking_scenario(n: usize, max_rounds: u64) -> Scenario {
    let graph = ring_with_chords(n);
    Scenario {
        initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
        graph,
        malicious: BTreeMap::from([(
            1usize,
            Behavior::SigmaForge {
                delta: 0.5,
                start_round: 25,
            },
        )]),
        trust_mode: TrustMode::Infrequent {
            check_probability: 0.2,
            seed: 11,
        },
        max_rounds,
        convergence_tol: 1e-6,
        seed: 11,
    }
}
