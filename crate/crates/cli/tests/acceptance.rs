//! Acceptance suite: every release criterion as one test, each printing a
//! single pass/fail line (run with `--nocapture` to see them). Expected
//! values come from independent oracles (dense matrix stepping, set
//! arithmetic over initial values) or are pinned limits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{ensure, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use trustavg_cli::{emit_outputs, parse_scenario, OutputFormat};
use trustavg_core::engine::{run_scenario_recording, RoundMessages};
use trustavg_core::rng::keyed_rng;
use trustavg_core::{
    run_scenario, scaled_tol, Behavior, Graph, NodeId, NodeRow, NodeSet, Scenario, ScheduleMode,
    Trace, TrustMode, ValidationMode, VerdictReason, VerdictStatus,
};

fn report(criterion: u32, desc: &str, result: Result<()>) {
    match result {
        Ok(()) => println!("ACCEPTANCE {criterion}: PASS - {desc}"),
        Err(err) => {
            println!("ACCEPTANCE {criterion}: FAIL - {desc}: {err:#}");
            panic!("acceptance criterion {criterion} failed: {err:#}");
        }
    }
}

fn load_bundled(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    parse_scenario(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn row<'a>(trace: &'a Trace, round: u64, node: NodeId) -> &'a NodeRow {
    let n = trace.rows.iter().filter(|r| r.round == 0).count();
    let row = &trace.rows[round as usize * n + node];
    assert_eq!((row.round, row.node), (round, node));
    row
}

// --- independent oracles and generators ------------------------------------

fn random_connected_graph(n: usize, extra_p: f64, seed: u64) -> Graph {
    let mut rng = keyed_rng(&[seed, 0xACC0]);
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
    Graph::new(n, &edges).unwrap()
}

fn pick_malicious(graph: &Graph, count: usize, two_hop_safe: bool, seed: u64) -> NodeSet {
    let mode = if two_hop_safe {
        ValidationMode::Infrequent
    } else {
        ValidationMode::Oracle
    };
    for attempt in 0..10_000u64 {
        let mut rng = keyed_rng(&[seed, 0xACC1, attempt]);
        let mut ids: Vec<NodeId> = (0..graph.node_count()).collect();
        ids.shuffle(&mut rng);
        let set: NodeSet = ids.into_iter().take(count).collect();
        if graph.validate_assumptions(&set, mode).unwrap().is_clean() {
            return set;
        }
    }
    panic!("no admissible malicious set");
}

/// Dense doubly-stochastic step with the uniform 1/N edge weights.
fn matrix_step(graph: &Graph, x: &[f64]) -> Vec<f64> {
    let n = graph.node_count() as f64;
    (0..graph.node_count())
        .map(|j| {
            let nbrs = graph.neighbors(j).unwrap();
            let mut acc = (1.0 - nbrs.len() as f64 / n) * x[j];
            for i in nbrs.iter() {
                acc += x[i] / n;
            }
            acc
        })
        .collect()
}

/// Randomized oracle-mode scenario with fluctuating pre-settle trust and a
/// mix of adversary behaviors; deterministic in `case`.
fn randomized_scenario(case: u64) -> Scenario {
    let mut rng = keyed_rng(&[case, 0xACC2]);
    let n = rng.gen_range(3..=10usize);
    let graph = random_connected_graph(n, 0.35, case ^ 0x9E);
    let m_count = rng.gen_range(0..=2usize.min(n - 2));
    let set = pick_malicious(&graph, m_count, false, case ^ 0x3C);
    let mut malicious = BTreeMap::new();
    for (idx, id) in set.iter().enumerate() {
        let behavior = match (case as usize + idx) % 4 {
            0 => Behavior::RandomOffset {
                amplitude: 1.0,
                seed: None,
            },
            1 => Behavior::SigmaForge {
                delta: 0.75,
                start_round: rng.gen_range(0..20),
            },
            2 => Behavior::UnfairDeclare {
                victim: graph.neighbors(id).unwrap().first().unwrap(),
                start_round: rng.gen_range(0..20),
            },
            _ => Behavior::HonestDespiteLabel,
        };
        malicious.insert(id, behavior);
    }
    Scenario {
        initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
        graph,
        malicious,
        trust_mode: TrustMode::Oracle(ScheduleMode::RandomUntil {
            settle_round: rng.gen_range(1..=25),
            seed: case,
        }),
        max_rounds: 60,
        convergence_tol: 1e-6,
        seed: case,
    }
}

fn audit_invariants(scenario: &Scenario, trace: &Trace, log: &[RoundMessages]) -> Result<()> {
    let n = scenario.graph.node_count();
    for r in 1..=trace.rounds() {
        for j in scenario.label_trustworthy().iter() {
            let snap = row(trace, r, j);
            let active = scenario
                .graph
                .neighbors(j)
                .unwrap()
                .intersection(&snap.trust_set);
            let sum: f64 = active
                .iter()
                .map(|i| log[r as usize - 1][i].broadcast.sigma_next)
                .sum();
            let residual = snap.x - scenario.initial_values[j]
                + active.len() as f64 / n as f64 * snap.sigma
                - sum / n as f64;
            ensure!(
                residual.abs() <= scaled_tol(snap.sigma),
                "residual {residual:e} at round {r} node {j}"
            );
        }
    }
    Ok(())
}

fn audit_sum_conservation(scenario: &Scenario, trace: &Trace) -> Result<()> {
    let honest = scenario.label_trustworthy();
    let mut last_change = None;
    for r in 1..=trace.rounds() {
        for j in honest.iter() {
            if row(trace, r, j).trust_set != row(trace, r - 1, j).trust_set {
                last_change = Some(r - 1);
            }
        }
    }
    let start_row = last_change.map_or(0, |k| k + 1);
    let target: f64 = honest.iter().map(|j| scenario.initial_values[j]).sum();
    let tol = 1e-9 * scenario.graph.node_count() as f64;
    for r in start_row..=trace.rounds() {
        let sum: f64 = honest.iter().map(|j| row(trace, r, j).x).sum();
        ensure!(
            (sum - target).abs() <= tol,
            "sum {sum} != {target} at round {r} (trust settled before round {start_row})"
        );
    }
    Ok(())
}

// --- criteria ---------------------------------------------------------------

#[test]
fn criterion_01_five_node_reproduction() {
    report(1, "5-node scenarios reach 2.5 within 500 rounds; offset node diverges", (|| {
        for name in ["fig2_left", "fig2_middle", "fig2_right"] {
            let scenario = load_bundled(name);
            ensure!(scenario.max_rounds <= 500, "{name} runs too long");
            let started = Instant::now();
            let trace = run_scenario(&scenario)?;
            let elapsed = started.elapsed();
            ensure!(
                elapsed < Duration::from_secs(1),
                "{name} took {elapsed:?} (budget 1 s)"
            );
            for j in scenario.label_trustworthy().iter() {
                let last = row(&trace, trace.rounds(), j);
                ensure!(
                    (last.x - 2.5).abs() <= 1e-6,
                    "{name}: node {j} ended at {}",
                    last.x
                );
            }
            if name == "fig2_right" {
                let values = trace.node_values(4);
                let tail = &values[values.len() - 100..];
                let spread = tail.iter().cloned().fold(f64::MIN, f64::max)
                    - tail.iter().cloned().fold(f64::MAX, f64::min);
                ensure!(
                    spread > 0.1,
                    "malicious trajectory spread {spread} over last 100 rounds"
                );
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_02_twenty_node_reproduction() {
    report(2, "20-node limits 9.7857 and 11.3529 within 5e-4", (|| {
        for (name, limit) in [("net20_honest", 9.7857), ("net20_offset", 11.3529)] {
            let scenario = load_bundled(name);
            let report = scenario.validate()?;
            ensure!(report.is_clean(), "{name} violates assumptions");
            let started = Instant::now();
            let trace = run_scenario(&scenario)?;
            let elapsed = started.elapsed();
            ensure!(
                elapsed < Duration::from_secs(2),
                "{name} took {elapsed:?} (budget 2 s)"
            );
            for j in scenario.label_trustworthy().iter() {
                let last = row(&trace, trace.rounds(), j);
                ensure!(
                    (last.x - limit).abs() <= 5e-4,
                    "{name}: node {j} ended at {} vs {limit}",
                    last.x
                );
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_03_invariant_suite() {
    report(3, "conservation invariant holds for 200 randomized scenarios", (|| {
        let started = Instant::now();
        for case in 0..200u64 {
            let scenario = randomized_scenario(case);
            let (trace, log) = run_scenario_recording(&scenario)?;
            audit_invariants(&scenario, &trace, &log)
                .map_err(|e| e.context(format!("case {case}")))?;
        }
        let elapsed = started.elapsed();
        ensure!(
            elapsed < Duration::from_secs(30),
            "suite took {elapsed:?} (budget 30 s)"
        );
        Ok(())
    })());
}

#[test]
fn criterion_04_sum_conservation() {
    report(4, "trustworthy sum constant after the last trust-set change", (|| {
        for case in 0..200u64 {
            let scenario = randomized_scenario(case);
            let trace = run_scenario(&scenario)?;
            audit_sum_conservation(&scenario, &trace)
                .map_err(|e| e.context(format!("case {case}")))?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_05_matrix_oracle_equivalence() {
    report(5, "all-trusted runs match dense matrix powers within 1e-12", (|| {
        for seed in 0..50u64 {
            let mut rng = keyed_rng(&[seed, 0xACC5]);
            let n = rng.gen_range(2..=10usize);
            let graph = random_connected_graph(n, 0.4, seed ^ 0x71);
            let scenario = Scenario {
                initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
                graph: graph.clone(),
                malicious: BTreeMap::new(),
                trust_mode: TrustMode::Oracle(ScheduleMode::CorrectFromStart),
                max_rounds: 30,
                convergence_tol: 1e-6,
                seed,
            };
            let trace = run_scenario(&scenario)?;
            let mut x = scenario.initial_values.clone();
            for r in 1..=30u64 {
                x = matrix_step(&graph, &x);
                for j in 0..n {
                    let got = row(&trace, r, j).x;
                    ensure!(
                        (got - x[j]).abs() <= 1e-12,
                        "seed {seed} round {r} node {j}: {got} vs {}",
                        x[j]
                    );
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_06_concurrent_detection_round_exactness() {
    report(6, "concurrent checking convicts at exactly the first deviating round", (|| {
        for kind in 0..2u64 {
            for seed in 0..50u64 {
                let mut rng = keyed_rng(&[seed, kind, 0xACC6]);
                let n = rng.gen_range(4..=9usize);
                let graph = random_connected_graph(n, 0.4, seed ^ (kind << 8) ^ 0x13);
                let adversary = pick_malicious(&graph, 1, true, seed ^ 0x57).first().unwrap();
                let start = rng.gen_range(0..15u64);
                let behavior = if kind == 0 {
                    Behavior::DelayedMisbehavior {
                        honest_until: start,
                        then: Box::new(Behavior::RandomOffset {
                            amplitude: 1.0,
                            seed: None,
                        }),
                    }
                } else {
                    Behavior::SigmaForge {
                        delta: 0.5,
                        start_round: start,
                    }
                };
                let scenario = Scenario {
                    initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
                    malicious: BTreeMap::from([(adversary, behavior)]),
                    graph: graph.clone(),
                    trust_mode: TrustMode::Concurrent,
                    max_rounds: start + 10,
                    convergence_tol: 1e-6,
                    seed,
                };
                let trace = run_scenario(&scenario)?;
                for observer in graph.neighbors(adversary)?.iter() {
                    let got = trace
                        .summary
                        .detections
                        .get(&adversary)
                        .and_then(|m| m.get(&observer))
                        .copied();
                    ensure!(
                        got == Some(start),
                        "kind {kind} seed {seed}: observer {observer} detected at {got:?}, deviation at {start}"
                    );
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_07_infrequent_detection() {
    report(7, "infrequent checking detects all kinds within 100 rounds in >= 95/100 runs", (|| {
        let mut detected = 0u32;
        let mut suspicion_resolutions = 0u32;
        for seed in 0..100u64 {
            let mut rng = keyed_rng(&[seed, 0xACC7]);
            let n = rng.gen_range(5..=9usize);
            let graph = random_connected_graph(n, 0.4, seed ^ 0x2F);
            let adversary = pick_malicious(&graph, 1, true, seed ^ 0x99).first().unwrap();
            let start = rng.gen_range(0..10u64);
            let behavior = match seed % 3 {
                0 => Behavior::RandomOffset {
                    amplitude: 1.0,
                    seed: None,
                },
                1 => Behavior::SigmaForge {
                    delta: 0.5,
                    start_round: start,
                },
                _ => Behavior::TwoHopMismatch {
                    delta: 0.5,
                    start_round: start,
                },
            };
            let scenario = Scenario {
                initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
                malicious: BTreeMap::from([(adversary, behavior)]),
                graph: graph.clone(),
                trust_mode: TrustMode::Infrequent {
                    check_probability: 0.2,
                    seed,
                },
                max_rounds: 100,
                convergence_tol: 1e-6,
                seed,
            };
            let trace = run_scenario(&scenario)?;
            let all_neighbors_within_100 = graph.neighbors(adversary)?.iter().all(|o| {
                trace
                    .summary
                    .detections
                    .get(&adversary)
                    .and_then(|m| m.get(&o))
                    .is_some_and(|&r| r < 100)
            });
            if all_neighbors_within_100 {
                detected += 1;
            }
            // Suspicions on the adversary must resolve to a conviction one
            // round later when its reported trust set fails to shrink.
            let mut pending: BTreeMap<NodeId, u64> = BTreeMap::new();
            for e in &trace.events {
                if e.subject != adversary {
                    continue;
                }
                match e.status {
                    VerdictStatus::PossiblyUntrustworthy => {
                        pending.insert(e.observer, e.round);
                    }
                    VerdictStatus::Malicious => {
                        if let Some(at) = pending.remove(&e.observer) {
                            ensure!(
                                e.reason == Some(VerdictReason::NoShrinkAfterSuspect)
                                    && e.round == at + 1,
                                "seed {seed}: suspicion at {at} resolved by {:?} at {}",
                                e.reason,
                                e.round
                            );
                            suspicion_resolutions += 1;
                        }
                    }
                    VerdictStatus::Trusted => {
                        pending.remove(&e.observer);
                    }
                }
            }
        }
        ensure!(detected >= 95, "detected in only {detected}/100 runs");
        ensure!(
            suspicion_resolutions > 0,
            "no run exercised the suspicion-resolution path"
        );
        Ok(())
    })());
}

#[test]
fn criterion_08_unfair_declaration_semantics() {
    report(8, "unfair declarer caught only by its victim; its value stays in the average", (|| {
        for seed in 0..20u64 {
            let mut rng = keyed_rng(&[seed, 0xACC8]);
            let n = rng.gen_range(5..=9usize);
            let graph = random_connected_graph(n, 0.45, seed ^ 0x43);
            let adversary = pick_malicious(&graph, 1, true, seed ^ 0x21).first().unwrap();
            let victim = graph.neighbors(adversary)?.first().unwrap();
            let start = rng.gen_range(2..10u64);
            let scenario = Scenario {
                initial_values: (0..n).map(|i| (i + 1) as f64).collect(),
                malicious: BTreeMap::from([(
                    adversary,
                    Behavior::UnfairDeclare {
                        victim,
                        start_round: start,
                    },
                )]),
                graph: graph.clone(),
                trust_mode: TrustMode::Infrequent {
                    check_probability: 0.2,
                    seed,
                },
                max_rounds: 600,
                convergence_tol: 1e-6,
                seed,
            };
            let trace = run_scenario(&scenario)?;
            let detections = trace.summary.detections.get(&adversary);
            ensure!(
                detections.and_then(|m| m.get(&victim)).copied() == Some(start),
                "seed {seed}: victim detection round {:?}",
                detections.and_then(|m| m.get(&victim))
            );
            for o in graph.neighbors(adversary)?.iter() {
                if o != victim {
                    ensure!(
                        detections.is_none_or(|m| !m.contains_key(&o)),
                        "seed {seed}: non-victim {o} convicted the declarer"
                    );
                }
            }
            // The behavior-based target counts the declarer's own value.
            let all_avg: f64 = scenario.initial_values.iter().sum::<f64>() / n as f64;
            ensure!((trace.summary.target_used - all_avg).abs() < 1e-12);
            ensure!(
                trace.summary.converged && trace.summary.max_error_final <= 1e-6,
                "seed {seed}: {:?}",
                trace.summary
            );
        }
        Ok(())
    })());
}

#[test]
fn criterion_09_collusion_counterexample() {
    report(9, "adjacent colluders on the line graph yield no verdicts against node 4", (|| {
        let scenario = load_bundled("line6_collusion");
        ensure!(!scenario
            .validate()?
            .is_clean());
        let trace = run_scenario(&scenario)?;
        let honest = scenario.label_trustworthy();
        for e in &trace.events {
            if honest.contains(e.observer) && e.status == VerdictStatus::Malicious {
                ensure!(e.subject != 4, "honest observer {} convicted node 4", e.observer);
            }
        }
        ensure!(
            trace.summary.detections.get(&4).is_none(),
            "node 4 has detections: {:?}",
            trace.summary.detections.get(&4)
        );
        Ok(())
    })());
}

#[test]
fn criterion_10_trace_file_determinism() {
    report(10, "same seed twice gives bitwise-identical trace files", (|| {
        for name in ["fig2_right", "net20_offset", "line6_collusion"] {
            let scenario = load_bundled(name);
            let base = std::env::temp_dir().join(format!("trustavg_acc10_{name}"));
            let mut contents: Vec<Vec<u8>> = Vec::new();
            for pass in 0..2 {
                let dir = base.join(pass.to_string());
                let _ = fs::remove_dir_all(&dir);
                let trace = run_scenario(&scenario)?;
                let written = emit_outputs(&trace, &dir, OutputFormat::Both)?;
                let mut bytes = Vec::new();
                for path in written {
                    bytes.extend(fs::read(path)?);
                }
                contents.push(bytes);
            }
            ensure!(contents[0] == contents[1], "{name}: trace files differ");
        }
        Ok(())
    })());
}
