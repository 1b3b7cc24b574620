//! Seed sweeps: repeat a scenario across a seed range and aggregate
//! detection-round statistics, for claims that are probabilistic over the
//! check schedule.

use std::collections::BTreeMap;

use anyhow::Result;
use serde::Serialize;
use trustavg_core::{run_scenario, NodeId, Scenario};

use crate::scenario_file::reseed;

#[derive(Debug, Clone, Default, Serialize)]
pub struct DetectionStats {
    /// Runs where every labeled-honest neighbor convicted this adversary.
    pub runs_detected_by_all_neighbors: u64,
    /// Over those runs: the round by which the last neighbor convicted.
    pub min_round: Option<u64>,
    pub max_round: Option<u64>,
    pub mean_round: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub seed_start: u64,
    pub seed_count: u64,
    pub converged_runs: u64,
    pub mean_rounds_to_tolerance: Option<f64>,
    /// Per adversary id, aggregated over all runs.
    pub detection: BTreeMap<NodeId, DetectionStats>,
}

pub fn run_sweep(base: &Scenario, seed_start: u64, seed_count: u64) -> Result<SweepOutcome> {
    let honest = base.label_trustworthy();
    let mut converged_runs = 0;
    let mut tolerance_rounds: Vec<u64> = Vec::new();
    let mut full_rounds: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();

    for offset in 0..seed_count {
        let mut scenario = base.clone();
        reseed(&mut scenario, seed_start + offset);
        let trace = run_scenario(&scenario)?;
        if trace.summary.converged {
            converged_runs += 1;
            if let Some(r) = trace.summary.rounds_to_tolerance {
                tolerance_rounds.push(r);
            }
        }
        for (&subject, _) in &scenario.malicious {
            let observers: Vec<NodeId> = scenario
                .graph
                .neighbors(subject)?
                .iter()
                .filter(|o| honest.contains(*o))
                .collect();
            let rounds: Option<Vec<u64>> = observers
                .iter()
                .map(|o| {
                    trace
                        .summary
                        .detections
                        .get(&subject)
                        .and_then(|m| m.get(o))
                        .copied()
                })
                .collect();
            if let Some(rounds) = rounds {
                if let Some(&last) = rounds.iter().max() {
                    full_rounds.entry(subject).or_default().push(last);
                }
            } else {
                full_rounds.entry(subject).or_default();
            }
        }
    }

    let detection = full_rounds
        .into_iter()
        .map(|(subject, rounds)| {
            let stats = DetectionStats {
                runs_detected_by_all_neighbors: rounds.len() as u64,
                min_round: rounds.iter().min().copied(),
                max_round: rounds.iter().max().copied(),
                mean_round: if rounds.is_empty() {
                    None
                } else {
                    Some(rounds.iter().sum::<u64>() as f64 / rounds.len() as f64)
                },
            };
            (subject, stats)
        })
        .collect();

    Ok(SweepOutcome {
        seed_start,
        seed_count,
        converged_runs,
        mean_rounds_to_tolerance: if tolerance_rounds.is_empty() {
            None
        } else {
            Some(tolerance_rounds.iter().sum::<u64>() as f64 / tolerance_rounds.len() as f64)
        },
        detection,
    })
}
