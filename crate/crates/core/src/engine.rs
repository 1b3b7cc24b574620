//! The synchronous round loop: gathers trust inputs, advances every node,
//! routes one-hop and two-hop messages, applies adversary transforms,
//! schedules checks, updates verdicts, and records the trace.
//!
//! Within a round the fixed order is: trust-set update, correction term
//! (reads the pre-advance running sum), running-sum advance, broadcast
//! (with adversarial forging applied before delivery), receive,
//! per-neighbor table update, value step, adversarial value offsets, and
//! finally the checking phase whose verdicts feed the next round's trust
//! sets.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::Behavior;
use crate::consensus::{Broadcast, NodeState, TrustDelta};
use crate::graph::{AssumptionReport, Graph, NodeId, NodeSet, ValidationMode};
use crate::rng::{keyed_rng, unit_f64, STREAM_ADVERSARY, STREAM_CHECK};
use crate::trust::{
    classify, concurrent_check, infrequent_check, oracle_trust, sigma_channel_mismatch,
    CheckEvidence, CheckValues, CheckingMode, ScheduleMode, TrustSchedule, VerdictReason,
    VerdictState, VerdictStatus,
};
use crate::{Error, Result, BASE_EPS};

/// Where trust assessments come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrustMode {
    /// Side information per the configured schedule; no checking runs.
    Oracle(ScheduleMode),
    /// Two-hop running sums broadcast every round; every honest node
    /// checks every neighbor every round.
    Concurrent,
    /// Two-hop running sums only on demand: each honest node initiates a
    /// check of its whole neighborhood independently with
    /// `check_probability` per round.
    Infrequent { check_probability: f64, seed: u64 },
}

impl TrustMode {
    pub fn validation_mode(&self) -> ValidationMode {
        match self {
            TrustMode::Oracle(_) => ValidationMode::Oracle,
            TrustMode::Concurrent => ValidationMode::Concurrent,
            TrustMode::Infrequent { .. } => ValidationMode::Infrequent,
        }
    }
}

/// A declarative experiment: topology, initial values, who misbehaves and
/// how, the trust regime, and run limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: Graph,
    pub initial_values: Vec<f64>,
    pub malicious: BTreeMap<NodeId, Behavior>,
    pub trust_mode: TrustMode,
    pub max_rounds: u64,
    pub convergence_tol: f64,
    pub seed: u64,
}

pub const DEFAULT_MAX_ROUNDS: u64 = 2000;
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-6;

impl Scenario {
    /// Nodes not labeled malicious.
    pub fn label_trustworthy(&self) -> NodeSet {
        let labels: NodeSet = self.malicious.keys().copied().collect();
        NodeSet::all(self.graph.node_count()).difference(&labels)
    }

    /// Nodes whose configured behavior never emits a numerically
    /// incorrect value within the run. Label-only and unfair-declare
    /// behaviors count as trustworthy here: their updates are correct
    /// under their reported trust sets.
    pub fn behavior_trustworthy(&self) -> NodeSet {
        NodeSet::all(self.graph.node_count())
            .iter()
            .filter(|&j| {
                self.malicious
                    .get(&j)
                    .and_then(|b| b.first_deviation_round())
                    .is_none_or(|r| r >= self.max_rounds)
            })
            .collect()
    }

    /// Structural validation; returns the assumption report (violations
    /// are recorded, not fatal).
    pub fn validate(&self) -> Result<AssumptionReport> {
        let n = self.graph.node_count();
        if self.initial_values.len() != n {
            return Err(Error::InitialValuesLength {
                expected: n,
                got: self.initial_values.len(),
            });
        }
        for (i, v) in self.initial_values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInitialValue(i));
            }
        }
        for (&id, behavior) in &self.malicious {
            if id >= n {
                return Err(Error::MaliciousOutOfRange(id));
            }
            behavior.validate(id, &self.graph)?;
        }
        if let TrustMode::Infrequent {
            check_probability, ..
        } = self.trust_mode
        {
            if !(check_probability > 0.0 && check_probability <= 1.0) {
                return Err(Error::CheckProbabilityRange(check_probability));
            }
        }
        if self.label_trustworthy().is_empty() {
            return Err(Error::EmptyTrustworthySet);
        }
        let labels: NodeSet = self.malicious.keys().copied().collect();
        self.graph
            .validate_assumptions(&labels, self.trust_mode.validation_mode())
    }
}

/// Mean of the initial values over the trustworthy set the run's trust
/// regime converges to: the labeled set under an oracle schedule, the
/// behavior-derived set under on-line checking (a labeled node that never
/// misbehaves keeps its value in the average there).
pub fn trustworthy_average(scenario: &Scenario) -> Result<f64> {
    let set = match scenario.trust_mode {
        TrustMode::Oracle(_) => scenario.label_trustworthy(),
        TrustMode::Concurrent | TrustMode::Infrequent { .. } => scenario.behavior_trustworthy(),
    };
    average_over(&scenario.initial_values, &set)
}

fn average_over(values: &[f64], set: &NodeSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyTrustworthySet);
    }
    Ok(set.iter().map(|j| values[j]).sum::<f64>() / set.len() as f64)
}

/// One node's complete outgoing message set for a round: the one-hop
/// broadcast plus the running sum as reported on the two-hop channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMessage {
    pub broadcast: Broadcast,
    pub sigma_twohop: f64,
}

pub type RoundMessages = Vec<NodeMessage>;

/// A verdict transition: `observer`'s judgement of `subject` changed at
/// `round`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictEvent {
    pub round: u64,
    pub observer: NodeId,
    pub subject: NodeId,
    pub status: VerdictStatus,
    pub reason: Option<VerdictReason>,
}

/// Snapshot of one node after `round` rounds (round 0 is the initial
/// state). `trust_set` is the set the node used (and reported) in the
/// round that produced this snapshot; `verdicts` are the transitions this
/// node recorded as an observer during that round.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub round: u64,
    pub node: NodeId,
    pub x: f64,
    pub sigma: f64,
    pub trust_set: NodeSet,
    pub verdicts: Vec<VerdictEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustGrowthWarning {
    pub round: u64,
    pub node: NodeId,
}

/// Run-level results: both candidate targets, convergence against the
/// regime-appropriate one, per-adversary detection rounds per observer,
/// and the assumption report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Average over nodes not labeled malicious.
    pub label_target: f64,
    /// Average over nodes whose behavior never deviates numerically.
    pub behavior_target: f64,
    /// The target convergence is judged against (label-based under an
    /// oracle schedule, behavior-based under checking).
    pub target_used: f64,
    pub converged: bool,
    /// First round from which every labeled-honest node stays within
    /// tolerance of the target.
    pub rounds_to_tolerance: Option<u64>,
    /// Largest final-round error of a labeled-honest node.
    pub max_error_final: f64,
    /// subject -> observer -> round of the malicious verdict.
    pub detections: BTreeMap<NodeId, BTreeMap<NodeId, u64>>,
    /// First round each adversary actually emitted a forged message.
    pub first_deviation: BTreeMap<NodeId, u64>,
    pub assumption_report: AssumptionReport,
    /// Reported trust sets that grew under concurrent checking (suspicious
    /// but not a verdict there).
    pub trust_growth_warnings: Vec<TrustGrowthWarning>,
}

/// Full recorded output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<NodeRow>,
    pub events: Vec<VerdictEvent>,
    pub summary: Summary,
}

impl Trace {
    pub fn rounds(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.round)
    }

    /// The x column of one node across rounds.
    pub fn node_values(&self, node: NodeId) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.node == node)
            .map(|r| r.x)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceMetrics {
    pub converged: bool,
    pub round: Option<u64>,
    pub max_error_final: f64,
}

/// Convergence of the `honest` nodes' values to `target`: converged iff
/// all stay within `tol` at the final round, with `round` the earliest
/// snapshot from which that holds uninterruptedly.
pub fn convergence_metrics(
    rows: &[NodeRow],
    honest: &NodeSet,
    target: f64,
    tol: f64,
) -> ConvergenceMetrics {
    let last_round = rows.iter().map(|r| r.round).max().unwrap_or(0);
    let mut ok_per_round: BTreeMap<u64, bool> = BTreeMap::new();
    let mut max_error_final = 0.0f64;
    for row in rows {
        if !honest.contains(row.node) {
            continue;
        }
        let err = (row.x - target).abs();
        let entry = ok_per_round.entry(row.round).or_insert(true);
        *entry &= err <= tol;
        if row.round == last_round {
            max_error_final = max_error_final.max(err);
        }
    }
    let converged = ok_per_round.get(&last_round).copied().unwrap_or(false);
    let round = if converged {
        let mut first = last_round;
        for (&r, &ok) in ok_per_round.iter().rev() {
            if !ok {
                break;
            }
            first = r;
        }
        Some(first)
    } else {
        None
    };
    ConvergenceMetrics {
        converged,
        round,
        max_error_final,
    }
}

/// The mutable world state of one run. Owns the node states, the previous
/// round's messages, per-observer verdict tables, and the trace being
/// recorded.
pub struct Simulation<'a> {
    scenario: &'a Scenario,
    schedule: Option<TrustSchedule>,
    nodes: Vec<NodeState>,
    msgs_prev: RoundMessages,
    verdicts: BTreeMap<(NodeId, NodeId), VerdictState>,
    adv_rngs: BTreeMap<NodeId, ChaCha8Rng>,
    round: u64,
    rows: Vec<NodeRow>,
    events: Vec<VerdictEvent>,
    detections: BTreeMap<NodeId, BTreeMap<NodeId, u64>>,
    first_deviation: BTreeMap<NodeId, u64>,
    trust_growth_warnings: Vec<TrustGrowthWarning>,
    assumption_report: AssumptionReport,
    message_log: Option<Vec<RoundMessages>>,
}

impl<'a> Simulation<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Simulation<'a>> {
        let assumption_report = scenario.validate()?;
        let n = scenario.graph.node_count();
        let nodes = (0..n)
            .map(|j| {
                NodeState::new(
                    j,
                    scenario.initial_values[j],
                    scenario.graph.neighbors(j)?.clone(),
                    n,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        // Initialization exchange: x[0], sigma[0] = 0, full trust.
        let msgs_prev = (0..n)
            .map(|j| NodeMessage {
                broadcast: Broadcast {
                    sender: j,
                    sigma_next: 0.0,
                    x_next: scenario.initial_values[j],
                    trust_set: NodeSet::all(n),
                },
                sigma_twohop: 0.0,
            })
            .collect();
        let schedule = match &scenario.trust_mode {
            TrustMode::Oracle(mode) => Some(TrustSchedule {
                mode: mode.clone(),
                truth: scenario.label_trustworthy(),
            }),
            _ => None,
        };
        let adv_rngs = scenario
            .malicious
            .iter()
            .map(|(&id, b)| {
                (
                    id,
                    keyed_rng(&[scenario.seed, STREAM_ADVERSARY, id as u64, b.stream_seed()]),
                )
            })
            .collect();
        let rows = (0..n)
            .map(|j| NodeRow {
                round: 0,
                node: j,
                x: scenario.initial_values[j],
                sigma: 0.0,
                trust_set: NodeSet::all(n),
                verdicts: Vec::new(),
            })
            .collect();
        Ok(Simulation {
            scenario,
            schedule,
            nodes,
            msgs_prev,
            verdicts: BTreeMap::new(),
            adv_rngs,
            round: 0,
            rows,
            events: Vec::new(),
            detections: BTreeMap::new(),
            first_deviation: BTreeMap::new(),
            trust_growth_warnings: Vec::new(),
            assumption_report,
            message_log: None,
        })
    }

    /// Also keep every round's full message set (for replay-style tests
    /// and diagnostics).
    pub fn record_messages(&mut self) {
        self.message_log = Some(Vec::new());
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn node_states(&self) -> &[NodeState] {
        &self.nodes
    }

    fn is_labeled_malicious(&self, j: NodeId) -> bool {
        self.scenario.malicious.contains_key(&j)
    }

    /// The trust set node `j` feeds its state machine (and reports) at
    /// round `k`.
    fn trust_input(&self, j: NodeId, k: u64) -> Result<NodeSet> {
        let n = self.scenario.graph.node_count();
        let mut trust = match (&self.scenario.trust_mode, &self.schedule) {
            (TrustMode::Oracle(_), Some(schedule)) => oracle_trust(schedule, k, j, n)?,
            _ => {
                if self.is_labeled_malicious(j) {
                    // Scripted adversaries mimic a node with nothing to
                    // report: full trust, constant.
                    NodeSet::all(n)
                } else {
                    let mut t = NodeSet::all(n);
                    for (&(obs, subject), v) in self.verdicts.range((j, 0)..(j, n)) {
                        debug_assert_eq!(obs, j);
                        if v.verdict.status == VerdictStatus::Malicious {
                            t.remove(subject);
                        }
                    }
                    t
                }
            }
        };
        if let Some(behavior) = self.scenario.malicious.get(&j) {
            behavior.doctor_trust(&mut trust, k);
        }
        Ok(trust)
    }

    /// Execute one synchronous round.
    pub fn run_round(&mut self) -> Result<()> {
        let k = self.round;
        let n = self.scenario.graph.node_count();

        let trusts = (0..n)
            .map(|j| self.trust_input(j, k))
            .collect::<Result<Vec<_>>>()?;
        let deltas = self
            .nodes
            .iter()
            .zip(&trusts)
            .map(|(s, t)| s.update_trust_sets(t))
            .collect::<Result<Vec<_>>>()?;
        let corrections: Vec<f64> = self
            .nodes
            .iter()
            .zip(&deltas)
            .map(|(s, d)| s.correction_term(d))
            .collect();
        let sigma_next: Vec<f64> = self.nodes.iter().map(|s| s.advance_running_sum()).collect();
        for (state, &sig) in self.nodes.iter_mut().zip(&sigma_next) {
            state.commit_sigma(sig);
        }

        // Outgoing running sums, with adversarial forging applied before
        // anyone consumes them.
        let mut channels: Vec<(f64, f64)> = sigma_next.iter().map(|&s| (s, s)).collect();
        for (&m, behavior) in &self.scenario.malicious {
            let forged = behavior.forge_sigma(sigma_next[m], k);
            if forged != channels[m] {
                self.first_deviation.entry(m).or_insert(k);
            }
            channels[m] = forged;
        }

        // Receive and step every node. Under concurrent checking there is
        // one physical broadcast reaching everything within two hops, so
        // consensus consumes the same channel the checks read; otherwise
        // the one-hop channel carries the protocol.
        let concurrent = matches!(self.scenario.trust_mode, TrustMode::Concurrent);
        let mut x_next = vec![0.0; n];
        for j in 0..n {
            let received: BTreeMap<NodeId, f64> = self.nodes[j]
                .nbrs
                .iter()
                .map(|i| (i, if concurrent { channels[i].1 } else { channels[i].0 }))
                .collect();
            let mu_next = self.nodes[j].update_mu(&deltas[j], &received)?;
            x_next[j] = self.nodes[j].step_value(&deltas[j], &mu_next, corrections[j]);
            self.nodes[j].commit_round(mu_next, x_next[j], trusts[j].clone());
        }

        // Adversarial value offsets, written back into internal state so
        // the next running sum stays consistent with the transmission.
        for (&m, behavior) in &self.scenario.malicious {
            let rng = self.adv_rngs.get_mut(&m).expect("rng per adversary");
            if let Some(offset) = behavior.value_offset(k, rng) {
                if offset != 0.0 {
                    self.first_deviation.entry(m).or_insert(k);
                }
                self.nodes[m].x += offset;
            }
        }

        let msgs_now: RoundMessages = (0..n)
            .map(|j| NodeMessage {
                broadcast: Broadcast {
                    sender: j,
                    sigma_next: channels[j].0,
                    x_next: self.nodes[j].x,
                    trust_set: trusts[j].clone(),
                },
                sigma_twohop: channels[j].1,
            })
            .collect();

        let round_events = match self.scenario.trust_mode {
            TrustMode::Oracle(_) => Vec::new(),
            TrustMode::Concurrent => self.checking_phase(k, &msgs_now, None)?,
            TrustMode::Infrequent {
                check_probability,
                seed,
            } => {
                let responders = self.draw_responders(k, check_probability, seed)?;
                self.checking_phase(k, &msgs_now, Some(&responders))?
            }
        };

        for j in 0..n {
            self.rows.push(NodeRow {
                round: k + 1,
                node: j,
                x: self.nodes[j].x,
                sigma: self.nodes[j].sigma,
                trust_set: trusts[j].clone(),
                verdicts: round_events
                    .iter()
                    .filter(|e| e.observer == j)
                    .cloned()
                    .collect(),
            });
        }
        self.events.extend(round_events);
        if let Some(log) = &mut self.message_log {
            log.push(msgs_now.clone());
        }
        self.msgs_prev = msgs_now;
        self.round += 1;
        Ok(())
    }

    /// Nodes whose two-hop running sums are on the air this round: every
    /// initiator's two-hop neighborhood plus the initiator itself.
    fn draw_responders(&self, k: u64, p: f64, seed: u64) -> Result<Option<NodeSet>> {
        let n = self.scenario.graph.node_count();
        let mut responders = NodeSet::new();
        let mut any = false;
        for j in 0..n {
            if self.is_labeled_malicious(j) {
                continue;
            }
            if unit_f64(&[seed, STREAM_CHECK, k, j as u64]) < p {
                any = true;
                responders.insert(j);
                responders = responders.union(&self.scenario.graph.two_hop_set(j)?);
            }
        }
        Ok(if any { Some(responders) } else { None })
    }

    /// Run the per-round classification for every honest observer over
    /// each of its neighbors. Under concurrent checking (`responders`
    /// `None`) full parity evidence exists every round; under infrequent
    /// checking numeric evidence exists only for subjects covered by this
    /// round's two-hop responses, while trust-report rules always apply.
    fn checking_phase(
        &mut self,
        k: u64,
        msgs_now: &RoundMessages,
        responders: Option<&Option<NodeSet>>,
    ) -> Result<Vec<VerdictEvent>> {
        let n = self.scenario.graph.node_count();
        let graph = &self.scenario.graph;
        let mode = match responders {
            None => CheckingMode::Concurrent,
            Some(_) => CheckingMode::Infrequent,
        };
        let mut events = Vec::new();

        // Trust-set growth is suspicious under concurrent checking but is
        // not a verdict there; surface it as a warning.
        if mode == CheckingMode::Concurrent {
            for s in 0..n {
                let prev = &self.msgs_prev[s].broadcast.trust_set;
                let now = &msgs_now[s].broadcast.trust_set;
                if !now.is_subset(prev) {
                    self.trust_growth_warnings
                        .push(TrustGrowthWarning { round: k, node: s });
                }
            }
        }

        for observer in 0..n {
            if self.is_labeled_malicious(observer) {
                continue;
            }
            for subject in graph.neighbors(observer)?.clone().iter() {
                let prior = self
                    .verdicts
                    .get(&(observer, subject))
                    .cloned()
                    .unwrap_or_default();
                if prior.verdict.status == VerdictStatus::Malicious {
                    continue;
                }

                let checks = match responders {
                    None => {
                        let ev = self.build_evidence(observer, subject, msgs_now)?;
                        let (p, q) = concurrent_check(&ev, n)?;
                        Some(CheckValues {
                            p: Some(p),
                            q: Some(q),
                            r: None,
                            s: None,
                            scale: ev.scale(),
                        })
                    }
                    Some(None) => None,
                    Some(Some(responders)) => {
                        let nbrs = graph.neighbors(subject)?;
                        if responders.contains(subject) && nbrs.is_subset(responders) {
                            let ev = self.build_evidence(observer, subject, msgs_now)?;
                            let (p, q, r, s) = infrequent_check(&ev, n)?;
                            Some(CheckValues {
                                p: Some(p),
                                q: Some(q),
                                r: Some(r),
                                s: Some(s),
                                scale: ev.scale(),
                            })
                        } else if responders.contains(subject) {
                            // The subject answered, but part of its
                            // neighborhood is out of earshot: only the
                            // channel-agreement check is possible.
                            let s = sigma_channel_mismatch(
                                self.msgs_prev[subject].broadcast.sigma_next,
                                msgs_now[subject].broadcast.sigma_next,
                                self.msgs_prev[subject].sigma_twohop,
                                msgs_now[subject].sigma_twohop,
                            );
                            let scale = msgs_now[subject]
                                .sigma_twohop
                                .abs()
                                .max(msgs_now[subject].broadcast.sigma_next.abs());
                            Some(CheckValues {
                                p: None,
                                q: None,
                                r: None,
                                s: Some(s),
                                scale,
                            })
                        } else {
                            None
                        }
                    }
                };

                let next = classify(
                    &prior,
                    &self.msgs_prev[subject].broadcast.trust_set,
                    &msgs_now[subject].broadcast.trust_set,
                    checks.as_ref(),
                    mode,
                    observer,
                    graph.neighbors(subject)?.len(),
                    k,
                    BASE_EPS,
                );
                if next.verdict != prior.verdict || next.pending_since != prior.pending_since {
                    if next.verdict.status == VerdictStatus::Malicious {
                        self.detections
                            .entry(subject)
                            .or_default()
                            .insert(observer, k);
                    }
                    if next.verdict != prior.verdict {
                        events.push(VerdictEvent {
                            round: k,
                            observer,
                            subject,
                            status: next.verdict.status,
                            reason: next.verdict.reason,
                        });
                    }
                }
                self.verdicts.insert((observer, subject), next);
            }
        }
        Ok(events)
    }

    /// Assemble the evidence an observer holds about a neighbor from the
    /// previous and current round's messages.
    fn build_evidence(
        &self,
        observer: NodeId,
        subject: NodeId,
        msgs_now: &RoundMessages,
    ) -> Result<CheckEvidence> {
        let nbrs = self.scenario.graph.neighbors(subject)?;
        let prev = &self.msgs_prev[subject];
        let now = &msgs_now[subject];
        Ok(CheckEvidence {
            subject,
            observer,
            subject_x_prev: prev.broadcast.x_next,
            subject_x_now: now.broadcast.x_next,
            subject_sigma_prev: prev.sigma_twohop,
            subject_sigma_now: now.sigma_twohop,
            subject_trust_prev: prev.broadcast.trust_set.clone(),
            subject_trust_now: now.broadcast.trust_set.clone(),
            subject_x0: self.scenario.initial_values[subject],
            nbr_sigma_prev: nbrs
                .iter()
                .map(|l| (l, self.msgs_prev[l].sigma_twohop))
                .collect(),
            nbr_sigma_now: nbrs.iter().map(|l| (l, msgs_now[l].sigma_twohop)).collect(),
            onehop_sigma_prev: prev.broadcast.sigma_next,
            onehop_sigma_now: now.broadcast.sigma_next,
        })
    }

    /// Finish the run: compute the summary and hand back the trace.
    pub fn into_trace(self) -> Result<Trace> {
        let scenario = self.scenario;
        let label_target = average_over(&scenario.initial_values, &scenario.label_trustworthy())?;
        let behavior_target =
            average_over(&scenario.initial_values, &scenario.behavior_trustworthy())?;
        let target_used = trustworthy_average(scenario)?;
        let metrics = convergence_metrics(
            &self.rows,
            &scenario.label_trustworthy(),
            target_used,
            scenario.convergence_tol,
        );
        let summary = Summary {
            label_target,
            behavior_target,
            target_used,
            converged: metrics.converged,
            rounds_to_tolerance: metrics.round,
            max_error_final: metrics.max_error_final,
            detections: self.detections,
            first_deviation: self.first_deviation,
            assumption_report: self.assumption_report,
            trust_growth_warnings: self.trust_growth_warnings,
        };
        Ok(Trace {
            rows: self.rows,
            events: self.events,
            summary,
        })
    }

    pub fn take_message_log(&mut self) -> Option<Vec<RoundMessages>> {
        self.message_log.take()
    }

    /// Trust deltas every node would compute for round `k` given its
    /// current state; exposed for invariant-style auditing in tests.
    pub fn current_trust_deltas(&self, k: u64) -> Result<Vec<TrustDelta>> {
        (0..self.scenario.graph.node_count())
            .map(|j| self.nodes[j].update_trust_sets(&self.trust_input(j, k)?))
            .collect()
    }
}

/// Run a scenario to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<Trace> {
    let mut sim = Simulation::new(scenario)?;
    for _ in 0..scenario.max_rounds {
        sim.run_round()?;
    }
    sim.into_trace()
}

/// Run a scenario while recording every round's full message set.
pub fn run_scenario_recording(scenario: &Scenario) -> Result<(Trace, Vec<RoundMessages>)> {
    let mut sim = Simulation::new(scenario)?;
    sim.record_messages();
    for _ in 0..scenario.max_rounds {
        sim.run_round()?;
    }
    let log = sim.take_message_log().unwrap_or_default();
    Ok((sim.into_trace()?, log))
}
