//! The on-disk scenario format: a TOML document mirroring
//! [`Scenario`]. Unknown keys are rejected; semantic problems name the
//! offending field.
//!
//! ```toml
//! n = 5
//! edges = [[0, 1], [1, 2], [2, 3], [3, 0], [3, 4]]
//! x0 = [1.0, 2.0, 3.0, 4.0, 5.0]
//! seed = 7
//! max_rounds = 500        # optional, default 2000
//! tol = 1e-6              # optional, default 1e-6
//!
//! [trust_mode]
//! mode = "oracle"         # oracle | concurrent | infrequent
//! schedule = "random_until"
//! settle_round = 21
//!
//! [malicious.4]
//! kind = "random_offset"
//! amplitude = 1.0
//! ```

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use trustavg_core::engine::{DEFAULT_CONVERGENCE_TOL, DEFAULT_MAX_ROUNDS};
use trustavg_core::{Behavior, Graph, NodeId, NodeSet, Scenario, ScheduleMode, TrustMode};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n: usize,
    edges: Vec<(usize, usize)>,
    x0: Vec<f64>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_rounds: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    trust_mode: TrustModeSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    malicious: BTreeMap<String, BehaviorSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrustModeSpec {
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    settle_round: Option<u64>,
    /// Stream seed for schedule draws or check scheduling; defaults to the
    /// scenario seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check_probability: Option<f64>,
    /// Custom schedule: round -> node -> trusted ids.
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<BTreeMap<String, BTreeMap<String, Vec<usize>>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorSpec {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start_round: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    victim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    honest_until: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    then: Option<Box<BehaviorSpec>>,
}

fn parse_key(key: &str, what: &str) -> Result<usize> {
    key.parse::<usize>()
        .with_context(|| format!("{what} key `{key}` is not a node id"))
}

fn reject_unused<T>(field: &Option<T>, name: &str, mode: &str) -> Result<()> {
    if field.is_some() {
        bail!("field `{name}` is not applicable to trust mode `{mode}`");
    }
    Ok(())
}

fn build_trust_mode(spec: &TrustModeSpec, scenario_seed: u64) -> Result<TrustMode> {
    match spec.mode.as_str() {
        "oracle" => {
            reject_unused(&spec.check_probability, "check_probability", "oracle")?;
            let schedule = spec
                .schedule
                .as_deref()
                .context("oracle trust mode requires `schedule`")?;
            let mode = match schedule {
                "correct_from_start" => {
                    reject_unused(&spec.settle_round, "settle_round", "correct_from_start")?;
                    reject_unused(&spec.table, "table", "correct_from_start")?;
                    ScheduleMode::CorrectFromStart
                }
                "random_until" => {
                    reject_unused(&spec.table, "table", "random_until")?;
                    ScheduleMode::RandomUntil {
                        settle_round: spec
                            .settle_round
                            .context("schedule `random_until` requires `settle_round`")?,
                        seed: spec.seed.unwrap_or(scenario_seed),
                    }
                }
                "custom" => {
                    reject_unused(&spec.settle_round, "settle_round", "custom")?;
                    let raw = spec
                        .table
                        .as_ref()
                        .context("schedule `custom` requires `table`")?;
                    let mut table = BTreeMap::new();
                    for (round_key, per_node) in raw {
                        let round: u64 = round_key
                            .parse()
                            .with_context(|| format!("table key `{round_key}` is not a round"))?;
                        let mut row = BTreeMap::new();
                        for (node_key, ids) in per_node {
                            let node = parse_key(node_key, "table")?;
                            row.insert(node, ids.iter().copied().collect::<NodeSet>());
                        }
                        table.insert(round, row);
                    }
                    ScheduleMode::Custom { table }
                }
                other => bail!("unknown oracle schedule `{other}`"),
            };
            Ok(TrustMode::Oracle(mode))
        }
        "concurrent" => {
            for (field, name) in [
                (spec.schedule.is_some(), "schedule"),
                (spec.settle_round.is_some(), "settle_round"),
                (spec.seed.is_some(), "seed"),
                (spec.check_probability.is_some(), "check_probability"),
                (spec.table.is_some(), "table"),
            ] {
                if field {
                    bail!("field `{name}` is not applicable to trust mode `concurrent`");
                }
            }
            Ok(TrustMode::Concurrent)
        }
        "infrequent" => {
            reject_unused(&spec.schedule, "schedule", "infrequent")?;
            reject_unused(&spec.settle_round, "settle_round", "infrequent")?;
            reject_unused(&spec.table, "table", "infrequent")?;
            Ok(TrustMode::Infrequent {
                check_probability: spec
                    .check_probability
                    .context("infrequent trust mode requires `check_probability`")?,
                seed: spec.seed.unwrap_or(scenario_seed),
            })
        }
        other => bail!("unknown trust mode `{other}`"),
    }
}

fn build_behavior(spec: &BehaviorSpec, node: NodeId) -> Result<Behavior> {
    let used = |cond: bool, name: &str| -> Result<()> {
        if cond {
            bail!(
                "field `{name}` is not applicable to behavior `{}` (node {node})",
                spec.kind
            );
        }
        Ok(())
    };
    let behavior = match spec.kind.as_str() {
        "honest_despite_label" => {
            used(spec.amplitude.is_some(), "amplitude")?;
            used(spec.delta.is_some(), "delta")?;
            used(spec.start_round.is_some(), "start_round")?;
            used(spec.victim.is_some(), "victim")?;
            Behavior::HonestDespiteLabel
        }
        "random_offset" => {
            used(spec.delta.is_some(), "delta")?;
            used(spec.victim.is_some(), "victim")?;
            Behavior::RandomOffset {
                amplitude: spec
                    .amplitude
                    .with_context(|| format!("random_offset on node {node} requires `amplitude`"))?,
                seed: spec.seed,
            }
        }
        "sigma_forge" | "two_hop_mismatch" => {
            used(spec.amplitude.is_some(), "amplitude")?;
            used(spec.victim.is_some(), "victim")?;
            let delta = spec
                .delta
                .with_context(|| format!("{} on node {node} requires `delta`", spec.kind))?;
            let start_round = spec.start_round.unwrap_or(0);
            if spec.kind == "sigma_forge" {
                Behavior::SigmaForge { delta, start_round }
            } else {
                Behavior::TwoHopMismatch { delta, start_round }
            }
        }
        "unfair_declare" => {
            used(spec.amplitude.is_some(), "amplitude")?;
            used(spec.delta.is_some(), "delta")?;
            Behavior::UnfairDeclare {
                victim: spec
                    .victim
                    .with_context(|| format!("unfair_declare on node {node} requires `victim`"))?,
                start_round: spec.start_round.unwrap_or(0),
            }
        }
        "delayed_misbehavior" => {
            let inner = spec
                .then
                .as_ref()
                .with_context(|| format!("delayed_misbehavior on node {node} requires `then`"))?;
            Behavior::DelayedMisbehavior {
                honest_until: spec.honest_until.with_context(|| {
                    format!("delayed_misbehavior on node {node} requires `honest_until`")
                })?,
                then: Box::new(build_behavior(inner, node)?),
            }
        }
        other => bail!("unknown behavior kind `{other}` for node {node}"),
    };
    if spec.kind != "delayed_misbehavior" {
        if spec.then.is_some() {
            bail!("field `then` is only applicable to delayed_misbehavior (node {node})");
        }
        if spec.honest_until.is_some() {
            bail!("field `honest_until` is only applicable to delayed_misbehavior (node {node})");
        }
    }
    Ok(behavior)
}

/// Parse a scenario document, filling defaults and validating structure.
/// Assumption violations are allowed; structural problems are errors.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).context("scenario parse error")?;
    let graph = Graph::new(file.n, &file.edges).context("invalid `edges`")?;
    let mut malicious = BTreeMap::new();
    for (key, spec) in &file.malicious {
        let id = parse_key(key, "malicious")?;
        malicious.insert(id, build_behavior(spec, id)?);
    }
    let scenario = Scenario {
        graph,
        initial_values: file.x0,
        malicious,
        trust_mode: build_trust_mode(&file.trust_mode, file.seed)?,
        max_rounds: file.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS),
        convergence_tol: file.tol.unwrap_or(DEFAULT_CONVERGENCE_TOL),
        seed: file.seed,
    };
    scenario.validate().context("invalid scenario")?;
    Ok(scenario)
}

fn behavior_spec(behavior: &Behavior) -> BehaviorSpec {
    match behavior {
        Behavior::HonestDespiteLabel => BehaviorSpec {
            kind: "honest_despite_label".into(),
            ..Default::default()
        },
        Behavior::RandomOffset { amplitude, seed } => BehaviorSpec {
            kind: "random_offset".into(),
            amplitude: Some(*amplitude),
            seed: *seed,
            ..Default::default()
        },
        Behavior::SigmaForge { delta, start_round } => BehaviorSpec {
            kind: "sigma_forge".into(),
            delta: Some(*delta),
            start_round: Some(*start_round),
            ..Default::default()
        },
        Behavior::TwoHopMismatch { delta, start_round } => BehaviorSpec {
            kind: "two_hop_mismatch".into(),
            delta: Some(*delta),
            start_round: Some(*start_round),
            ..Default::default()
        },
        Behavior::UnfairDeclare {
            victim,
            start_round,
        } => BehaviorSpec {
            kind: "unfair_declare".into(),
            victim: Some(*victim),
            start_round: Some(*start_round),
            ..Default::default()
        },
        Behavior::DelayedMisbehavior { honest_until, then } => BehaviorSpec {
            kind: "delayed_misbehavior".into(),
            honest_until: Some(*honest_until),
            then: Some(Box::new(behavior_spec(then))),
            ..Default::default()
        },
    }
}

/// Render a scenario back into the document format.
/// `parse_scenario(&serialize_scenario(s))` reproduces `s` exactly.
pub fn serialize_scenario(scenario: &Scenario) -> Result<String> {
    let trust_mode = match &scenario.trust_mode {
        TrustMode::Oracle(ScheduleMode::CorrectFromStart) => TrustModeSpec {
            mode: "oracle".into(),
            schedule: Some("correct_from_start".into()),
            ..Default::default()
        },
        TrustMode::Oracle(ScheduleMode::RandomUntil { settle_round, seed }) => TrustModeSpec {
            mode: "oracle".into(),
            schedule: Some("random_until".into()),
            settle_round: Some(*settle_round),
            seed: Some(*seed),
            ..Default::default()
        },
        TrustMode::Oracle(ScheduleMode::Custom { table }) => TrustModeSpec {
            mode: "oracle".into(),
            schedule: Some("custom".into()),
            table: Some(
                table
                    .iter()
                    .map(|(round, row)| {
                        (
                            round.to_string(),
                            row.iter()
                                .map(|(node, set)| (node.to_string(), set.iter().collect()))
                                .collect(),
                        )
                    })
                    .collect(),
            ),
            ..Default::default()
        },
        TrustMode::Concurrent => TrustModeSpec {
            mode: "concurrent".into(),
            ..Default::default()
        },
        TrustMode::Infrequent {
            check_probability,
            seed,
        } => TrustModeSpec {
            mode: "infrequent".into(),
            check_probability: Some(*check_probability),
            seed: Some(*seed),
            ..Default::default()
        },
    };
    let file = ScenarioFile {
        n: scenario.graph.node_count(),
        edges: scenario.graph.edges().collect(),
        x0: scenario.initial_values.clone(),
        seed: scenario.seed,
        max_rounds: Some(scenario.max_rounds),
        tol: Some(scenario.convergence_tol),
        trust_mode,
        malicious: scenario
            .malicious
            .iter()
            .map(|(id, b)| (id.to_string(), behavior_spec(b)))
            .collect(),
    };
    Ok(toml::to_string_pretty(&file)?)
}

/// Override every seed in the scenario (run seed plus any schedule or
/// check-draw streams) with `seed`; used by `--seed` and sweeps.
pub fn reseed(scenario: &mut Scenario, seed: u64) {
    scenario.seed = seed;
    match &mut scenario.trust_mode {
        TrustMode::Oracle(ScheduleMode::RandomUntil { seed: s, .. }) => *s = seed,
        TrustMode::Infrequent { seed: s, .. } => *s = seed,
        _ => {}
    }
}
