//! Malicious-node behavior models. A malicious node runs the honest state
//! machine internally; its behavior doctors the trust set it feeds that
//! machine and/or forges the messages it emits.
//!
//! The transforms hook into two points of the round pipeline: trust input
//! and outgoing running sums are doctored before neighbors consume them,
//! and value offsets are applied after the node computes its update (and
//! written back into its internal state, so later running sums stay
//! consistent with what was transmitted).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId, NodeSet};
use crate::{Error, Result};

/// What a node labeled malicious actually does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Behavior {
    /// Follows the protocol exactly; malicious only by label.
    HonestDespiteLabel,
    /// Adds a fresh uniform draw from `(-amplitude, amplitude)` to its
    /// value every round. The offset propagates into later running sums,
    /// so one-hop reports stay self-consistent.
    RandomOffset {
        amplitude: f64,
        /// Extra stream key; the stream is always also keyed by the
        /// scenario seed and node id.
        seed: Option<u64>,
    },
    /// Inflates every transmitted running sum (both channels) by `delta`
    /// from `start_round` on, while updating its value honestly.
    SigmaForge { delta: f64, start_round: u64 },
    /// Reports honest running sums one-hop but inflates the two-hop
    /// channel by `delta` from `start_round` on.
    TwoHopMismatch { delta: f64, start_round: u64 },
    /// Drops `victim` from its reported trust set from `start_round` on
    /// and computes every numeric update honestly under that reduced set.
    UnfairDeclare { victim: NodeId, start_round: u64 },
    /// Behaves honestly until `honest_until`, then acts as `then`.
    DelayedMisbehavior {
        honest_until: u64,
        then: Box<Behavior>,
    },
}

impl Behavior {
    /// Structural validation against the scenario graph.
    pub fn validate(&self, node: NodeId, graph: &Graph) -> Result<()> {
        match self {
            Behavior::RandomOffset { amplitude, .. } => {
                if *amplitude <= 0.0 {
                    return Err(Error::NonPositiveAmplitude(*amplitude));
                }
            }
            Behavior::UnfairDeclare { victim, .. } => {
                if !graph.neighbors(node)?.contains(*victim) {
                    return Err(Error::VictimNotNeighbor {
                        node,
                        victim: *victim,
                    });
                }
            }
            Behavior::DelayedMisbehavior { then, .. } => then.validate(node, graph)?,
            Behavior::HonestDespiteLabel
            | Behavior::SigmaForge { .. }
            | Behavior::TwoHopMismatch { .. } => {}
        }
        Ok(())
    }

    /// Doctor the trust set fed into the node's own state machine (and
    /// reported to its neighbors) at round `k`.
    pub fn doctor_trust(&self, trust: &mut NodeSet, k: u64) {
        match self {
            Behavior::UnfairDeclare {
                victim,
                start_round,
            } if k >= *start_round => {
                trust.remove(*victim);
            }
            Behavior::DelayedMisbehavior { honest_until, then } if k >= *honest_until => {
                then.doctor_trust(trust, k);
            }
            _ => {}
        }
    }

    /// Transform the honestly computed running sum for round `k` into the
    /// `(one_hop, two_hop)` pair actually transmitted.
    pub fn forge_sigma(&self, sigma_next: f64, k: u64) -> (f64, f64) {
        match self {
            Behavior::SigmaForge { delta, start_round } if k >= *start_round => {
                (sigma_next + delta, sigma_next + delta)
            }
            Behavior::TwoHopMismatch { delta, start_round } if k >= *start_round => {
                (sigma_next, sigma_next + delta)
            }
            Behavior::DelayedMisbehavior { honest_until, then } if k >= *honest_until => {
                then.forge_sigma(sigma_next, k)
            }
            _ => (sigma_next, sigma_next),
        }
    }

    /// Value offset to inject at round `k`, drawn from the node's stream.
    pub fn value_offset(&self, k: u64, rng: &mut ChaCha8Rng) -> Option<f64> {
        match self {
            Behavior::RandomOffset { amplitude, .. } => Some(rng.gen_range(-amplitude..*amplitude)),
            Behavior::DelayedMisbehavior { honest_until, then } if k >= *honest_until => {
                then.value_offset(k, rng)
            }
            _ => None,
        }
    }

    /// Extra key material for the node's random stream.
    pub fn stream_seed(&self) -> u64 {
        match self {
            Behavior::RandomOffset { seed, .. } => seed.unwrap_or(0),
            Behavior::DelayedMisbehavior { then, .. } => then.stream_seed(),
            _ => 0,
        }
    }

    /// First round at which this behavior emits numerically incorrect
    /// values, if it ever does. Label-only and unfair-declare behaviors
    /// never do: their updates are correct under their reported trust
    /// sets, so their initial values stay in the computed average.
    pub fn first_deviation_round(&self) -> Option<u64> {
        match self {
            Behavior::HonestDespiteLabel | Behavior::UnfairDeclare { .. } => None,
            Behavior::RandomOffset { .. } => Some(0),
            Behavior::SigmaForge { start_round, .. }
            | Behavior::TwoHopMismatch { start_round, .. } => Some(*start_round),
            Behavior::DelayedMisbehavior { honest_until, then } => then
                .first_deviation_round()
                .map(|r| r.max(*honest_until)),
        }
    }
}
