//! The honest-node state machine: one synchronous iteration of the
//! running-sum averaging algorithm with trust-based add/remove
//! compensation, decomposed into auditable sub-operations.
//!
//! Per round, with `N` the total node count and `x`, `sigma` the node's
//! value and cumulative running sum, an honest node:
//!
//! 1. intersects the fresh trust set with its neighborhood
//!    ([`NodeState::update_trust_sets`]),
//! 2. computes the compensation term from the trust-set change, reading
//!    the *current* running sum ([`NodeState::correction_term`]),
//! 3. advances and broadcasts its running sum
//!    ([`NodeState::advance_running_sum`]),
//! 4. receives every neighbor's running sum and rebuilds its per-neighbor
//!    table, zeroing distrusted senders ([`NodeState::update_mu`]),
//! 5. steps its value ([`NodeState::step_value`]).
//!
//! Zeroing a neighbor's table entry subtracts that neighbor's entire past
//! contribution in one step; the correction term simultaneously reclaims
//! the messages this node had sent to it, so removal (and symmetric
//! re-admission) leaves the trustworthy sum intact.

use std::collections::BTreeMap;

use crate::graph::{NodeId, NodeSet};
use crate::{Error, Result};

/// Full per-node state for one honest participant.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    /// Initial value; enters the trustworthy average.
    pub x0: f64,
    /// Current value x[k].
    pub x: f64,
    /// Cumulative running sum sigma[k] = x[0] + ... + x[k-1].
    pub sigma: f64,
    /// sigma[k-1], retained one step for infrequent checking.
    pub prev_sigma: f64,
    /// Last accepted running sum per neighbor; zero while distrusted.
    pub mu: BTreeMap<NodeId, f64>,
    /// Trust set used in the previous round.
    pub prev_trust: NodeSet,
    /// Fixed one-hop neighborhood.
    pub nbrs: NodeSet,
    pub n_total: usize,
}

/// Outcome of intersecting a fresh trust set with the neighborhood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustDelta {
    /// Trusted neighbors this round.
    pub active_nbrs: NodeSet,
    /// `active_nbrs.len()`, the effective degree.
    pub degree: usize,
    /// Neighbors that just lost trust.
    pub dropped: NodeSet,
    /// Neighbors that just regained trust.
    pub added: NodeSet,
}

/// One node's outgoing one-hop message for a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Broadcast {
    pub sender: NodeId,
    /// Running sum sigma[k+1] as transmitted.
    pub sigma_next: f64,
    /// Value x[k+1] as transmitted.
    pub x_next: f64,
    /// The trust set the sender reports for round k.
    pub trust_set: NodeSet,
}

impl NodeState {
    /// Fresh state: x = x0, sigma = 0, empty per-neighbor table, full
    /// initial trust.
    pub fn new(id: NodeId, x0: f64, nbrs: NodeSet, n_total: usize) -> Result<NodeState> {
        if nbrs.contains(id) {
            return Err(Error::SelfNeighbor(id));
        }
        if n_total < nbrs.len() + 1 {
            return Err(Error::NodeCountTooSmall {
                id,
                nbrs: nbrs.len(),
                n_total,
            });
        }
        let mu = nbrs.iter().map(|i| (i, 0.0)).collect();
        Ok(NodeState {
            id,
            x0,
            x: x0,
            sigma: 0.0,
            prev_sigma: 0.0,
            mu,
            prev_trust: NodeSet::all(n_total),
            nbrs,
            n_total,
        })
    }

    /// Split the fresh trust set into active neighbors and the
    /// dropped/added deltas relative to the previous round.
    pub fn update_trust_sets(&self, trust_now: &NodeSet) -> Result<TrustDelta> {
        if !trust_now.contains(self.id) {
            return Err(Error::TrustMissingSelf(self.id));
        }
        let active_nbrs = self.nbrs.intersection(trust_now);
        let dropped = self.nbrs.intersection(&self.prev_trust.difference(trust_now));
        let added = self.nbrs.intersection(&trust_now.difference(&self.prev_trust));
        Ok(TrustDelta {
            degree: active_nbrs.len(),
            active_nbrs,
            dropped,
            added,
        })
    }

    /// sigma[k+1] = sigma[k] + x[k]. The caller commits it via
    /// [`NodeState::commit_sigma`], which retains sigma[k] one step.
    pub fn advance_running_sum(&self) -> f64 {
        self.sigma + self.x
    }

    /// Compensation for trust-set changes:
    /// `(|dropped| - |added|) * sigma[k] / N`.
    ///
    /// Must read sigma[k], i.e. run before `commit_sigma`.
    pub fn correction_term(&self, delta: &TrustDelta) -> f64 {
        (delta.dropped.len() as f64 - delta.added.len() as f64) * self.sigma / self.n_total as f64
    }

    /// Rebuild the per-neighbor running-sum table from this round's
    /// received values: trusted senders keep their reported sum, all
    /// others are zeroed. `received` must cover the whole neighborhood
    /// (every transmission arrives).
    pub fn update_mu(
        &self,
        delta: &TrustDelta,
        received: &BTreeMap<NodeId, f64>,
    ) -> Result<BTreeMap<NodeId, f64>> {
        let mut next = BTreeMap::new();
        for i in self.nbrs.iter() {
            let &sigma_i = received.get(&i).ok_or(Error::MissingNeighborSigma(i))?;
            next.insert(i, if delta.active_nbrs.contains(i) { sigma_i } else { 0.0 });
        }
        Ok(next)
    }

    /// x[k+1] = (1 - D/N) x[k] + (1/N) sum_i (mu'[i] - mu[i]) + e.
    pub fn step_value(&self, delta: &TrustDelta, mu_next: &BTreeMap<NodeId, f64>, e: f64) -> f64 {
        let n = self.n_total as f64;
        let mut acc = (1.0 - delta.degree as f64 / n) * self.x;
        for i in self.nbrs.iter() {
            acc += (mu_next.get(&i).copied().unwrap_or(0.0) - self.mu[&i]) / n;
        }
        acc + e
    }

    /// Residual of the conservation identity
    /// `x[k] - x0 + (D[k-1]/N) sigma[k] - (1/N) sum_{i active at k-1} sigma_i[k]`,
    /// exactly zero (in real arithmetic) for a node that has followed the
    /// honest update since round 0, no matter how its trust set fluctuated
    /// or what values its neighbors fed it.
    pub fn invariant_residual(
        &self,
        delta_prev: &TrustDelta,
        nbr_sigmas: &BTreeMap<NodeId, f64>,
    ) -> Result<f64> {
        let n = self.n_total as f64;
        let mut sum = 0.0;
        for i in delta_prev.active_nbrs.iter() {
            sum += nbr_sigmas.get(&i).ok_or(Error::MissingNeighborSigma(i))?;
        }
        Ok(self.x - self.x0 + delta_prev.degree as f64 / n * self.sigma - sum / n)
    }

    /// Store sigma[k+1], retaining sigma[k] for one step.
    pub fn commit_sigma(&mut self, sigma_next: f64) {
        self.prev_sigma = self.sigma;
        self.sigma = sigma_next;
    }

    /// Finish the round: adopt the new table, value, and trust set.
    pub fn commit_round(&mut self, mu_next: BTreeMap<NodeId, f64>, x_next: f64, trust_now: NodeSet) {
        self.mu = mu_next;
        self.x = x_next;
        self.prev_trust = trust_now;
    }
}
