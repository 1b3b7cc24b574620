use thiserror::Error;

use crate::graph::NodeId;

/// Errors raised while building graphs, stepping node state, or running
/// scenarios. Assumption violations are deliberately *not* errors; they are
/// reported through [`crate::graph::AssumptionReport`] so counterexample
/// scenarios stay runnable.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(NodeId),
    #[error("node id {node} out of range for graph of {count} nodes")]
    NodeOutOfRange { node: NodeId, count: usize },
    #[error("node {0} is absent from this (induced) graph")]
    NodeAbsent(NodeId),

    #[error("node {0} listed among its own neighbors")]
    SelfNeighbor(NodeId),
    #[error("node count {n_total} too small for node {id} with {nbrs} neighbors")]
    NodeCountTooSmall {
        id: NodeId,
        nbrs: usize,
        n_total: usize,
    },
    #[error("trust set for node {0} does not contain the node itself")]
    TrustMissingSelf(NodeId),
    #[error("missing running sum from neighbor {0}")]
    MissingNeighborSigma(NodeId),

    #[error("custom trust table has no entry for round {round}, node {node}")]
    CustomTableMissing { round: u64, node: NodeId },
    #[error("check evidence for subject {subject} is missing two-hop running sum of {nbr}")]
    MissingTwoHopSigma { subject: NodeId, nbr: NodeId },

    #[error("initial values length {got} does not match node count {expected}")]
    InitialValuesLength { expected: usize, got: usize },
    #[error("initial value at index {0} is not finite")]
    NonFiniteInitialValue(usize),
    #[error("malicious node id {0} out of range")]
    MaliciousOutOfRange(NodeId),
    #[error("unfair-declare victim {victim} is not a neighbor of node {node}")]
    VictimNotNeighbor { node: NodeId, victim: NodeId },
    #[error("check probability {0} must lie in (0, 1]")]
    CheckProbabilityRange(f64),
    #[error("trustworthy set is empty")]
    EmptyTrustworthySet,
    #[error("random-offset amplitude {0} must be positive")]
    NonPositiveAmplitude(f64),
}
